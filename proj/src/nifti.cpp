#include "koos/nifti.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "koos/error.hpp"
#include "koos/gzip.hpp"

namespace koos::nifti {

namespace {

// Field offsets in the 348-byte NIfTI-1 header.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;        // short[8]
constexpr std::size_t kOffDatatype = 70;   // short
constexpr std::size_t kOffBitpix = 72;     // short
constexpr std::size_t kOffPixdim = 76;     // float[8]
constexpr std::size_t kOffVoxOffset = 108; // float
constexpr std::size_t kOffSclSlope = 112;  // float
constexpr std::size_t kOffSclInter = 116;  // float
constexpr std::size_t kOffXyztUnits = 123; // char
constexpr std::size_t kOffQformCode = 252; // short
constexpr std::size_t kOffSformCode = 254; // short
constexpr std::size_t kOffQuaternB = 256;  // float
constexpr std::size_t kOffQoffsetX = 268;  // float[3]
constexpr std::size_t kOffSrowX = 280;     // float[4] x 3 rows
constexpr std::size_t kOffMagic = 344;     // char[4]

// Safety cap on decoded volume size; a mutated header must not be able to
// request an absurd allocation.
constexpr std::uint64_t kMaxVoxels = 1ull << 31;

class FieldReader {
public:
    FieldReader(const std::uint8_t* data, bool swap) : data_(data), swap_(swap) {}

    std::uint16_t u16(std::size_t off) const {
        std::uint16_t v;
        std::memcpy(&v, data_ + off, 2);
        return swap_ ? byteswap16(v) : v;
    }
    std::int16_t i16(std::size_t off) const { return static_cast<std::int16_t>(u16(off)); }
    std::uint32_t u32(std::size_t off) const {
        std::uint32_t v;
        std::memcpy(&v, data_ + off, 4);
        return swap_ ? byteswap32(v) : v;
    }
    std::int32_t i32(std::size_t off) const { return static_cast<std::int32_t>(u32(off)); }
    float f32(std::size_t off) const { return std::bit_cast<float>(u32(off)); }

    static std::uint16_t byteswap16(std::uint16_t v) {
        return static_cast<std::uint16_t>((v << 8) | (v >> 8));
    }
    static std::uint32_t byteswap32(std::uint32_t v) {
        return (v << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
    }

private:
    const std::uint8_t* data_;
    bool swap_;
};

int bitpix_for(int datatype) {
    switch (datatype) {
    case kUint8: return 8;
    case kInt16: return 16;
    case kUint16: return 16;
    case kInt32: return 32;
    case kFloat32: return 32;
    default: return 0;
    }
}

Affine4 affine_from_quaternion(const FieldReader& r, const std::array<double, 3>& pixdim,
                               double qfac) {
    double b = r.f32(kOffQuaternB);
    double c = r.f32(kOffQuaternB + 4);
    double d = r.f32(kOffQuaternB + 8);
    if (!std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d))
        fail(Errc::malformed_header, "non-finite quaternion");
    double s = b * b + c * c + d * d;
    if (s > 1.0 + 1e-5) fail(Errc::malformed_header, "quaternion norm exceeds 1");
    double a = std::sqrt(std::max(0.0, 1.0 - s));

    // Rotation per the reference quaternion definition.
    double rot[3][3] = {
        {a * a + b * b - c * c - d * d, 2 * b * c - 2 * a * d, 2 * b * d + 2 * a * c},
        {2 * b * c + 2 * a * d, a * a + c * c - b * b - d * d, 2 * c * d - 2 * a * b},
        {2 * b * d - 2 * a * c, 2 * c * d + 2 * a * b, a * a + d * d - b * b - c * c},
    };

    Affine4 out = Affine4::identity();
    double scale[3] = {pixdim[0], pixdim[1], qfac * pixdim[2]};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out.m[i][j] = rot[i][j] * scale[j];
        out.m[i][3] = r.f32(kOffQoffsetX + 4 * static_cast<std::size_t>(i));
        if (!std::isfinite(out.m[i][3])) fail(Errc::malformed_header, "non-finite qoffset");
    }
    return out;
}

} // namespace

VolumeHeader parse_header(std::span<const std::uint8_t> buffer) {
    if (buffer.size() < kHeaderSize) fail(Errc::malformed_header, "buffer shorter than 348 bytes");

    FieldReader le(buffer.data(), false);
    bool swap = false;
    if (le.i32(kOffSizeofHdr) != 348) {
        FieldReader be(buffer.data(), true);
        if (be.i32(kOffSizeofHdr) != 348)
            fail(Errc::malformed_header, "sizeof_hdr is not 348 in either byte order");
        swap = true;
    }
    FieldReader r(buffer.data(), swap);

    VolumeHeader h;
    h.byte_swapped = swap;
    std::memcpy(h.magic.data(), buffer.data() + kOffMagic, 4);
    if (std::memcmp(h.magic.data(), "ni1\0", 4) == 0)
        fail(Errc::malformed_header, "detached .hdr/.img pairs (magic \"ni1\") are not supported");
    if (std::memcmp(h.magic.data(), "n+1\0", 4) != 0) fail(Errc::malformed_header, "bad magic");

    int rank = r.i16(kOffDim);
    if (rank != 3 && rank != 4) fail(Errc::malformed_header, "only rank-3 volumes are supported");
    if (rank == 4 && r.i16(kOffDim + 8) != 1)
        fail(Errc::malformed_header, "rank-4 volume with a non-singleton 4th axis");

    std::uint64_t voxels = 1;
    for (int axis = 0; axis < 3; ++axis) {
        int extent = r.i16(kOffDim + 2 * (static_cast<std::size_t>(axis) + 1));
        if (extent < 1) fail(Errc::malformed_header, "nonpositive dim");
        h.dims[axis] = extent;
        voxels *= static_cast<std::uint64_t>(extent);

        float spacing = r.f32(kOffPixdim + 4 * (static_cast<std::size_t>(axis) + 1));
        if (!std::isfinite(spacing) || spacing <= 0.0f)
            fail(Errc::malformed_header, "nonpositive pixdim");
        h.pixdim[axis] = spacing;
    }
    if (voxels > kMaxVoxels) fail(Errc::malformed_header, "volume exceeds supported size");

    h.datatype_code = r.i16(kOffDatatype);
    int bitpix = bitpix_for(h.datatype_code);
    if (bitpix == 0) fail(Errc::unsupported_datatype, "datatype " + std::to_string(h.datatype_code));
    if (r.i16(kOffBitpix) != bitpix) fail(Errc::malformed_header, "bitpix does not match datatype");

    float slope = r.f32(kOffSclSlope);
    float inter = r.f32(kOffSclInter);
    if (!std::isfinite(slope) || !std::isfinite(inter))
        fail(Errc::malformed_header, "non-finite scl_slope/scl_inter");
    h.scl_slope = slope;
    h.scl_inter = inter;

    float vox_offset = r.f32(kOffVoxOffset);
    if (!std::isfinite(vox_offset) || vox_offset < 348.0f || vox_offset > 1e12f ||
        vox_offset != std::floor(vox_offset))
        fail(Errc::malformed_header, "bad vox_offset");
    h.vox_offset = static_cast<std::int64_t>(vox_offset);

    // Affine preference: sform, then qform, then plain pixdim diagonal.
    if (r.i16(kOffSformCode) > 0) {
        h.affine = Affine4::identity();
        for (int row = 0; row < 3; ++row)
            for (int col = 0; col < 4; ++col) {
                double v = r.f32(kOffSrowX + 16 * static_cast<std::size_t>(row) +
                                 4 * static_cast<std::size_t>(col));
                if (!std::isfinite(v)) fail(Errc::malformed_header, "non-finite srow entry");
                h.affine.m[row][col] = v;
            }
    } else if (r.i16(kOffQformCode) > 0) {
        float qfac_raw = r.f32(kOffPixdim);
        double qfac = (std::isfinite(qfac_raw) && qfac_raw < 0.0f) ? -1.0 : 1.0;
        h.affine = affine_from_quaternion(r, h.pixdim, qfac);
    } else {
        h.affine = Affine4::diagonal({h.pixdim[0], h.pixdim[1], h.pixdim[2]});
    }
    if (!h.affine.invertible()) fail(Errc::malformed_header, "singular affine");

    return h;
}

LabelVolume read_volume(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> inflated;
    if (gz::is_gzip(bytes)) {
        inflated = gz::decompress(bytes);
        bytes = inflated;
    }

    VolumeHeader h = parse_header(bytes);
    std::size_t nvox = static_cast<std::size_t>(h.dims[0]) * h.dims[1] * h.dims[2];
    std::size_t elem = static_cast<std::size_t>(bitpix_for(h.datatype_code)) / 8;
    if (static_cast<std::uint64_t>(h.vox_offset) + nvox * elem > bytes.size())
        fail(Errc::truncated_data, "stream ends before the last voxel");

    FieldReader r(bytes.data() + h.vox_offset, h.byte_swapped);
    bool rescale = h.scl_slope != 0.0 && h.scl_slope != 1.0;

    LabelVolume vol;
    vol.dims = h.dims;
    vol.spacing = h.pixdim;
    vol.affine = h.affine;
    vol.labels.resize(nvox);

    for (std::size_t i = 0; i < nvox; ++i) {
        double value;
        switch (h.datatype_code) {
        case kUint8: value = bytes[h.vox_offset + i]; break;
        case kInt16: value = r.i16(i * 2); break;
        case kUint16: value = r.u16(i * 2); break;
        case kInt32: value = r.i32(i * 4); break;
        default: value = r.f32(i * 4); break;
        }
        if (rescale) value = h.scl_slope * value + h.scl_inter;

        if (!std::isfinite(value)) fail(Errc::non_integral_label, "non-finite voxel value");
        double nearest = std::nearbyint(value);
        if (std::abs(value - nearest) > 0x1.0p-6)
            fail(Errc::non_integral_label,
                 "voxel value " + std::to_string(value) + " is not integral");
        if (nearest < 0.0) fail(Errc::negative_label, "voxel value " + std::to_string(value));
        if (nearest > 65535.0)
            fail(Errc::label_out_of_range, "label " + std::to_string(nearest) + " exceeds 16 bits");
        vol.labels[i] = static_cast<std::uint16_t>(nearest);
    }
    return vol;
}

LabelVolume read_volume_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) fail(Errc::io_error, "read failure on " + path.string());
    return read_volume(bytes);
}

namespace {

class FieldWriter {
public:
    explicit FieldWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void u16(std::size_t off, std::uint16_t v) {
        out_[off] = static_cast<std::uint8_t>(v);
        out_[off + 1] = static_cast<std::uint8_t>(v >> 8);
    }
    void i16(std::size_t off, std::int16_t v) { u16(off, static_cast<std::uint16_t>(v)); }
    void u32(std::size_t off, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_[off + static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(v >> (8 * i));
    }
    void i32(std::size_t off, std::int32_t v) { u32(off, static_cast<std::uint32_t>(v)); }
    void f32(std::size_t off, float v) { u32(off, std::bit_cast<std::uint32_t>(v)); }

private:
    std::vector<std::uint8_t>& out_;
};

} // namespace

std::vector<std::uint8_t> write_volume(const LabelVolume& volume, bool compress) {
    std::size_t nvox = volume.voxel_count();
    if (volume.labels.size() != nvox)
        fail(Errc::io_error, "label array length does not match dims");
    for (double s : volume.spacing)
        if (!(s > 0.0)) fail(Errc::io_error, "nonpositive spacing");

    std::uint16_t max_label = 0;
    for (std::uint16_t v : volume.labels) max_label = std::max(max_label, v);
    bool wide = max_label > 255;
    int datatype = wide ? kUint16 : kUint8;

    constexpr std::size_t kDataOffset = 352; // 348-byte header + 4 extension bytes
    std::vector<std::uint8_t> out(kDataOffset + nvox * (wide ? 2 : 1), 0);
    FieldWriter w(out);

    w.i32(0, 348);
    w.i16(kOffDim, 3);
    for (int axis = 0; axis < 3; ++axis) {
        w.i16(kOffDim + 2 * (static_cast<std::size_t>(axis) + 1),
              static_cast<std::int16_t>(volume.dims[axis]));
        w.f32(kOffPixdim + 4 * (static_cast<std::size_t>(axis) + 1),
              static_cast<float>(volume.spacing[axis]));
    }
    for (std::size_t axis = 4; axis <= 7; ++axis) w.i16(kOffDim + 2 * axis, 1);
    w.f32(kOffPixdim, 1.0f); // qfac, unused (qform_code stays 0)
    w.i16(kOffDatatype, static_cast<std::int16_t>(datatype));
    w.i16(kOffBitpix, static_cast<std::int16_t>(wide ? 16 : 8));
    w.f32(kOffVoxOffset, static_cast<float>(kDataOffset));
    w.f32(kOffSclSlope, 1.0f);
    w.f32(kOffSclInter, 0.0f);
    out[kOffXyztUnits] = 2; // NIFTI_UNITS_MM
    w.i16(kOffSformCode, 1);
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 4; ++col)
            w.f32(kOffSrowX + 16 * static_cast<std::size_t>(row) +
                      4 * static_cast<std::size_t>(col),
                  static_cast<float>(volume.affine.m[row][col]));
    std::memcpy(out.data() + kOffMagic, "n+1\0", 4);

    if (wide) {
        for (std::size_t i = 0; i < nvox; ++i) {
            out[kDataOffset + 2 * i] = static_cast<std::uint8_t>(volume.labels[i]);
            out[kDataOffset + 2 * i + 1] = static_cast<std::uint8_t>(volume.labels[i] >> 8);
        }
    } else {
        for (std::size_t i = 0; i < nvox; ++i)
            out[kDataOffset + i] = static_cast<std::uint8_t>(volume.labels[i]);
    }

    if (compress) return gz::compress(out);
    return out;
}

void write_volume_file(const LabelVolume& volume, const std::filesystem::path& path,
                       bool compress) {
    std::vector<std::uint8_t> bytes = write_volume(volume, compress);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(Errc::io_error, "write failure on " + path.string());
}

} // namespace koos::nifti
