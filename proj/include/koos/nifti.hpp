#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "koos/affine.hpp"

namespace koos::nifti {

// NIfTI-1 datatype codes this reader accepts. Label maps in the wild come as
// one of these five; everything else is rejected up front.
enum Datatype : int {
    kUint8 = 2,
    kInt16 = 4,
    kInt32 = 8,
    kFloat32 = 16,
    kUint16 = 512,
};

struct VolumeHeader {
    std::array<int, 3> dims{};       // voxels per axis, all >= 1
    std::array<double, 3> pixdim{};  // mm per voxel, all > 0
    int datatype_code = 0;
    double scl_slope = 0.0;
    double scl_inter = 0.0;
    std::int64_t vox_offset = 0;
    Affine4 affine;                  // voxel index -> world mm
    std::array<char, 4> magic{};
    bool byte_swapped = false;       // true when the file was big-endian
};

struct LabelVolume {
    std::array<int, 3> dims{};
    std::array<double, 3> spacing{};
    Affine4 affine;
    std::vector<std::uint16_t> labels; // x-fastest order, dims product long

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(z) * dims[1] * dims[0] +
               static_cast<std::size_t>(y) * dims[0] + x;
    }
    std::uint16_t at(int x, int y, int z) const { return labels[index(x, y, z)]; }
};

inline constexpr std::size_t kHeaderSize = 348;

// Decodes the fixed 348-byte header. Byte order is inferred from sizeof_hdr:
// if the little-endian read is not 348 but the swapped read is, the whole
// header is decoded big-endian. Only single-file volumes (magic "n+1") of
// rank 3, or rank 4 with a single-element 4th axis, pass validation.
VolumeHeader parse_header(std::span<const std::uint8_t> buffer);

// Reads a complete single-file NIfTI-1 volume, transparently inflating gzip
// input (leading bytes 0x1F 0x8B). Voxel values are scaled by
// scl_slope/scl_inter when slope is neither 0 nor 1, must land within 2^-6 of
// a non-negative integer <= 65535, and are stored rounded.
LabelVolume read_volume(std::span<const std::uint8_t> bytes);
LabelVolume read_volume_file(const std::filesystem::path& path);

// Serializes a volume as uint8 when every label fits a byte, uint16
// otherwise. The affine goes to the sform (float32), so a round trip
// reproduces dims and labels exactly and spacing/affine to float32
// quantization.
std::vector<std::uint8_t> write_volume(const LabelVolume& volume, bool compress);
void write_volume_file(const LabelVolume& volume, const std::filesystem::path& path,
                       bool compress);

} // namespace koos::nifti
