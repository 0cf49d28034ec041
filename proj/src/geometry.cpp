#include "koos/geometry.hpp"

#include <cmath>
#include <limits>

#include "koos/error.hpp"
#include "koos/parallel.hpp"

namespace koos::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_same_shape(const std::array<int, 3>& da, const std::array<double, 3>& sa,
                      const std::array<int, 3>& db, const std::array<double, 3>& sb) {
    if (da != db) fail(Errc::shape_mismatch, "dims differ");
    if (sa != sb) fail(Errc::shape_mismatch, "spacing differs");
}

struct DtScratch {
    std::vector<double> line, result, breaks;
    std::vector<int> hull;

    void ensure(int n) {
        if (static_cast<int>(line.size()) < n) {
            line.resize(static_cast<std::size_t>(n));
            result.resize(static_cast<std::size_t>(n));
            hull.resize(static_cast<std::size_t>(n));
            breaks.resize(static_cast<std::size_t>(n) + 1);
        }
    }
};

// Per-thread scratch: lines within a pass run concurrently, and edt is never
// re-entered on one thread while a pass is in flight.
DtScratch& scratch() {
    thread_local DtScratch s;
    return s;
}

// 1D squared-distance transform along one line of n samples at i*step.
// f holds input squared distances (kInf where no source yet); out receives
// the lower envelope evaluated at each sample.
void dt_line(const double* f, int n, double step, double* out, int* hull, double* breaks) {
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        double fq = f[q] + (q * step) * (q * step);
        double s = 0.0;
        while (k >= 0) {
            int p = hull[k];
            double fp = f[p] + (p * step) * (p * step);
            s = (fq - fp) / (2.0 * step * (q - p));
            if (s <= breaks[k])
                --k;
            else
                break;
        }
        if (k < 0) {
            k = 0;
            hull[0] = q;
            breaks[0] = -kInf;
            breaks[1] = kInf;
        } else {
            ++k;
            hull[k] = q;
            breaks[k] = s;
            breaks[k + 1] = kInf;
        }
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q) out[q] = kInf;
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        double x = q * step;
        while (breaks[j + 1] < x) ++j;
        double dx = x - hull[j] * step;
        out[q] = dx * dx + f[hull[j]];
    }
}

} // namespace

std::size_t BinaryMask::popcount() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) n += b;
    return n;
}

double structure_volume(const BinaryMask& mask) {
    return static_cast<double>(mask.popcount()) * mask.spacing[0] * mask.spacing[1] *
           mask.spacing[2];
}

DistanceField edt(const BinaryMask& mask) {
    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    const std::size_t total = mask.voxel_count();

    DistanceField field;
    field.dims = mask.dims;
    field.spacing = mask.spacing;
    field.values.assign(total, kInf);

    bool any = false;
    for (std::size_t i = 0; i < total; ++i)
        if (mask.bits[i]) {
            field.values[i] = 0.0;
            any = true;
        }
    if (!any) fail(Errc::empty_foreground, "distance transform of an empty mask");

    auto idx = [&](int x, int y, int z) { return field.index(x, y, z); };

    // Axis passes over squared distances. Lines are independent and each
    // writes only its own voxels, so the result is bitwise identical for any
    // thread count.
    parallel_for(static_cast<std::size_t>(ny) * nz, [&](std::size_t li) {
        const int z = static_cast<int>(li / static_cast<std::size_t>(ny));
        const int y = static_cast<int>(li % static_cast<std::size_t>(ny));
        DtScratch& s = scratch();
        s.ensure(nx);
        for (int x = 0; x < nx; ++x) s.line[static_cast<std::size_t>(x)] = field.values[idx(x, y, z)];
        dt_line(s.line.data(), nx, mask.spacing[0], s.result.data(), s.hull.data(),
                s.breaks.data());
        for (int x = 0; x < nx; ++x) field.values[idx(x, y, z)] = s.result[static_cast<std::size_t>(x)];
    });
    parallel_for(static_cast<std::size_t>(nx) * nz, [&](std::size_t li) {
        const int z = static_cast<int>(li / static_cast<std::size_t>(nx));
        const int x = static_cast<int>(li % static_cast<std::size_t>(nx));
        DtScratch& s = scratch();
        s.ensure(ny);
        for (int y = 0; y < ny; ++y) s.line[static_cast<std::size_t>(y)] = field.values[idx(x, y, z)];
        dt_line(s.line.data(), ny, mask.spacing[1], s.result.data(), s.hull.data(),
                s.breaks.data());
        for (int y = 0; y < ny; ++y) field.values[idx(x, y, z)] = s.result[static_cast<std::size_t>(y)];
    });
    parallel_for(static_cast<std::size_t>(nx) * ny, [&](std::size_t li) {
        const int y = static_cast<int>(li / static_cast<std::size_t>(nx));
        const int x = static_cast<int>(li % static_cast<std::size_t>(nx));
        DtScratch& s = scratch();
        s.ensure(nz);
        for (int z = 0; z < nz; ++z) s.line[static_cast<std::size_t>(z)] = field.values[idx(x, y, z)];
        dt_line(s.line.data(), nz, mask.spacing[2], s.result.data(), s.hull.data(),
                s.breaks.data());
        for (int z = 0; z < nz; ++z) field.values[idx(x, y, z)] = s.result[static_cast<std::size_t>(z)];
    });

    for (double& v : field.values) v = std::sqrt(v);
    return field;
}

double dist_vs(const BinaryMask& structure, const DistanceField& vs_field) {
    check_same_shape(structure.dims, structure.spacing, vs_field.dims, vs_field.spacing);
    double best = kInf;
    const std::size_t total = structure.voxel_count();
    for (std::size_t i = 0; i < total; ++i)
        if (structure.bits[i] && vs_field.values[i] < best) best = vs_field.values[i];
    if (best == kInf) return -1.0; // empty structure sentinel
    return best;
}

double surf_vs(const BinaryMask& vs, const BinaryMask& other) {
    check_same_shape(vs.dims, vs.spacing, other.dims, other.spacing);
    const std::size_t total = vs.voxel_count();
    for (std::size_t i = 0; i < total; ++i)
        if (vs.bits[i] && other.bits[i]) fail(Errc::overlapping_masks, "masks share a voxel");

    const int nx = vs.dims[0], ny = vs.dims[1], nz = vs.dims[2];
    // Count shared faces per axis as integers so the sum is exact and
    // symmetric in the argument order.
    std::uint64_t faces[3] = {0, 0, 0};
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                if (!vs.test(x, y, z)) continue;
                if (x > 0 && other.test(x - 1, y, z)) ++faces[0];
                if (x + 1 < nx && other.test(x + 1, y, z)) ++faces[0];
                if (y > 0 && other.test(x, y - 1, z)) ++faces[1];
                if (y + 1 < ny && other.test(x, y + 1, z)) ++faces[1];
                if (z > 0 && other.test(x, y, z - 1)) ++faces[2];
                if (z + 1 < nz && other.test(x, y, z + 1)) ++faces[2];
            }
    const auto& s = vs.spacing;
    return static_cast<double>(faces[0]) * s[1] * s[2] +
           static_cast<double>(faces[1]) * s[0] * s[2] +
           static_cast<double>(faces[2]) * s[0] * s[1];
}

Vec3 centroid_world(const BinaryMask& mask, const Affine4& affine) {
    std::uint64_t sum[3] = {0, 0, 0};
    std::uint64_t count = 0;
    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                if (mask.test(x, y, z)) {
                    sum[0] += static_cast<std::uint64_t>(x);
                    sum[1] += static_cast<std::uint64_t>(y);
                    sum[2] += static_cast<std::uint64_t>(z);
                    ++count;
                }
    if (count == 0) fail(Errc::empty_foreground, "centroid of an empty mask");
    Vec3 mean = {static_cast<double>(sum[0]) / static_cast<double>(count),
                 static_cast<double>(sum[1]) / static_cast<double>(count),
                 static_cast<double>(sum[2]) / static_cast<double>(count)};
    return affine.apply(mean);
}

Side resolve_laterality(const BinaryMask& vs, const BinaryMask& brainstem,
                        const Affine4& affine) {
    double vs_x = centroid_world(vs, affine)[0];

    double reference;
    if (brainstem.popcount() > 0) {
        reference = centroid_world(brainstem, affine)[0];
    } else {
        Vec3 grid_center = {(vs.dims[0] - 1) / 2.0, (vs.dims[1] - 1) / 2.0,
                            (vs.dims[2] - 1) / 2.0};
        reference = affine.apply(grid_center)[0];
    }
    return vs_x >= reference ? Side::Right : Side::Left;
}

} // namespace koos::geometry
