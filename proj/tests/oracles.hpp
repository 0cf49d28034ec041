#pragma once

// Independent brute-force oracles for the geometry module. Deliberately
// naive: they enumerate everything and never share code with the
// implementations they check.

#include <cmath>
#include <limits>
#include <vector>

#include "koos/geometry.hpp"
#include "koos/rng.hpp"

namespace koos::testing {

// O(n^2) pairwise-minimum distance field.
inline std::vector<double> brute_force_edt(const geometry::BinaryMask& mask) {
    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    const double sx = mask.spacing[0], sy = mask.spacing[1], sz = mask.spacing[2];

    std::vector<std::array<int, 3>> sources;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                if (mask.test(x, y, z)) sources.push_back({x, y, z});

    std::vector<double> out(mask.voxel_count(), std::numeric_limits<double>::infinity());
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& s : sources) {
                    double dx = (x - s[0]) * sx, dy = (y - s[1]) * sy, dz = (z - s[2]) * sz;
                    double d2 = dx * dx + dy * dy + dz * dz;
                    if (d2 < best) best = d2;
                }
                out[mask.index(x, y, z)] = std::sqrt(best);
            }
    return out;
}

// Exhaustive 6-neighbor pair enumeration for the contact surface.
inline double brute_force_contact_surface(const geometry::BinaryMask& a,
                                          const geometry::BinaryMask& b) {
    const int nx = a.dims[0], ny = a.dims[1], nz = a.dims[2];
    const double sx = a.spacing[0], sy = a.spacing[1], sz = a.spacing[2];
    double total = 0.0;
    for (int za = 0; za < nz; ++za)
        for (int ya = 0; ya < ny; ++ya)
            for (int xa = 0; xa < nx; ++xa) {
                if (!a.test(xa, ya, za)) continue;
                for (int zb = 0; zb < nz; ++zb)
                    for (int yb = 0; yb < ny; ++yb)
                        for (int xb = 0; xb < nx; ++xb) {
                            if (!b.test(xb, yb, zb)) continue;
                            int dx = std::abs(xa - xb), dy = std::abs(ya - yb),
                                dz = std::abs(za - zb);
                            if (dx + dy + dz != 1) continue;
                            if (dx == 1) total += sy * sz;
                            if (dy == 1) total += sx * sz;
                            if (dz == 1) total += sx * sy;
                        }
            }
    return total;
}

// Transform-then-average centroid.
inline Vec3 brute_force_centroid(const geometry::BinaryMask& mask, const Affine4& affine) {
    Vec3 sum = {0, 0, 0};
    std::size_t count = 0;
    for (int z = 0; z < mask.dims[2]; ++z)
        for (int y = 0; y < mask.dims[1]; ++y)
            for (int x = 0; x < mask.dims[0]; ++x)
                if (mask.test(x, y, z)) {
                    Vec3 p = affine.apply({static_cast<double>(x), static_cast<double>(y),
                                           static_cast<double>(z)});
                    for (int a = 0; a < 3; ++a) sum[a] += p[a];
                    ++count;
                }
    return {sum[0] / count, sum[1] / count, sum[2] / count};
}

inline geometry::BinaryMask random_mask(SplitMix64& rng, std::array<int, 3> dims,
                                        std::array<double, 3> spacing, double fill) {
    geometry::BinaryMask m = geometry::BinaryMask::zeros(dims, spacing);
    bool any = false;
    for (auto& b : m.bits) {
        b = rng.unit() < fill ? 1 : 0;
        any = any || b;
    }
    if (!any) m.bits[rng.bounded(m.bits.size())] = 1;
    return m;
}

} // namespace koos::testing
