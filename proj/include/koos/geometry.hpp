#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "koos/affine.hpp"

namespace koos::geometry {

// Dense binary voxel mask with physical spacing, x-fastest order.
struct BinaryMask {
    std::array<int, 3> dims{};
    std::array<double, 3> spacing{};
    std::vector<std::uint8_t> bits; // 0/1 per voxel, dims product long

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(z) * dims[1] * dims[0] +
               static_cast<std::size_t>(y) * dims[0] + x;
    }
    bool test(int x, int y, int z) const { return bits[index(x, y, z)] != 0; }
    void set(int x, int y, int z, bool value = true) {
        bits[index(x, y, z)] = value ? 1 : 0;
    }
    std::size_t popcount() const;

    static BinaryMask zeros(std::array<int, 3> dims, std::array<double, 3> spacing) {
        BinaryMask m;
        m.dims = dims;
        m.spacing = spacing;
        m.bits.assign(m.voxel_count(), 0);
        return m;
    }
};

// Per-voxel Euclidean distance (mm, center-to-center) to the nearest
// foreground voxel; exactly 0 on foreground.
struct DistanceField {
    std::array<int, 3> dims{};
    std::array<double, 3> spacing{};
    std::vector<double> values;

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(z) * dims[1] * dims[0] +
               static_cast<std::size_t>(y) * dims[0] + x;
    }
    double at(int x, int y, int z) const { return values[index(x, y, z)]; }
};

enum class Side { Left, Right };

// Sum of set voxels times the voxel volume, in mm^3.
double structure_volume(const BinaryMask& mask);

// Exact anisotropic Euclidean distance transform (separable lower-envelope
// parabola method over squared distances; per-axis step = spacing). Throws
// EmptyForeground when no voxel is set.
DistanceField edt(const BinaryMask& mask);

// Minimum of the distance field over the structure's set voxels; -1 sentinel
// when the structure mask is empty (absent structure, kept distinguishable
// from any real distance).
double dist_vs(const BinaryMask& structure, const DistanceField& vs_field);

// Total area of faces shared by 6-adjacent voxel pairs (one voxel in each
// mask), in mm^2. Masks must be disjoint.
double surf_vs(const BinaryMask& vs, const BinaryMask& other);

// Mean set-voxel index mapped through the affine.
Vec3 centroid_world(const BinaryMask& mask, const Affine4& affine);

// Which side of the midline the VS sits on, assuming a right-positive first
// world axis. Midline reference: brainstem centroid when available, else the
// grid's geometric center. Exact tie resolves to Right.
Side resolve_laterality(const BinaryMask& vs, const BinaryMask& brainstem,
                        const Affine4& affine);

} // namespace koos::geometry
