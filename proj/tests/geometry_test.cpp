#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "koos/error.hpp"
#include "koos/geometry.hpp"
#include "koos/rng.hpp"
#include "oracles.hpp"

using namespace koos;
using geometry::BinaryMask;
using geometry::DistanceField;
using geometry::Side;

namespace {

BinaryMask single_voxel(std::array<int, 3> dims, std::array<double, 3> spacing, int x, int y,
                        int z) {
    BinaryMask m = BinaryMask::zeros(dims, spacing);
    m.set(x, y, z);
    return m;
}

} // namespace

TEST_CASE("structure_volume counts voxels times voxel volume") {
    CHECK(geometry::structure_volume(single_voxel({4, 4, 4}, {0.5, 0.5, 1.0}, 1, 1, 1)) == 0.25);

    BinaryMask block = BinaryMask::zeros({5, 5, 5}, {1, 1, 1});
    for (int z = 1; z <= 3; ++z)
        for (int y = 1; y <= 3; ++y)
            for (int x = 1; x <= 3; ++x) block.set(x, y, z);
    CHECK(geometry::structure_volume(block) == 27.0);

    CHECK(geometry::structure_volume(BinaryMask::zeros({3, 3, 3}, {1, 1, 1})) == 0.0);
}

TEST_CASE("edt single-source distances") {
    DistanceField f = geometry::edt(single_voxel({6, 6, 2}, {1, 1, 1}, 0, 0, 0));
    CHECK(f.at(3, 4, 0) == doctest::Approx(5.0).epsilon(1e-12)); // 3-4-5 triangle
    CHECK(f.at(0, 0, 0) == 0.0);
    CHECK(f.at(0, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));

    DistanceField g = geometry::edt(single_voxel({4, 2, 2}, {2, 1, 1}, 0, 0, 0));
    CHECK(g.at(1, 0, 0) == doctest::Approx(2.0).epsilon(1e-12)); // one 2 mm step
}

TEST_CASE("edt zero exactly on foreground") {
    SplitMix64 rng(99);
    BinaryMask m = testing::random_mask(rng, {10, 9, 4}, {0.7, 1.1, 2.0}, 0.2);
    DistanceField f = geometry::edt(m);
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        if (m.bits[i]) CHECK(f.values[i] == 0.0);
}

TEST_CASE("edt rejects an empty mask") {
    CHECK_THROWS_AS(geometry::edt(BinaryMask::zeros({3, 3, 3}, {1, 1, 1})), Error);
}

TEST_CASE("edt matches the pairwise brute-force oracle") {
    SplitMix64 rng(411);
    for (int trial = 0; trial < 20; ++trial) {
        std::array<double, 3> spacing = {rng.uniform(0.4, 2.0), rng.uniform(0.4, 2.0),
                                         rng.uniform(0.4, 2.0)};
        BinaryMask m = testing::random_mask(rng, {16, 16, 8}, spacing, rng.uniform(0.01, 0.2));
        DistanceField f = geometry::edt(m);
        std::vector<double> oracle = testing::brute_force_edt(m);
        double worst = 0.0;
        for (std::size_t i = 0; i < oracle.size(); ++i)
            worst = std::max(worst, std::abs(f.values[i] - oracle[i]));
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("edt is bitwise identical for any thread count") {
    SplitMix64 rng(606);
    for (int trial = 0; trial < 5; ++trial) {
        BinaryMask m = testing::random_mask(
            rng, {21, 17, 9}, {rng.uniform(0.4, 2.0), rng.uniform(0.4, 2.0), rng.uniform(0.4, 2.0)},
            0.1);
        setenv("KOOS_THREADS", "1", 1);
        DistanceField serial = geometry::edt(m);
        setenv("KOOS_THREADS", "5", 1);
        DistanceField threaded = geometry::edt(m);
        unsetenv("KOOS_THREADS");
        CHECK(serial.values == threaded.values);
    }
}

TEST_CASE("edt translation invariance away from borders") {
    SplitMix64 rng(5);
    BinaryMask m = BinaryMask::zeros({14, 12, 10}, {0.8, 1.0, 1.3});
    for (int i = 0; i < 8; ++i)
        m.set(2 + static_cast<int>(rng.bounded(5)), 2 + static_cast<int>(rng.bounded(4)),
              2 + static_cast<int>(rng.bounded(3)));

    BinaryMask shifted = BinaryMask::zeros(m.dims, m.spacing);
    const int ox = 3, oy = 2, oz = 1;
    for (int z = 0; z < 10; ++z)
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 14; ++x)
                if (m.test(x, y, z)) shifted.set(x + ox, y + oy, z + oz);

    DistanceField f = geometry::edt(m);
    DistanceField g = geometry::edt(shifted);
    // Compare on the region whose nearest source cannot be clipped.
    for (int z = 0; z < 7; ++z)
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 9; ++x)
                CHECK(f.at(x, y, z) == doctest::Approx(g.at(x + ox, y + oy, z + oz)).epsilon(1e-12));
}

TEST_CASE("scaling all spacings scales distances, areas, volumes accordingly") {
    SplitMix64 rng(31);
    BinaryMask a = testing::random_mask(rng, {9, 8, 7}, {0.6, 1.0, 1.4}, 0.15);
    const double k = 2.5;
    BinaryMask b = a;
    for (auto& s : b.spacing) s *= k;

    DistanceField fa = geometry::edt(a);
    DistanceField fb = geometry::edt(b);
    for (std::size_t i = 0; i < fa.values.size(); ++i)
        CHECK(fb.values[i] == doctest::Approx(k * fa.values[i]).epsilon(1e-12));

    CHECK(geometry::structure_volume(b) ==
          doctest::Approx(k * k * k * geometry::structure_volume(a)).epsilon(1e-12));

    BinaryMask other_a = testing::random_mask(rng, {9, 8, 7}, a.spacing, 0.15);
    for (std::size_t i = 0; i < other_a.bits.size(); ++i)
        if (a.bits[i]) other_a.bits[i] = 0;
    BinaryMask other_b = other_a;
    other_b.spacing = b.spacing;
    CHECK(geometry::surf_vs(b, other_b) ==
          doctest::Approx(k * k * geometry::surf_vs(a, other_a)).epsilon(1e-12));
}

TEST_CASE("dist_vs minimum, sentinel and shape checks") {
    BinaryMask vs = single_voxel({6, 4, 2}, {1, 1, 1}, 0, 0, 0);
    DistanceField f = geometry::edt(vs);
    CHECK(geometry::dist_vs(single_voxel({6, 4, 2}, {1, 1, 1}, 3, 0, 0), f) == 3.0);

    BinaryMask vs_aniso = single_voxel({4, 4, 2}, {1, 0.8, 1}, 1, 1, 0);
    DistanceField g = geometry::edt(vs_aniso);
    CHECK(geometry::dist_vs(single_voxel({4, 4, 2}, {1, 0.8, 1}, 1, 2, 0), g) ==
          doctest::Approx(0.8).epsilon(1e-12));

    CHECK(geometry::dist_vs(BinaryMask::zeros({6, 4, 2}, {1, 1, 1}), f) == -1.0);

    CHECK_THROWS_AS(geometry::dist_vs(BinaryMask::zeros({5, 4, 2}, {1, 1, 1}), f), Error);
    CHECK_THROWS_AS(geometry::dist_vs(BinaryMask::zeros({6, 4, 2}, {1, 1, 2}), f), Error);
}

TEST_CASE("surf_vs face areas") {
    BinaryMask a = single_voxel({4, 4, 4}, {1, 1, 1}, 1, 1, 1);
    BinaryMask b = single_voxel({4, 4, 4}, {1, 1, 1}, 2, 1, 1);
    CHECK(geometry::surf_vs(a, b) == 1.0);

    BinaryMask c = single_voxel({4, 4, 4}, {0.5, 0.5, 1.5}, 1, 1, 1);
    BinaryMask d = single_voxel({4, 4, 4}, {0.5, 0.5, 1.5}, 1, 1, 2);
    CHECK(geometry::surf_vs(c, d) == 0.25);

    BinaryMask diag = single_voxel({4, 4, 4}, {1, 1, 1}, 2, 2, 1);
    CHECK(geometry::surf_vs(a, diag) == 0.0); // corner contact has no area

    CHECK_THROWS_AS(geometry::surf_vs(a, a), Error); // overlap
}

TEST_CASE("surf_vs equals the brute-force pair enumeration and is symmetric") {
    SplitMix64 rng(73);
    for (int trial = 0; trial < 8; ++trial) {
        std::array<double, 3> spacing = {rng.uniform(0.4, 1.6), rng.uniform(0.4, 1.6),
                                         rng.uniform(0.4, 1.6)};
        BinaryMask a = testing::random_mask(rng, {12, 12, 12}, spacing, 0.12);
        BinaryMask b = testing::random_mask(rng, {12, 12, 12}, spacing, 0.12);
        for (std::size_t i = 0; i < a.bits.size(); ++i)
            if (a.bits[i]) b.bits[i] = 0;

        double ab = geometry::surf_vs(a, b);
        CHECK(ab == doctest::Approx(testing::brute_force_contact_surface(a, b)).epsilon(1e-12));
        CHECK(ab == geometry::surf_vs(b, a)); // exact, counts are integers
    }
}

TEST_CASE("contact implies distance equals a voxel step") {
    SplitMix64 rng(1234);
    for (int trial = 0; trial < 10; ++trial) {
        std::array<double, 3> spacing = {rng.uniform(0.4, 1.5), rng.uniform(0.4, 1.5),
                                         rng.uniform(0.4, 1.5)};
        BinaryMask vs = testing::random_mask(rng, {10, 10, 6}, spacing, 0.15);
        BinaryMask other = testing::random_mask(rng, {10, 10, 6}, spacing, 0.15);
        for (std::size_t i = 0; i < vs.bits.size(); ++i)
            if (vs.bits[i]) other.bits[i] = 0;
        if (other.popcount() == 0 || geometry::surf_vs(vs, other) == 0.0) continue;

        double d = geometry::dist_vs(other, geometry::edt(vs));
        bool is_axis_step = std::abs(d - spacing[0]) <= 1e-9 || std::abs(d - spacing[1]) <= 1e-9 ||
                            std::abs(d - spacing[2]) <= 1e-9;
        CHECK(is_axis_step);
    }
}

TEST_CASE("centroid_world") {
    CHECK(geometry::centroid_world(single_voxel({6, 6, 6}, {1, 1, 1}, 2, 3, 4),
                                   Affine4::identity()) == Vec3{2, 3, 4});

    BinaryMask two = BinaryMask::zeros({6, 6, 6}, {1, 1, 1});
    two.set(0, 0, 0);
    two.set(2, 0, 0);
    CHECK(geometry::centroid_world(two, Affine4::identity()) == Vec3{1, 0, 0});

    CHECK_THROWS_AS(geometry::centroid_world(BinaryMask::zeros({3, 3, 3}, {1, 1, 1}),
                                             Affine4::identity()),
                    Error);

    SplitMix64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        BinaryMask m = testing::random_mask(rng, {8, 7, 6}, {1, 1, 1}, 0.3);
        Affine4 affine = Affine4::identity();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) affine.m[r][c] = rng.uniform(-3.0, 3.0);
        Vec3 got = geometry::centroid_world(m, affine);
        Vec3 want = testing::brute_force_centroid(m, affine);
        for (int a = 0; a < 3; ++a)
            CHECK(std::abs(got[static_cast<std::size_t>(a)] - want[static_cast<std::size_t>(a)]) <=
                  1e-9);
    }
}

TEST_CASE("resolve_laterality") {
    // Identity affine, so world x is the voxel x index.
    BinaryMask vs_right = single_voxel({41, 5, 5}, {1, 1, 1}, 40, 2, 2);
    BinaryMask vs_left = single_voxel({41, 5, 5}, {1, 1, 1}, 5, 2, 2);
    BinaryMask brainstem = single_voxel({41, 5, 5}, {1, 1, 1}, 20, 2, 2);

    CHECK(geometry::resolve_laterality(vs_right, brainstem, Affine4::identity()) == Side::Right);
    CHECK(geometry::resolve_laterality(vs_left, brainstem, Affine4::identity()) == Side::Left);

    // Exact tie resolves to Right.
    BinaryMask vs_mid = single_voxel({41, 5, 5}, {1, 1, 1}, 20, 3, 3);
    CHECK(geometry::resolve_laterality(vs_mid, brainstem, Affine4::identity()) == Side::Right);

    // Empty brainstem: fall back to the grid's geometric center (x = 20).
    BinaryMask empty = BinaryMask::zeros({41, 5, 5}, {1, 1, 1});
    CHECK(geometry::resolve_laterality(vs_right, empty, Affine4::identity()) == Side::Right);
    CHECK(geometry::resolve_laterality(vs_left, empty, Affine4::identity()) == Side::Left);

    CHECK_THROWS_AS(geometry::resolve_laterality(empty, brainstem, Affine4::identity()), Error);
}
