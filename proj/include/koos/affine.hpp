#pragma once

#include <array>
#include <cmath>

namespace koos {

using Vec3 = std::array<double, 3>;

// Homogeneous voxel-index -> world-mm transform. Row-major 4x4; the bottom
// row is (0,0,0,1) for every transform this pipeline produces.
struct Affine4 {
    std::array<std::array<double, 4>, 4> m{};

    static Affine4 identity() {
        Affine4 a;
        for (int i = 0; i < 4; ++i) a.m[i][i] = 1.0;
        return a;
    }

    static Affine4 diagonal(const Vec3& scale) {
        Affine4 a = identity();
        for (int i = 0; i < 3; ++i) a.m[i][i] = scale[i];
        return a;
    }

    Vec3 apply(const Vec3& p) const {
        Vec3 out;
        for (int i = 0; i < 3; ++i)
            out[i] = m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2] + m[i][3];
        return out;
    }

    double det3() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }

    bool invertible() const {
        double d = det3();
        return std::isfinite(d) && std::abs(d) > 1e-12;
    }
};

} // namespace koos
