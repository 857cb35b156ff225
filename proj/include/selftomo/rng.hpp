#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace selftomo::rng {

/// All randomness in the library flows through std::mt19937_64 plus the
/// explicit 53-bit mapping below. Both are fully pinned by the C++ standard,
/// so a given seed produces the same stream on every platform; none of the
/// distribution classes from <random> (which are not pinned) are used.
using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) {
    return Engine(seed);
}

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform in [lo, hi).
inline double uniform(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

/// Uniform point in the closed unit ball, by rejection from the cube.
inline Eigen::Vector3d uniform_in_ball(Engine& eng) {
    for (;;) {
        Eigen::Vector3d v(uniform(eng, -1.0, 1.0), uniform(eng, -1.0, 1.0),
                          uniform(eng, -1.0, 1.0));
        if (v.squaredNorm() <= 1.0) {
            return v;
        }
    }
}

/// Uniform direction on the unit sphere.
inline Eigen::Vector3d uniform_unit_vector(Engine& eng) {
    for (;;) {
        Eigen::Vector3d v = uniform_in_ball(eng);
        const double n = v.norm();
        if (n > 1e-6) {
            return v / n;
        }
    }
}

/// Random proper rotation: axis uniform on the sphere, angle uniform in [0, pi].
Eigen::Matrix3d uniform_rotation(Engine& eng);

} // namespace selftomo::rng
