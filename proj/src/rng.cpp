#include "selftomo/rng.hpp"

#include <cmath>
#include <numbers>

namespace selftomo::rng {

Eigen::Matrix3d uniform_rotation(Engine& eng) {
    const Eigen::Vector3d axis = uniform_unit_vector(eng);
    const double theta = uniform(eng, 0.0, std::numbers::pi);
    return Eigen::AngleAxisd(theta, axis).toRotationMatrix();
}

} // namespace selftomo::rng
