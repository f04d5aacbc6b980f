#ifndef REEBDYN_TYPES_HPP
#define REEBDYN_TYPES_HPP

#include <Eigen/Dense>

namespace reebdyn {

// Coordinates on R^4 are ordered (x1, y1, x2, y2).
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

inline constexpr const char* kVersion = "1.0.0";

}  // namespace reebdyn

#endif
