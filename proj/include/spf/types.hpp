#pragma once

#include <Eigen/Dense>

namespace spf {

// Points and vectors live in R^2 or R^3. The fixed upper bound keeps them on
// the stack while the dimension stays a runtime property of the world.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

inline Vec vec2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

inline Vec vec3(double x, double y, double z) {
    Vec v(3);
    v << x, y, z;
    return v;
}

inline Mat identity(Eigen::Index n) { return Mat::Identity(n, n); }

}  // namespace spf
