#pragma once

#include "spf/geometry.hpp"

#include <Eigen/Core>

#include <vector>

namespace spf {

struct Polyline {
    std::vector<Eigen::Vector2d> points;
    bool closed = false;  // last point connects back to the first
};

/// Iso-lines of a sampled scalar field by marching squares.
///
/// `values` is row-major with ny rows of nx samples; sample (i, j) sits at
/// lo + (hi - lo) * (i / (nx - 1), j / (ny - 1)). Saddle cells are resolved
/// with the cell-center average.
std::vector<Polyline> marching_squares(const std::vector<double>& values, int nx, int ny, const Eigen::Vector2d& lo,
                                       const Eigen::Vector2d& hi, double level);

/// Signed margin on a lattice: min over obstacles of the signed distance
/// minus (R + epsilon). Defined inside obstacles too.
std::vector<double> sample_margin(const World& world, const RobotParams& robot, int nx, int ny,
                                  const Eigen::Vector2d& lo, const Eigen::Vector2d& hi);

}  // namespace spf
