#pragma once

#include "spf/geometry.hpp"
#include "spf/types.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace spf::test {

inline std::filesystem::path source_path(const std::string& rel) { return std::filesystem::path(SPF_SOURCE_DIR) / rel; }

inline World disk_world(double r = 1.0) { return World(2, {Obstacle(Disk2D{vec2(0.0, 0.0), r})}); }

// margin() throws inside obstacles.
inline bool in_free_space(const World& world, const Vec& x, const RobotParams& robot, double min_margin = 0.0) {
    try {
        return margin(world, x, robot) >= min_margin;
    } catch (const std::exception&) {
        return false;
    }
}

inline Vec random_unit(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> g;
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = g(rng);
    return v / v.norm();
}

}  // namespace spf::test
