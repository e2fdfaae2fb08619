#include "spf/contour.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace spf;

namespace {

std::vector<double> sample(int nx, int ny, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                           double (*f)(double, double)) {
    std::vector<double> v(static_cast<std::size_t>(nx * ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double x = lo.x() + (hi.x() - lo.x()) * i / (nx - 1);
            const double y = lo.y() + (hi.y() - lo.y()) * j / (ny - 1);
            v[static_cast<std::size_t>(j * nx + i)] = f(x, y);
        }
    }
    return v;
}

}  // namespace

TEST_CASE("circle level set is one closed loop") {
    const Eigen::Vector2d lo(-2, -2), hi(2, 2);
    const auto v = sample(81, 81, lo, hi, [](double x, double y) { return std::hypot(x, y); });
    const auto lines = marching_squares(v, 81, 81, lo, hi, 1.0);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].closed);
    CHECK(lines[0].points.size() > 40);
    for (const auto& p : lines[0].points) CHECK(std::abs(p.norm() - 1.0) < 2e-3);
}

TEST_CASE("planar field gives one open segment across the box") {
    const Eigen::Vector2d lo(0, 0), hi(1, 1);
    const auto v = sample(11, 7, lo, hi, [](double x, double) { return x; });
    const auto lines = marching_squares(v, 11, 7, lo, hi, 0.35);
    REQUIRE(lines.size() == 1);
    CHECK_FALSE(lines[0].closed);
    CHECK(lines[0].points.size() == 7);
    for (const auto& p : lines[0].points) CHECK(p.x() == doctest::Approx(0.35));
}

TEST_CASE("two separate blobs give two loops") {
    const Eigen::Vector2d lo(-3, -2), hi(3, 2);
    const auto v = sample(121, 81, lo, hi, [](double x, double y) {
        return std::min(std::hypot(x + 1.5, y), std::hypot(x - 1.5, y));
    });
    const auto lines = marching_squares(v, 121, 81, lo, hi, 0.8);
    CHECK(lines.size() == 2);
    for (const auto& l : lines) CHECK(l.closed);
    CHECK(marching_squares(v, 121, 81, lo, hi, 100.0).empty());
}

TEST_CASE("margin samples match the geometry") {
    const World world = spf::test::disk_world(1.0);
    const RobotParams robot;
    const Eigen::Vector2d lo(-3, -3), hi(3, 3);
    const auto m = sample_margin(world, robot, 13, 13, lo, hi);
    REQUIRE(m.size() == 169);
    CHECK(m[0] == doctest::Approx(std::hypot(3.0, 3.0) - 1.4));
    // Center: depth 1 below the boundary, minus the clearance.
    CHECK(m[6 * 13 + 6] == doctest::Approx(-1.4));
    const auto lines = marching_squares(sample_margin(world, robot, 101, 101, lo, hi), 101, 101, lo, hi, 0.0);
    REQUIRE(lines.size() == 1);
    for (const auto& p : lines[0].points) CHECK(std::abs(p.norm() - 1.4) < 1e-3);
}
