#include "spf/geometry.hpp"
#include "spf/spline.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace spf;

namespace {

std::vector<Eigen::Vector2d> blob() {
    std::vector<Eigen::Vector2d> pts;
    for (int k = 0; k < 8; ++k) {
        const double a = 2.0 * std::numbers::pi * k / 8;
        const double r = k == 2 ? 0.8 : 1.2 + 0.2 * std::sin(3.0 * a);
        pts.emplace_back(r * std::cos(a), 0.7 * r * std::sin(a));
    }
    return pts;
}

// Brute-force nearest distance: fine parameter sweep, then golden-section
// search between the neighbours of the best sample.
double brute_distance(const ClosedSpline& s, const Eigen::Vector2d& x, int n = 100000) {
    auto dist = [&](double t) { return (s.point(t) - x).norm(); };
    const double h = s.period() / n;
    int best = 0;
    for (int k = 1; k < n; ++k) {
        if (dist(h * k) < dist(h * best)) best = k;
    }
    double lo = h * (best - 1), hi = h * (best + 1);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 100; ++it) {
        const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
        if (dist(a) < dist(b)) {
            hi = b;
        } else {
            lo = a;
        }
    }
    return dist(0.5 * (lo + hi));
}

}  // namespace

TEST_CASE("spline interpolates its control points and closes smoothly") {
    const auto pts = blob();
    const ClosedSpline s(pts);
    double t = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK((s.point(t) - pts[i]).norm() < 1e-12);
        t += (pts[(i + 1) % pts.size()] - pts[i]).norm();
    }
    CHECK(s.period() == doctest::Approx(t));
    const double eps = 1e-9;
    CHECK((s.point(s.period() - eps) - s.point(eps)).norm() < 1e-7);
    CHECK((s.derivative(s.period() - eps) - s.derivative(eps)).norm() < 1e-6);
    CHECK((s.second_derivative(s.period() - eps) - s.second_derivative(eps)).norm() < 1e-5);
}

TEST_CASE("spline nearest point agrees with a brute-force sweep") {
    const ClosedSpline s(blob());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 40; ++i) {
        const Eigen::Vector2d x(u(rng), u(rng));
        const ClosedSpline::Foot f = s.closest(x);
        CHECK(std::abs(f.distance - brute_distance(s, x)) < 1e-10);
        CHECK((s.point(f.t) - f.point).norm() < 1e-12);
    }
}

TEST_CASE("spline normal and curvature against finite differences") {
    const ClosedSpline s(blob());
    for (int k = 0; k < 50; ++k) {
        const double t = s.period() * (k + 0.3) / 50.0;
        const Eigen::Vector2d d1 = s.derivative(t);
        const Eigen::Vector2d d2 = s.second_derivative(t);
        const double h = 1e-5;
        CHECK((d1 - (s.point(t + h) - s.point(t - h)) / (2 * h)).norm() < 1e-7);
        const double kappa = (d1.x() * d2.y() - d1.y() * d2.x()) / std::pow(d1.norm(), 3);
        CHECK(s.curvature(t) == doctest::Approx(s.orientation() * kappa).epsilon(1e-9));
        // Outward normal points away from the centroid for this star-shaped blob.
        CHECK(s.outward_normal(t).dot(s.point(t)) > 0.0);
        CHECK(std::abs(s.outward_normal(t).dot(d1)) < 1e-12);
    }
}

TEST_CASE("spline obstacle signed distance and raycast") {
    std::vector<Vec> pts;
    for (const auto& p : blob()) pts.push_back(vec2(p.x(), p.y()));
    const Obstacle o(Spline2D{pts});
    CHECK(o.distance(vec2(0.0, 0.0)).distance < 0.0);
    CHECK(o.distance(vec2(3.0, 0.0)).distance > 0.0);
    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 100.0;
        const Vec origin = vec2(2.5 * std::cos(a), 2.5 * std::sin(a));
        const Vec dir = (-origin + spf::test::random_unit(rng, 2) * 0.3).normalized();
        const auto t = o.raycast(origin, dir, 10.0);
        REQUIRE(t);
        const Vec hit = origin + *t * dir;
        CHECK(std::abs(o.distance(hit).distance) < 1e-9);
        // The sampled segment before the hit stays outside.
        for (int k = 0; k < 40; ++k) CHECK(o.distance(origin + (*t * k / 40.0) * dir).distance > -1e-12);
    }
}

TEST_CASE("cubic roots in the unit interval") {
    // (u - 0.2)(u - 0.5)(u - 0.9)
    const auto r = cubic_roots_unit(-0.09, 0.73, -1.6, 1.0);
    REQUIRE(r.size() == 3);
    CHECK(r[0] == doctest::Approx(0.2));
    CHECK(r[1] == doctest::Approx(0.5));
    CHECK(r[2] == doctest::Approx(0.9));
    CHECK(cubic_roots_unit(1.0, 0.0, 0.0, 0.0).empty());
    const auto lin = cubic_roots_unit(-0.25, 1.0, 0.0, 0.0);
    REQUIRE(lin.size() == 1);
    CHECK(lin[0] == doctest::Approx(0.25));
}
