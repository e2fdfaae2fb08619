#include "spf/error.hpp"
#include "spf/geometry.hpp"
#include "spf/penalty.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace spf;
using spf::test::random_unit;

namespace {

// Finite-difference Jacobian of the outward normal.
Mat fd_normal_jacobian(const Obstacle& o, const Vec& x, double h = 1e-6) {
    const Eigen::Index n = x.size();
    Mat J(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vec e = Vec::Zero(n);
        e[j] = h;
        J.col(j) = (o.distance(x + e).normal - o.distance(x - e).normal) / (2.0 * h);
    }
    return J;
}

}  // namespace

TEST_CASE("disk distance, normal and Hessian") {
    const Obstacle disk(Disk2D{vec2(1.0, -2.0), 0.7});
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const Vec dir = random_unit(rng, 2);
        const double r = 0.8 + 3.0 * std::uniform_real_distribution<double>()(rng);
        const Vec x = vec2(1.0, -2.0) + r * dir;
        const ObstacleDistance d = disk.distance(x);
        CHECK(d.distance == doctest::Approx(r - 0.7).epsilon(1e-12));
        CHECK((d.normal - dir).norm() < 1e-12);
        CHECK((d.nearest - (vec2(1.0, -2.0) + 0.7 * dir)).norm() < 1e-12);
        // Level sets are circles of radius r: H = (I - n n^T) / r.
        const Mat expected = (identity(2) - dir * dir.transpose()) / r;
        CHECK((disk.distance_hessian(x) - expected).norm() < 1e-9);
    }
    CHECK(disk.distance(vec2(1.0, -2.0) + vec2(0.1, 0.0)).distance == doctest::Approx(-0.6));
}

TEST_CASE("sphere distance and curvature of the offset surface") {
    const Obstacle sphere(Sphere3D{vec3(0.0, 1.0, 2.0), 1.5});
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        const Vec dir = random_unit(rng, 3);
        const Vec x = vec3(0.0, 1.0, 2.0) + 2.5 * dir;
        CHECK(sphere.distance(x).distance == doctest::Approx(1.0));
        // kappa / (1 + kappa d) with kappa = 1 / 1.5 and d = 1 is 1 / 2.5.
        const Mat H = sphere.distance_hessian(x);
        const Mat T = (identity(3) - dir * dir.transpose());
        CHECK((H - T / 2.5).norm() < 1e-9);
        CHECK((H - fd_normal_jacobian(sphere, x)).norm() < 1e-6);
    }
}

TEST_CASE("convex polygon regions") {
    const Obstacle square(ConvexPolygon2D{{vec2(-1, -1), vec2(1, -1), vec2(1, 1), vec2(-1, 1)}});
    // Edge region.
    ObstacleDistance d = square.distance(vec2(3.0, 0.25));
    CHECK(d.distance == doctest::Approx(2.0));
    CHECK((d.normal - vec2(1, 0)).norm() < 1e-12);
    CHECK(square.distance_hessian(vec2(3.0, 0.25)).norm() < 1e-12);
    // Vertex region: behaves like a point.
    d = square.distance(vec2(4.0, 5.0));
    CHECK(d.distance == doctest::Approx(5.0));
    CHECK((d.normal - vec2(0.6, 0.8)).norm() < 1e-12);
    const Mat expected = (identity(2) - d.normal * d.normal.transpose()) / 5.0;
    CHECK((square.distance_hessian(vec2(4.0, 5.0)) - expected).norm() < 1e-9);
    // Inside: negative depth to the closest edge.
    CHECK(square.distance(vec2(0.5, 0.0)).distance == doctest::Approx(-0.5));
    // Raycast through a face.
    const auto t = square.raycast(vec2(-3.0, 0.0), vec2(1.0, 0.0), 10.0);
    REQUIRE(t);
    CHECK(*t == doctest::Approx(2.0));
    CHECK_FALSE(square.raycast(vec2(-3.0, 0.0), vec2(-1.0, 0.0), 10.0));
}

TEST_CASE("polygon rejects non-convex or clockwise input") {
    CHECK_THROWS_AS(Obstacle(ConvexPolygon2D{{vec2(0, 0), vec2(0, 1), vec2(1, 0)}}), Error);
    CHECK_THROWS_AS(Obstacle(ConvexPolygon2D{{vec2(0, 0), vec2(2, 0), vec2(1, 0.1), vec2(2, 2), vec2(0, 2)}}), Error);
}

TEST_CASE("torus distance matches the tube formula") {
    const Obstacle torus(make_torus(vec3(1, 2, 3), vec3(0, 0, 2), 2.0, 0.5));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 100; ++i) {
        const Vec p = vec3(u(rng), u(rng), u(rng));
        const double rho = std::hypot(p[0], p[1]);
        if (rho < 0.1) continue;
        const double expected = std::hypot(rho - 2.0, p[2]) - 0.5;
        CHECK(torus.distance(vec3(1, 2, 3) + p).distance == doctest::Approx(expected).epsilon(1e-10));
    }
    // On the symmetry axis the nearest points form a circle; any of them will do.
    const ObstacleDistance d = torus.distance(vec3(1, 2, 4));
    CHECK(d.distance == doctest::Approx(std::sqrt(5.0) - 0.5).epsilon(1e-8));
}

TEST_CASE("ellipsoid distance satisfies the foot-point conditions") {
    const Vec c = vec3(-1, 0.5, 0);
    const Vec a = vec3(1.2, 0.8, 0.5);
    const Obstacle ell(make_ellipsoid(c, a));
    std::mt19937_64 rng(4);
    for (int i = 0; i < 60; ++i) {
        const Vec x = c + 2.5 * random_unit(rng, 3);
        const ObstacleDistance d = ell.distance(x);
        const Vec y = d.nearest - c;
        CHECK(std::abs(y.cwiseQuotient(a).squaredNorm() - 1.0) < 1e-10);
        // x - y is parallel to the surface normal at y.
        const Vec g = y.cwiseQuotient(a.cwiseProduct(a)).normalized();
        CHECK(((x - d.nearest).normalized() - g).norm() < 1e-8);
        CHECK(d.distance == doctest::Approx((x - d.nearest).norm()));
        // The foot is a global minimizer: no random surface point is closer.
        for (int k = 0; k < 200; ++k) {
            const Vec on = c + random_unit(rng, 3).cwiseProduct(a);
            CHECK((x - on).norm() >= d.distance - 1e-9);
        }
    }
}

TEST_CASE("ellipsoid raycast lands on the surface") {
    const Vec c = vec3(0, 0, 0);
    const Vec a = vec3(2, 1, 0.5);
    const Obstacle ell(make_ellipsoid(c, a));
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const Vec o = 4.0 * random_unit(rng, 3);
        const Vec dir = (0.3 * random_unit(rng, 3) - o).normalized();
        const auto t = ell.raycast(o, dir, 20.0);
        if (!t) continue;
        const Vec hit = o + *t * dir;
        CHECK(std::abs(hit.cwiseQuotient(a).squaredNorm() - 1.0) < 1e-10);
        // Nothing earlier along the ray is inside.
        for (int k = 1; k < 50; ++k) {
            const Vec q = o + (*t * k / 50.0) * dir;
            CHECK(q.cwiseQuotient(a).squaredNorm() > 1.0 - 1e-9);
        }
    }
}

TEST_CASE("world queries") {
    const World world(2, {Obstacle(Disk2D{vec2(0, 0), 1.0}), Obstacle(Disk2D{vec2(5, 0), 1.0})});
    const DistanceQuery q = distance_to_obstacles(world, vec2(3.5, 0.0));
    CHECK(q.obstacle == 1);
    CHECK(q.value == doctest::Approx(0.5));
    CHECK(margin(world, vec2(3.5, 0.0), RobotParams{}) == doctest::Approx(0.1));
    // Tie: lowest index wins.
    CHECK(distance_to_obstacles(world, vec2(2.5, 1.0)).obstacle == 0);
    CHECK(distances_to_each(world, vec2(2.5, 0.0)).size() == 2);
    CHECK_THROWS_AS(distance_to_obstacles(world, vec2(0.2, 0.0)), Error);
    CHECK_THROWS_AS(distance_to_obstacles(World(2, {}), vec2(0.0, 0.0)), Error);
    CHECK_THROWS_AS(World(3, {Obstacle(Disk2D{vec2(0, 0), 1.0})}), Error);
    try {
        distance_hessian(world, vec2(2.5, 0.0));
        FAIL("expected NonSmoothPoint");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonSmoothPoint);
    }
}

TEST_CASE("feasibility conditions") {
    const World world(2, {Obstacle(Disk2D{vec2(0, 0), 1.0}), Obstacle(Disk2D{vec2(5, 0), 1.0})});
    // Clearance between the disks is 3, so reach is 1.5.
    FeasibilityReport rep = validate_feasibility(world, RobotParams{0.34, 0.06}, PenaltyParams{0.6, 1.0});
    CHECK(rep.feasible);
    CHECK_FALSE(rep.advisory);
    CHECK(rep.reach == doctest::Approx(1.5));

    rep = validate_feasibility(world, RobotParams{0.34, 0.0}, PenaltyParams{0.6, 1.0});
    CHECK_FALSE(rep.feasible);
    REQUIRE_FALSE(rep.violations.empty());
    CHECK(rep.violations.front().find("epsilon") != std::string::npos);

    rep = validate_feasibility(world, RobotParams{0.34, 0.06}, PenaltyParams{1.2, 1.0});
    CHECK_FALSE(rep.feasible);
    CHECK(rep.violations.front().find("mu") != std::string::npos);

    const World spline(2, {Obstacle(Spline2D{{vec2(1, 0), vec2(0, 1), vec2(-1, 0), vec2(0, -1)}})});
    CHECK(validate_feasibility(spline, RobotParams{}, PenaltyParams{}).advisory);
}
