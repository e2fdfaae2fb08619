#pragma once

#include "spf/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace spf {

struct Disk2D {
    Vec center;
    double radius = 1.0;
};

struct Sphere3D {
    Vec center;
    double radius = 1.0;
};

/// Vertices in counter-clockwise order.
struct ConvexPolygon2D {
    std::vector<Vec> vertices;
};

/// Closed cubic interpolation of the control points.
struct Spline2D {
    std::vector<Vec> control_points;
};

/// Obstacle given as the sublevel set {f <= 0} of a level-set function.
///
/// Ellipsoid and Torus are the serializable families; Custom carries an
/// arbitrary function (and optionally its gradient) supplied from code.
struct Implicit {
    enum class Shape { Ellipsoid, Torus, Custom };

    Shape shape = Shape::Custom;
    Vec center;
    Vec semi_axes;  // Ellipsoid
    double major_radius = 0.0;  // Torus
    double minor_radius = 0.0;  // Torus
    Vec axis;  // Torus symmetry axis

    std::function<double(const Vec&)> level;
    std::function<Vec(const Vec&)> gradient;  // empty: central differences
    double bound_radius = 0.0;  // Custom: radius around `center` enclosing the boundary, may be +inf
};

Implicit make_ellipsoid(const Vec& center, const Vec& semi_axes);
Implicit make_torus(const Vec& center, const Vec& axis, double major_radius, double minor_radius);

using ObstacleShape = std::variant<Disk2D, Sphere3D, ConvexPolygon2D, Spline2D, Implicit>;

/// Closest-point data for one obstacle. `distance` is signed: positive
/// outside, non-positive inside or on the boundary.
struct ObstacleDistance {
    double distance = 0.0;
    Vec nearest;
    Vec normal;
};

class ClosedSpline;

namespace detail {
class ShapeModel;
}

/// Immutable obstacle. Copies share the precomputed model.
class Obstacle {
public:
    explicit Obstacle(ObstacleShape shape);

    const ObstacleShape& shape() const { return shape_; }
    int dimension() const;
    std::string type_name() const;

    ObstacleDistance distance(const Vec& x) const;
    Mat distance_hessian(const Vec& x) const;
    std::optional<double> raycast(const Vec& origin, const Vec& direction, double max_range) const;

    /// Sphere (center, radius) enclosing the boundary; radius may be +inf.
    std::pair<Vec, double> bounding_sphere() const;

    /// True when the distance function is exact and the reach is computable
    /// (disks, spheres, convex polygons).
    bool analytic() const;

    /// Underlying curve of a spline obstacle, nullptr for other shapes.
    const ClosedSpline* spline_curve() const;

    const detail::ShapeModel& model() const { return *model_; }

private:
    ObstacleShape shape_;
    std::shared_ptr<const detail::ShapeModel> model_;
};

struct Bounds {
    Vec lo;
    Vec hi;
};

class World {
public:
    World(int dimension, std::vector<Obstacle> obstacles, std::optional<Bounds> bounds = std::nullopt);

    int dimension() const { return dimension_; }
    const std::vector<Obstacle>& obstacles() const { return obstacles_; }
    const std::optional<Bounds>& bounds() const { return bounds_; }
    bool empty() const { return obstacles_.empty(); }

private:
    int dimension_;
    std::vector<Obstacle> obstacles_;
    std::optional<Bounds> bounds_;
};

struct RobotParams {
    double radius = 0.34;
    double epsilon = 0.06;

    double clearance() const { return radius + epsilon; }
};

struct DistanceQuery {
    double value = 0.0;
    Vec nearest;
    Vec normal;
    int obstacle = -1;
};

/// Nearest obstacle (lowest index on ties). Throws InsideObstacle or EmptyWorld.
DistanceQuery distance_to_obstacles(const World& world, const Vec& x);

/// Per-obstacle signed distances, in obstacle order. Used for multi-obstacle
/// filtering.
std::vector<DistanceQuery> distances_to_each(const World& world, const Vec& x);

/// d(x) = distance - (R + epsilon). Negative values are returned as is.
double margin(const World& world, const Vec& x, const RobotParams& robot);

/// Hessian of the distance to the obstacle set. Throws NonSmoothPoint on tie
/// loci and polygon Voronoi-cell boundaries.
Mat distance_hessian(const World& world, const Vec& x);

struct PenaltyParams;

struct FeasibilityReport {
    bool feasible = true;
    /// Reach was estimated (spline) or unknown (implicit); the verdict is
    /// advisory for those obstacles.
    bool advisory = false;
    /// min(h, rho): lower bound on the distance below which projections are
    /// unique and the distance function is smooth. +inf when unbounded.
    double reach = 0.0;
    std::vector<std::string> violations;
    std::vector<std::string> notes;
};

FeasibilityReport validate_feasibility(const World& world, const RobotParams& robot, const PenaltyParams& penalty);

}  // namespace spf
