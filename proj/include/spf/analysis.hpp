#pragma once

#include "spf/controller.hpp"
#include "spf/geometry.hpp"
#include "spf/types.hpp"

#include <vector>

namespace spf {

/// Separates zero eigenvalues from decisively signed ones.
inline constexpr double kClassifyTolerance = 1e-8;

struct Classification {
    bool isolated = false;
    bool unstable = false;
    /// Ascending eigenvalues of lambda H_d - H_V restricted to the tangent space.
    std::vector<double> spectrum;
    /// Orthonormal tangent eigenvectors matching `spectrum`.
    std::vector<Vec> directions;
};

/// Boundary point where grad V = lambda eta with lambda > 0.
struct EquilibriumReport {
    Vec location;
    double lambda = 0.0;
    double residual = 0.0;  // |grad V - lambda eta|
    int obstacle = -1;
    /// False when the spectrum has an eigenvalue within the tolerance of zero
    /// (classification undecidable); isolated/unstable are then unset.
    bool classified = false;
    Classification classification;
};

struct EquilibriumOptions {
    int boundary_samples = 4096;  // per obstacle, 2D curve search
    int seeds = 64;               // per obstacle, multi-start surface search
    double bisection_tol = 1e-10;
    double accept_residual = 1e-8;
};

/// Undesired equilibria on the boundary of the practical free space.
/// Throws NoBoundary for an empty world.
std::vector<EquilibriumReport> find_equilibria(const World& world, const Potential& potential,
                                               const RobotParams& robot, const EquilibriumOptions& options = {});

/// Normal curvature v^T H_d v of the (dilated) obstacle boundary through x.
double curvature_obstacle(const World& world, const Vec& x, const Vec& v);

/// Normal curvature v^T H_V v / |grad V| of the level set of V through x.
double curvature_levelset(const Potential& potential, const Vec& x, const Vec& v);

/// Jacobian of the saturated closed loop xdot = -(I - eta eta^T) grad V at x.
Mat jacobian_at(const World& world, const Potential& potential, const Vec& x);

/// Throws IndefiniteResult when an eigenvalue lies within the tolerance of zero.
Classification classify_equilibrium(const World& world, const Potential& potential, const Vec& x, double lambda);

struct EquilibriumResidual {
    double lambda = 0.0;    // eta . grad V
    double residual = 0.0;  // |grad V - lambda eta|
    double margin = 0.0;
};

EquilibriumResidual equilibrium_residual(const World& world, const Potential& potential, const RobotParams& robot,
                                         const Vec& x);

/// Orthonormal basis of the complement of the unit vector n (columns).
Mat tangent_basis(const Vec& n);

}  // namespace spf
