#include "spf/analysis.hpp"

#include "spf/error.hpp"
#include "spf/spline.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace spf {

namespace {

// Point on the dilated boundary and the outward normal there.
struct BoundaryPoint {
    Vec q;
    Vec eta;
};

// One smooth arc of a dilated 2D boundary, parametrized over [0, 1].
struct Arc {
    std::function<BoundaryPoint(double)> eval;
    double length = 0.0;
};

Vec rot(double angle) { return vec2(std::cos(angle), std::sin(angle)); }

std::vector<Arc> dilated_arcs(const Obstacle& obstacle, double c0) {
    std::vector<Arc> arcs;
    const ObstacleShape& shape = obstacle.shape();
    if (const auto* disk = std::get_if<Disk2D>(&shape)) {
        const Vec c = disk->center;
        const double rho = disk->radius + c0;
        arcs.push_back({[c, rho](double u) {
                            const Vec n = rot(2.0 * std::numbers::pi * u);
                            return BoundaryPoint{c + rho * n, n};
                        },
                        2.0 * std::numbers::pi * rho});
    } else if (const auto* poly = std::get_if<ConvexPolygon2D>(&shape)) {
        const auto& v = poly->vertices;
        const std::size_t n = v.size();
        auto edge_normal = [&](std::size_t i) {
            const Vec e = v[(i + 1) % n] - v[i];
            return Vec(vec2(e[1], -e[0]) / e.norm());
        };
        for (std::size_t i = 0; i < n; ++i) {
            const Vec n_prev = edge_normal((i + n - 1) % n);
            const Vec n_next = edge_normal(i);
            const double a0 = std::atan2(n_prev[1], n_prev[0]);
            double sweep = std::atan2(n_next[1], n_next[0]) - a0;
            while (sweep <= 0.0) sweep += 2.0 * std::numbers::pi;
            const Vec p = v[i];
            arcs.push_back({[p, a0, sweep, c0](double u) {
                                const Vec nn = rot(a0 + sweep * u);
                                return BoundaryPoint{p + c0 * nn, nn};
                            },
                            c0 * sweep});
            const Vec a = v[i];
            const Vec b = v[(i + 1) % n];
            arcs.push_back({[a, b, n_next, c0](double u) {
                                return BoundaryPoint{a + u * (b - a) + c0 * n_next, n_next};
                            },
                            (b - a).norm()});
        }
    } else if (const ClosedSpline* spline = obstacle.spline_curve()) {
        const double period = spline->period();
        arcs.push_back({[spline, period, c0](double u) {
                            const double t = u * period;
                            const Eigen::Vector2d nn = spline->outward_normal(t);
                            const Eigen::Vector2d p = spline->point(t) + c0 * nn;
                            return BoundaryPoint{vec2(p.x(), p.y()), vec2(nn.x(), nn.y())};
                        },
                        period});
    }
    return arcs;
}

// Roots of cross(grad V, eta) along the dilated curve.
std::vector<Vec> curve_candidates(const Obstacle& obstacle, const Potential& potential, double c0,
                                  const EquilibriumOptions& opt) {
    const std::vector<Arc> arcs = dilated_arcs(obstacle, c0);
    double total = 0.0;
    for (const Arc& a : arcs) total += a.length;

    std::vector<Vec> out;
    for (const Arc& arc : arcs) {
        auto cross = [&](double u) {
            const BoundaryPoint b = arc.eval(u);
            const Vec g = potential.gradient(b.q);
            return g[0] * b.eta[1] - g[1] * b.eta[0];
        };
        const int n = std::max(8, static_cast<int>(std::ceil(opt.boundary_samples * arc.length / total)));
        double u_prev = 0.0;
        double f_prev = cross(0.0);
        for (int k = 1; k <= n; ++k) {
            const double u = static_cast<double>(k) / n;
            const double f = cross(u);
            if (f_prev == 0.0) {
                out.push_back(arc.eval(u_prev).q);
            } else if (f_prev * f < 0.0) {
                double lo = u_prev;
                double hi = u;
                double f_lo = f_prev;
                for (int it = 0; it < 200 && (hi - lo) * std::max(arc.length, 1.0) > opt.bisection_tol; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = cross(mid);
                    if (fm == 0.0) {
                        lo = hi = mid;
                        break;
                    }
                    if ((fm < 0.0) == (f_lo < 0.0)) {
                        lo = mid;
                        f_lo = fm;
                    } else {
                        hi = mid;
                    }
                }
                out.push_back(arc.eval(0.5 * (lo + hi)).q);
            }
            u_prev = u;
            f_prev = f;
        }
    }
    return out;
}

std::vector<Vec> seed_directions(int dim, int count) {
    std::vector<Vec> dirs;
    dirs.reserve(count);
    if (dim == 2) {
        for (int k = 0; k < count; ++k) dirs.push_back(rot(2.0 * std::numbers::pi * (k + 0.5) / count));
        return dirs;
    }
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * k;
        dirs.push_back(vec3(r * std::cos(phi), r * std::sin(phi), z));
    }
    return dirs;
}

// Multi-start Levenberg-Marquardt on the tangential residual
// (I - eta eta^T) grad V over the dilated surface.
std::vector<Vec> surface_candidates(const Obstacle& obstacle, const Potential& potential, double c0,
                                    const EquilibriumOptions& opt) {
    const int dim = obstacle.dimension();
    auto [center, rho] = obstacle.bounding_sphere();
    if (!std::isfinite(rho)) rho = 1.0;
    const double scale = rho + c0;

    auto retract = [&](const Vec& y) {
        const ObstacleDistance d = obstacle.distance(y);
        return Vec(d.nearest + c0 * d.normal);
    };
    auto tangential = [&](const Vec& x, Vec& eta) {
        eta = obstacle.distance(x).normal;
        const Vec g = potential.gradient(x);
        return Vec(g - eta.dot(g) * eta);
    };

    std::vector<Vec> out;
    for (const Vec& dir : seed_directions(dim, opt.seeds)) {
        Vec x = retract(center + (scale + 0.5) * dir);
        Vec eta;
        Vec r = tangential(x, eta);
        double damping = 1e-6;
        for (int it = 0; it < 100; ++it) {
            const Vec g = potential.gradient(x);
            if (r.norm() <= 1e-14 * std::max(1.0, g.norm())) break;
            const double lambda = eta.dot(g);
            const Mat T = tangent_basis(eta);
            const Mat A = T.transpose() * (potential.hessian(x) - lambda * obstacle.distance_hessian(x)) * T;
            const Vec b = T.transpose() * r;
            bool improved = false;
            while (damping < 1e12) {
                const Mat N = A.transpose() * A + damping * identity(dim - 1);
                Vec alpha = N.ldlt().solve(-(A.transpose() * b));
                const double step = alpha.norm();
                if (step > 0.25 * scale) alpha *= 0.25 * scale / step;
                const Vec x_new = retract(x + T * alpha);
                Vec eta_new;
                const Vec r_new = tangential(x_new, eta_new);
                if (r_new.norm() < r.norm()) {
                    x = x_new;
                    eta = eta_new;
                    r = r_new;
                    damping = std::max(damping * 0.3, 1e-12);
                    improved = true;
                    break;
                }
                damping *= 10.0;
            }
            if (!improved) break;
        }
        out.push_back(x);
    }
    return out;
}

}  // namespace

Mat tangent_basis(const Vec& n) {
    if (n.size() == 2) {
        Mat T(2, 1);
        T << -n[1], n[0];
        return T;
    }
    Eigen::Index k = 0;
    n.cwiseAbs().minCoeff(&k);
    Vec a = Vec::Zero(3);
    a[k] = 1.0;
    const Eigen::Vector3d t1 = (a - a.dot(n) * n).normalized();
    const Eigen::Vector3d t2 = Eigen::Vector3d(n[0], n[1], n[2]).cross(t1);
    Mat T(3, 2);
    T.col(0) = t1;
    T.col(1) = t2;
    return T;
}

double curvature_obstacle(const World& world, const Vec& x, const Vec& v) {
    const DistanceQuery q = distance_to_obstacles(world, x);
    if (std::abs(v.dot(q.normal)) > 1e-9) throw Error(ErrorCode::InvalidArgument, "direction is not tangent to the boundary");
    return v.dot(distance_hessian(world, x) * v);
}

double curvature_levelset(const Potential& potential, const Vec& x, const Vec& v) {
    const Vec g = potential.gradient(x);
    const double gn = g.norm();
    if (gn < 1e-12) throw Error(ErrorCode::DegenerateGradient, "potential gradient vanishes");
    if (std::abs(v.dot(g)) > 1e-9 * gn) throw Error(ErrorCode::InvalidArgument, "direction is not tangent to the level set");
    return v.dot(potential.hessian(x) * v) / gn;
}

Mat jacobian_at(const World& world, const Potential& potential, const Vec& x) {
    const Vec eta = distance_to_obstacles(world, x).normal;
    const Vec g = potential.gradient(x);
    const Mat Hd = distance_hessian(world, x);
    const Mat Hv = potential.hessian(x);
    return -Hv + eta.dot(g) * Hd + eta * (g.transpose() * Hd + eta.transpose() * Hv);
}

namespace {

// Spectrum of lambda H_d - H_V on the tangent space, without the verdicts.
Classification tangent_spectrum(const World& world, const Potential& potential, const Vec& x, double lambda) {
    const Vec eta = distance_to_obstacles(world, x).normal;
    const Mat T = tangent_basis(eta);
    const Mat M = T.transpose() * (lambda * distance_hessian(world, x) - potential.hessian(x)) * T;
    Eigen::SelfAdjointEigenSolver<Mat> eig(M);
    Classification out;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        out.spectrum.push_back(eig.eigenvalues()[i]);
        out.directions.push_back(T * eig.eigenvectors().col(i));
    }
    return out;
}

}  // namespace

Classification classify_equilibrium(const World& world, const Potential& potential, const Vec& x, double lambda) {
    Classification out = tangent_spectrum(world, potential, x, lambda);
    for (double e : out.spectrum) {
        if (std::abs(e) <= kClassifyTolerance) {
            throw Error(ErrorCode::IndefiniteResult, "tangent eigenvalue within tolerance of zero");
        }
    }
    out.unstable = out.spectrum.back() > kClassifyTolerance;
    out.isolated = true;
    return out;
}

EquilibriumResidual equilibrium_residual(const World& world, const Potential& potential, const RobotParams& robot,
                                         const Vec& x) {
    const DistanceQuery q = distance_to_obstacles(world, x);
    const Vec g = potential.gradient(x);
    EquilibriumResidual out;
    out.lambda = q.normal.dot(g);
    out.residual = (g - out.lambda * q.normal).norm();
    out.margin = q.value - robot.clearance();
    return out;
}

std::vector<EquilibriumReport> find_equilibria(const World& world, const Potential& potential,
                                               const RobotParams& robot, const EquilibriumOptions& options) {
    if (world.empty()) throw Error(ErrorCode::NoBoundary, "world has no obstacles");
    const double c0 = robot.clearance();
    std::vector<EquilibriumReport> reports;

    for (std::size_t i = 0; i < world.obstacles().size(); ++i) {
        const Obstacle& obstacle = world.obstacles()[i];
        const bool curve = world.dimension() == 2 && !std::holds_alternative<Implicit>(obstacle.shape());
        const std::vector<Vec> candidates = curve ? curve_candidates(obstacle, potential, c0, options)
                                                  : surface_candidates(obstacle, potential, c0, options);
        for (const Vec& x : candidates) {
            EquilibriumResidual res;
            try {
                res = equilibrium_residual(world, potential, robot, x);
                if (distance_to_obstacles(world, x).obstacle != static_cast<int>(i)) continue;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::InsideObstacle) continue;
                throw;
            }
            if (!(res.lambda > 0.0) || std::abs(res.margin) > 1e-8 || res.residual > options.accept_residual) continue;
            const bool duplicate = std::any_of(reports.begin(), reports.end(), [&](const EquilibriumReport& r) {
                return (r.location - x).norm() < 1e-6;
            });
            if (duplicate) continue;

            EquilibriumReport rep;
            rep.location = x;
            rep.lambda = res.lambda;
            rep.residual = res.residual;
            rep.obstacle = static_cast<int>(i);
            try {
                rep.classification = classify_equilibrium(world, potential, x, res.lambda);
                rep.classified = true;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::IndefiniteResult) {
                    rep.classification = tangent_spectrum(world, potential, x, res.lambda);
                } else if (e.code() != ErrorCode::NonSmoothPoint) {
                    throw;
                }
                rep.classified = false;
            }
            reports.push_back(std::move(rep));
        }
    }
    return reports;
}

}  // namespace spf
