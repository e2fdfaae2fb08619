#include "spf/geometry.hpp"

#include "spf/error.hpp"
#include "spf/penalty.hpp"
#include "spf/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace spf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSmoothTol = 1e-9;

Vec unit_axis(Eigen::Index n, Eigen::Index k) {
    Vec e = Vec::Zero(n);
    e[k] = 1.0;
    return e;
}

Eigen::Vector2d as2(const Vec& v) { return Eigen::Vector2d(v[0], v[1]); }

Vec from2(const Eigen::Vector2d& v) { return vec2(v.x(), v.y()); }

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

namespace detail {

class ShapeModel {
public:
    virtual ~ShapeModel() = default;

    virtual int dimension() const = 0;
    virtual ObstacleDistance distance(const Vec& x) const = 0;
    virtual std::pair<Vec, double> bounding_sphere() const = 0;
    virtual bool analytic() const { return false; }

    virtual Mat hessian(const Vec& x) const {
        // Central differences of the outward normal.
        const Eigen::Index n = x.size();
        const double h = 1e-5 * std::max(1.0, x.norm());
        Mat H(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const Vec e = unit_axis(n, j);
            const Vec np = distance(x + h * e).normal;
            const Vec nm = distance(x - h * e).normal;
            H.col(j) = (np - nm) / (2.0 * h);
        }
        return 0.5 * (H + H.transpose());
    }

    virtual std::optional<double> raycast(const Vec& origin, const Vec& dir, double max_range) const {
        // Sphere tracing on the exact distance field.
        const auto [c, r] = bounding_sphere();
        double t = 0.0;
        if (std::isfinite(r)) {
            const Vec oc = origin - c;
            const double b = dir.dot(oc);
            const double disc = b * b - (oc.squaredNorm() - r * r);
            if (disc < 0.0) return std::nullopt;
            const double t_exit = -b + std::sqrt(disc);
            if (t_exit < 0.0) return std::nullopt;
            t = std::max(0.0, -b - std::sqrt(disc));
            max_range = std::min(max_range, t_exit);
        }
        for (int it = 0; it < 100000 && t <= max_range; ++it) {
            const double d = distance(origin + t * dir).distance;
            if (d < 1e-9) return t > 1e-12 ? std::optional<double>(t) : std::nullopt;
            t += d;
        }
        return std::nullopt;
    }
};

namespace {

class BallModel final : public ShapeModel {
public:
    BallModel(Vec center, double radius) : c_(std::move(center)), r_(radius) {
        if (!(r_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
    }

    int dimension() const override { return static_cast<int>(c_.size()); }
    bool analytic() const override { return true; }
    std::pair<Vec, double> bounding_sphere() const override { return {c_, r_}; }

    ObstacleDistance distance(const Vec& x) const override {
        const Vec v = x - c_;
        const double n = v.norm();
        ObstacleDistance out;
        out.normal = n > 0.0 ? Vec(v / n) : unit_axis(v.size(), 0);
        out.distance = n - r_;
        out.nearest = c_ + r_ * out.normal;
        return out;
    }

    Mat hessian(const Vec& x) const override {
        const Vec v = x - c_;
        const double n = v.norm();
        const Vec eta = v / n;
        return (identity(v.size()) - eta * eta.transpose()) / n;
    }

    std::optional<double> raycast(const Vec& o, const Vec& dir, double max_range) const override {
        const Vec oc = o - c_;
        const double b = dir.dot(oc);
        const double cc = oc.squaredNorm() - r_ * r_;
        const double disc = b * b - cc;
        if (disc < 0.0) return std::nullopt;
        const double sq = std::sqrt(disc);
        // Stable pair of roots.
        const double q = -(b + std::copysign(sq, b));
        double t1 = q;
        double t2 = q != 0.0 ? cc / q : q;
        if (t1 > t2) std::swap(t1, t2);
        for (double t : {t1, t2}) {
            if (t > 1e-12 && t <= max_range) return t;
        }
        return std::nullopt;
    }

private:
    Vec c_;
    double r_;
};

class PolygonModel final : public ShapeModel {
public:
    explicit PolygonModel(const std::vector<Vec>& vertices) {
        if (vertices.size() < 3) throw Error(ErrorCode::InvalidArgument, "polygon needs at least 3 vertices");
        for (const Vec& v : vertices) {
            if (v.size() != 2) throw Error(ErrorCode::InvalidArgument, "polygon vertices must be 2D");
            v_.push_back(as2(v));
        }
        const std::size_t n = v_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Vector2d e = v_[(i + 1) % n] - v_[i];
            if (!(e.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "polygon has repeated vertices");
            const Eigen::Vector2d f = v_[(i + 2) % n] - v_[(i + 1) % n];
            const double cross = e.x() * f.y() - e.y() * f.x();
            if (!(cross > 0.0)) {
                throw Error(ErrorCode::InvalidArgument,
                            "polygon must be strictly convex with counter-clockwise vertices");
            }
        }
        // Turning number must be one for a simple polygon.
        double turn = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Vector2d e = v_[(i + 1) % n] - v_[i];
            const Eigen::Vector2d f = v_[(i + 2) % n] - v_[(i + 1) % n];
            turn += std::atan2(e.x() * f.y() - e.y() * f.x(), e.dot(f));
        }
        if (std::abs(turn - 2.0 * M_PI) > 1e-6) throw Error(ErrorCode::InvalidArgument, "polygon is not simple");

        Eigen::Vector2d c = Eigen::Vector2d::Zero();
        for (const auto& p : v_) c += p;
        c /= static_cast<double>(n);
        double r = 0.0;
        for (const auto& p : v_) r = std::max(r, (p - c).norm());
        center_ = from2(c);
        radius_ = r;
    }

    int dimension() const override { return 2; }
    bool analytic() const override { return true; }
    std::pair<Vec, double> bounding_sphere() const override { return {center_, radius_}; }

    struct Feature {
        Eigen::Vector2d nearest;
        int edge = 0;
        double tau = 0.0;  // clamped edge parameter
        double distance = 0.0;
        bool inside = false;
    };

    Feature closest(const Eigen::Vector2d& x) const {
        const std::size_t n = v_.size();
        Feature best;
        best.distance = kInf;
        bool inside = true;
        double depth = kInf;
        int depth_edge = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Vector2d a = v_[i];
            const Eigen::Vector2d e = v_[(i + 1) % n] - a;
            const double len2 = e.squaredNorm();
            const Eigen::Vector2d ax = x - a;
            const double cross = e.x() * ax.y() - e.y() * ax.x();
            const double signed_dist = -cross / std::sqrt(len2);  // positive outside
            if (signed_dist > 0.0) inside = false;
            if (-signed_dist < depth) {
                depth = -signed_dist;
                depth_edge = static_cast<int>(i);
            }
            const double tau = std::clamp(ax.dot(e) / len2, 0.0, 1.0);
            const Eigen::Vector2d p = a + tau * e;
            const double d = (x - p).norm();
            if (d < best.distance) {
                best = {p, static_cast<int>(i), tau, d, false};
            }
        }
        if (inside) {
            const Eigen::Vector2d a = v_[depth_edge];
            const Eigen::Vector2d e = v_[(depth_edge + 1) % n] - a;
            const double tau = std::clamp((x - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
            best = {a + tau * e, depth_edge, tau, -depth, true};
        }
        return best;
    }

    Eigen::Vector2d edge_normal(int i) const {
        const Eigen::Vector2d e = (v_[(i + 1) % v_.size()] - v_[i]).normalized();
        return {e.y(), -e.x()};
    }

    ObstacleDistance distance(const Vec& x) const override {
        const Eigen::Vector2d p = as2(x);
        const Feature f = closest(p);
        ObstacleDistance out;
        out.nearest = from2(f.nearest);
        out.distance = f.distance;
        if (f.inside || f.distance == 0.0) {
            out.normal = from2(edge_normal(f.edge));
        } else {
            out.normal = from2((p - f.nearest) / f.distance);
        }
        return out;
    }

    Mat hessian(const Vec& x) const override {
        const Eigen::Vector2d p = as2(x);
        const Feature f = closest(p);
        const std::size_t n = v_.size();
        if (f.inside) throw Error(ErrorCode::InsideObstacle, "point inside polygon");
        const Eigen::Vector2d a = v_[f.edge];
        const Eigen::Vector2d b = v_[(f.edge + 1) % n];
        const double len = (b - a).norm();
        const double along = f.tau * len;
        if (along > kSmoothTol && along < len - kSmoothTol) return Mat::Zero(2, 2);

        // Vertex region: check the separation from both adjacent face regions.
        const int k = along <= kSmoothTol ? f.edge : static_cast<int>((f.edge + 1) % n);
        const Eigen::Vector2d v = v_[k];
        const Eigen::Vector2d out_dir = (v_[(k + 1) % n] - v).normalized();
        const Eigen::Vector2d in_dir = (v - v_[(k + n - 1) % n]).normalized();
        const Eigen::Vector2d r = p - v;
        if (std::abs(r.dot(out_dir)) <= kSmoothTol || std::abs(r.dot(in_dir)) <= kSmoothTol) {
            throw Error(ErrorCode::NonSmoothPoint, "point on a polygon Voronoi-cell boundary");
        }
        const double dist = r.norm();
        const Eigen::Vector2d eta = r / dist;
        Mat H(2, 2);
        H = (Eigen::Matrix2d::Identity() - eta * eta.transpose()) / dist;
        return H;
    }

    std::optional<double> raycast(const Vec& origin, const Vec& dir, double max_range) const override {
        const Eigen::Vector2d o = as2(origin);
        const Eigen::Vector2d d = as2(dir);
        double best = kInf;
        const std::size_t n = v_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Vector2d a = v_[i];
            const Eigen::Vector2d e = v_[(i + 1) % n] - a;
            const double denom = d.x() * e.y() - d.y() * e.x();
            if (denom == 0.0) continue;
            const Eigen::Vector2d ao = a - o;
            const double t = (ao.x() * e.y() - ao.y() * e.x()) / denom;
            const double s = (ao.x() * d.y() - ao.y() * d.x()) / denom;
            if (s >= 0.0 && s <= 1.0 && t > 1e-12 && t <= max_range) best = std::min(best, t);
        }
        if (best == kInf) return std::nullopt;
        return best;
    }

    const std::vector<Eigen::Vector2d>& vertices() const { return v_; }

private:
    std::vector<Eigen::Vector2d> v_;
    Vec center_;
    double radius_ = 0.0;
};

class SplineModel final : public ShapeModel {
public:
    explicit SplineModel(const std::vector<Vec>& points) : spline_(convert(points)) {
        const auto& box = spline_.bounds();
        center_ = from2(box.center());
        radius_ = 0.5 * box.diagonal().norm();
    }

    int dimension() const override { return 2; }
    std::pair<Vec, double> bounding_sphere() const override { return {center_, radius_}; }

    ObstacleDistance distance(const Vec& x) const override {
        const Eigen::Vector2d p = as2(x);
        const ClosedSpline::Foot foot = spline_.closest(p);
        const Eigen::Vector2d outward = spline_.outward_normal(foot.t);
        const Eigen::Vector2d r = p - foot.point;
        const double sign = r.dot(outward) >= 0.0 ? 1.0 : -1.0;
        ObstacleDistance out;
        out.distance = sign * foot.distance;
        out.nearest = from2(foot.point);
        out.normal = foot.distance > 0.0 ? from2(sign * r / foot.distance) : from2(outward);
        return out;
    }

    std::optional<double> raycast(const Vec& origin, const Vec& dir, double max_range) const override {
        return spline_.raycast(as2(origin), as2(dir), max_range);
    }

    const ClosedSpline& spline() const { return spline_; }

private:
    static std::vector<Eigen::Vector2d> convert(const std::vector<Vec>& points) {
        std::vector<Eigen::Vector2d> out;
        for (const Vec& p : points) {
            if (p.size() != 2) throw Error(ErrorCode::InvalidArgument, "spline control points must be 2D");
            out.push_back(as2(p));
        }
        return out;
    }

    ClosedSpline spline_;
    Vec center_;
    double radius_ = 0.0;
};

class ImplicitModel final : public ShapeModel {
public:
    explicit ImplicitModel(const Implicit& spec) : spec_(spec) {
        if (!spec_.level) throw Error(ErrorCode::InvalidArgument, "implicit obstacle without level-set function");
        if (spec_.center.size() != 2 && spec_.center.size() != 3) {
            throw Error(ErrorCode::InvalidArgument, "implicit obstacle center must be 2D or 3D");
        }
        scale_ = std::isfinite(spec_.bound_radius) && spec_.bound_radius > 0.0 ? spec_.bound_radius : 1.0;
    }

    int dimension() const override { return static_cast<int>(spec_.center.size()); }
    std::pair<Vec, double> bounding_sphere() const override { return {spec_.center, spec_.bound_radius}; }

    double f(const Vec& x) const { return spec_.level(x); }

    Vec grad(const Vec& x) const {
        if (spec_.gradient) return spec_.gradient(x);
        const Eigen::Index n = x.size();
        const double h = 1e-6 * std::max(1.0, x.norm());
        Vec g(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const Vec e = unit_axis(n, j);
            g[j] = (f(x + h * e) - f(x - h * e)) / (2.0 * h);
        }
        return g;
    }

    Mat level_hessian(const Vec& x) const {
        const Eigen::Index n = x.size();
        const double h = 1e-6 * std::max(1.0, x.norm());
        Mat H(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const Vec e = unit_axis(n, j);
            H.col(j) = (grad(x + h * e) - grad(x - h * e)) / (2.0 * h);
        }
        return 0.5 * (H + H.transpose());
    }

    // Newton steps along the gradient onto the zero level set.
    Vec to_surface(Vec y) const {
        for (int it = 0; it < 100; ++it) {
            const double fy = f(y);
            const Vec g = grad(y);
            const double g2 = g.squaredNorm();
            if (g2 == 0.0) break;
            Vec step = (fy / g2) * g;
            const double sn = step.norm();
            if (sn > scale_) step *= scale_ / sn;
            y -= step;
            if (sn <= 1e-15 * scale_) break;
        }
        return y;
    }

    Vec project(const Vec& x) const {
        Vec y = to_surface(x);
        // Foot-point iteration: slide the tangent-plane projection of x back
        // onto the surface.
        for (int it = 0; it < 60; ++it) {
            const Vec n = grad(y).normalized();
            const Vec r = x - y;
            const Vec yt = y + (r - n * n.dot(r));
            const Vec next = to_surface(yt);
            const double change = (next - y).norm();
            y = next;
            if (change <= 1e-10 * scale_) break;
        }
        // Lagrange-Newton polish of (y - x) + lambda grad f(y) = 0, f(y) = 0.
        const Eigen::Index n = x.size();
        Vec g = grad(y);
        double lambda = (x - y).dot(g) / g.squaredNorm();
        auto residual = [&](const Vec& yy, double lam, const Vec& gg) {
            return std::hypot((yy - x + lam * gg).norm(), f(yy) / std::max(gg.norm(), 1e-300));
        };
        double res = residual(y, lambda, g);
        for (int it = 0; it < 20 && res > 1e-15 * scale_; ++it) {
            const Mat Hf = level_hessian(y);
            Eigen::Matrix4d K = Eigen::Matrix4d::Zero();
            Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
            K.topLeftCorner(n, n) = identity(n) + lambda * Hf;
            K.block(0, n, n, 1) = g;
            K.block(n, 0, 1, n) = g.transpose();
            rhs.head(n) = -(y - x + lambda * g);
            rhs[n] = -f(y);
            const Eigen::MatrixXd Ks = K.topLeftCorner(n + 1, n + 1);
            const Eigen::VectorXd delta = Ks.fullPivLu().solve(rhs.head(n + 1));
            const Vec y_new = y + delta.head(n);
            const double lam_new = lambda + delta[n];
            const Vec g_new = grad(y_new);
            const double res_new = residual(y_new, lam_new, g_new);
            if (!(res_new < res)) break;
            y = y_new;
            lambda = lam_new;
            g = g_new;
            res = res_new;
        }
        return y;
    }

    ObstacleDistance distance(const Vec& x) const override {
        if (spec_.shape == Implicit::Shape::Torus) return torus_distance(x);
        const double fx = f(x);
        const Vec y = project(x);
        const Vec r = x - y;
        const double dist = r.norm();
        ObstacleDistance out;
        out.nearest = y;
        out.distance = fx > 0.0 ? dist : -dist;
        if (dist > 0.0) {
            out.normal = fx > 0.0 ? Vec(r / dist) : Vec(-r / dist);
        } else {
            out.normal = grad(y).normalized();
        }
        return out;
    }

    std::optional<double> raycast(const Vec& origin, const Vec& dir, double max_range) const override {
        if (spec_.shape == Implicit::Shape::Ellipsoid) {
            const Vec p = (origin - spec_.center).cwiseQuotient(spec_.semi_axes);
            const Vec q = dir.cwiseQuotient(spec_.semi_axes);
            const double a = q.squaredNorm();
            const double b = p.dot(q);
            const double disc = b * b - a * (p.squaredNorm() - 1.0);
            if (disc < 0.0) return std::nullopt;
            const double root = std::sqrt(disc);
            for (double t : {(-b - root) / a, (-b + root) / a}) {
                if (t > 1e-12 && t <= max_range) return t;
            }
            return std::nullopt;
        }
        return ShapeModel::raycast(origin, dir, max_range);
    }

private:
    // Closed form around the tube's core circle. On the symmetry axis and on
    // the core circle the foot is not unique; a fixed radial direction is used.
    ObstacleDistance torus_distance(const Vec& x) const {
        const Vec& a = spec_.axis;
        const Vec p = x - spec_.center;
        const double z = p.dot(a);
        Vec radial = p - z * a;
        double rho = radial.norm();
        if (rho <= 1e-12 * scale_) {
            const Vec seed = std::abs(a[0]) < 0.9 ? vec3(1, 0, 0) : vec3(0, 1, 0);
            radial = (seed - a * a.dot(seed)).normalized();
            rho = 0.0;
        } else {
            radial /= rho;
        }
        const Vec core = spec_.center + spec_.major_radius * radial;
        const Vec v = x - core;
        const double len = v.norm();
        ObstacleDistance out;
        out.normal = len > 1e-12 * scale_ ? Vec(v / len) : radial;
        out.nearest = core + spec_.minor_radius * out.normal;
        out.distance = len - spec_.minor_radius;
        return out;
    }

    Implicit spec_;
    double scale_ = 1.0;
};

}  // namespace

}  // namespace detail

Implicit make_ellipsoid(const Vec& center, const Vec& semi_axes) {
    if (center.size() != semi_axes.size()) throw Error(ErrorCode::InvalidArgument, "ellipsoid axes/center size mismatch");
    if ((semi_axes.array() <= 0.0).any()) throw Error(ErrorCode::InvalidArgument, "ellipsoid semi-axes must be positive");
    Implicit s;
    s.shape = Implicit::Shape::Ellipsoid;
    s.center = center;
    s.semi_axes = semi_axes;
    const Vec inv2 = semi_axes.array().square().inverse().matrix();
    s.level = [center, inv2](const Vec& x) {
        const Vec p = x - center;
        return p.cwiseProduct(p).dot(inv2) - 1.0;
    };
    s.gradient = [center, inv2](const Vec& x) -> Vec { return 2.0 * (x - center).cwiseProduct(inv2); };
    s.bound_radius = semi_axes.maxCoeff();
    return s;
}

Implicit make_torus(const Vec& center, const Vec& axis, double major_radius, double minor_radius) {
    if (center.size() != 3 || axis.size() != 3) throw Error(ErrorCode::InvalidArgument, "torus is 3D only");
    if (!(minor_radius > 0.0) || !(major_radius > minor_radius)) {
        throw Error(ErrorCode::InvalidArgument, "torus needs major_radius > minor_radius > 0");
    }
    if (!(axis.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "torus axis must be nonzero");
    Implicit s;
    s.shape = Implicit::Shape::Torus;
    s.center = center;
    s.axis = axis.normalized();
    s.major_radius = major_radius;
    s.minor_radius = minor_radius;
    const Vec a = s.axis;
    const double R = major_radius;
    const double r = minor_radius;
    s.level = [center, a, R, r](const Vec& x) {
        const Vec p = x - center;
        const double z = p.dot(a);
        const double rho = (p - z * a).norm();
        return (rho - R) * (rho - R) + z * z - r * r;
    };
    s.gradient = [center, a, R](const Vec& x) -> Vec {
        const Vec p = x - center;
        const double z = p.dot(a);
        const Vec radial = p - z * a;
        const double rho = radial.norm();
        Vec g = 2.0 * z * a;
        if (rho > 0.0) g += 2.0 * (rho - R) * radial / rho;
        return g;
    };
    s.bound_radius = R + r;
    return s;
}

namespace {

std::shared_ptr<const detail::ShapeModel> build_model(const ObstacleShape& shape) {
    return std::visit(
        [](const auto& s) -> std::shared_ptr<const detail::ShapeModel> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Disk2D>) {
                if (s.center.size() != 2) throw Error(ErrorCode::InvalidArgument, "disk center must be 2D");
                return std::make_shared<detail::BallModel>(s.center, s.radius);
            } else if constexpr (std::is_same_v<T, Sphere3D>) {
                if (s.center.size() != 3) throw Error(ErrorCode::InvalidArgument, "sphere center must be 3D");
                return std::make_shared<detail::BallModel>(s.center, s.radius);
            } else if constexpr (std::is_same_v<T, ConvexPolygon2D>) {
                return std::make_shared<detail::PolygonModel>(s.vertices);
            } else if constexpr (std::is_same_v<T, Spline2D>) {
                return std::make_shared<detail::SplineModel>(s.control_points);
            } else {
                return std::make_shared<detail::ImplicitModel>(s);
            }
        },
        shape);
}

}  // namespace

Obstacle::Obstacle(ObstacleShape shape) : shape_(std::move(shape)), model_(build_model(shape_)) {}

int Obstacle::dimension() const { return model_->dimension(); }

std::string Obstacle::type_name() const {
    static constexpr const char* names[] = {"disk", "sphere", "polygon", "spline", "implicit"};
    return names[shape_.index()];
}

ObstacleDistance Obstacle::distance(const Vec& x) const { return model_->distance(x); }

Mat Obstacle::distance_hessian(const Vec& x) const { return model_->hessian(x); }

std::optional<double> Obstacle::raycast(const Vec& origin, const Vec& direction, double max_range) const {
    return model_->raycast(origin, direction, max_range);
}

std::pair<Vec, double> Obstacle::bounding_sphere() const { return model_->bounding_sphere(); }

bool Obstacle::analytic() const { return model_->analytic(); }

const ClosedSpline* Obstacle::spline_curve() const {
    const auto* m = dynamic_cast<const detail::SplineModel*>(model_.get());
    return m ? &m->spline() : nullptr;
}

World::World(int dimension, std::vector<Obstacle> obstacles, std::optional<Bounds> bounds)
    : dimension_(dimension), obstacles_(std::move(obstacles)), bounds_(std::move(bounds)) {
    if (dimension_ != 2 && dimension_ != 3) throw Error(ErrorCode::InvalidArgument, "world dimension must be 2 or 3");
    for (const Obstacle& o : obstacles_) {
        if (o.dimension() != dimension_) {
            throw Error(ErrorCode::InvalidArgument, "obstacle dimension does not match the world");
        }
    }
    if (bounds_) {
        if (bounds_->lo.size() != dimension_ || bounds_->hi.size() != dimension_) {
            throw Error(ErrorCode::InvalidArgument, "bounds dimension does not match the world");
        }
        if (((bounds_->hi - bounds_->lo).array() <= 0.0).any()) {
            throw Error(ErrorCode::InvalidArgument, "bounds must have positive extent");
        }
    }
}

namespace {

void check_point(const World& world, const Vec& x) {
    if (x.size() != world.dimension()) throw Error(ErrorCode::InvalidArgument, "point dimension does not match the world");
}

struct Nearest {
    int index = -1;
    ObstacleDistance d;
    double second = kInf;  // distance to the runner-up obstacle
};

// Closest obstacle with bounding-sphere pruning. With `need_second`, the
// runner-up distance is resolved as well.
Nearest nearest_obstacle(const World& world, const Vec& x, bool need_second) {
    const auto& obs = world.obstacles();
    const int n = static_cast<int>(obs.size());
    Nearest out;
    out.d.distance = kInf;

    auto lower_bound = [&](int i) {
        const auto [c, r] = obs[i].bounding_sphere();
        return std::isfinite(r) ? (x - c).norm() - r : -kInf;
    };
    auto consider = [&](int i) {
        ObstacleDistance d = obs[i].distance(x);
        if (d.distance < out.d.distance || (d.distance == out.d.distance && i < out.index)) {
            out.second = std::min(out.second, out.d.distance);
            out.d = std::move(d);
            out.index = i;
        } else {
            out.second = std::min(out.second, d.distance);
        }
    };

    int first = 0;
    double first_lb = kInf;
    for (int i = 0; i < n; ++i) {
        const double lb = lower_bound(i);
        if (lb < first_lb) {
            first_lb = lb;
            first = i;
        }
    }
    consider(first);
    for (int i = 0; i < n; ++i) {
        if (i == first) continue;
        const double cutoff = need_second ? out.second : out.d.distance;
        if (lower_bound(i) <= cutoff) consider(i);
    }
    return out;
}

}  // namespace

DistanceQuery distance_to_obstacles(const World& world, const Vec& x) {
    check_point(world, x);
    if (world.empty()) throw Error(ErrorCode::EmptyWorld, "world has no obstacles");
    Nearest near = nearest_obstacle(world, x, false);
    if (!(near.d.distance > 0.0)) {
        throw Error(ErrorCode::InsideObstacle, "point lies inside or on obstacle " + std::to_string(near.index));
    }
    return {near.d.distance, std::move(near.d.nearest), std::move(near.d.normal), near.index};
}

std::vector<DistanceQuery> distances_to_each(const World& world, const Vec& x) {
    check_point(world, x);
    std::vector<DistanceQuery> out;
    out.reserve(world.obstacles().size());
    int i = 0;
    for (const Obstacle& o : world.obstacles()) {
        ObstacleDistance d = o.distance(x);
        out.push_back({d.distance, std::move(d.nearest), std::move(d.normal), i++});
    }
    return out;
}

double margin(const World& world, const Vec& x, const RobotParams& robot) {
    return distance_to_obstacles(world, x).value - robot.clearance();
}

Mat distance_hessian(const World& world, const Vec& x) {
    check_point(world, x);
    if (world.empty()) throw Error(ErrorCode::EmptyWorld, "world has no obstacles");
    const Nearest near = nearest_obstacle(world, x, true);
    if (!(near.d.distance > 0.0)) throw Error(ErrorCode::InsideObstacle, "point lies inside an obstacle");
    if (near.second - near.d.distance <= kSmoothTol) {
        throw Error(ErrorCode::NonSmoothPoint, "point lies on a tie locus between obstacles");
    }
    return world.obstacles()[near.index].distance_hessian(x);
}

namespace {

// Clearance between two obstacles: exact for analytic pairs, sampled
// otherwise. nullopt when no estimate is available.
std::optional<double> pair_clearance(const Obstacle& a, const Obstacle& b, bool& estimated) {
    const auto* ba = std::get_if<Disk2D>(&a.shape());
    const auto* bb = std::get_if<Disk2D>(&b.shape());
    const auto* sa = std::get_if<Sphere3D>(&a.shape());
    const auto* sb = std::get_if<Sphere3D>(&b.shape());
    if (ba && bb) return (ba->center - bb->center).norm() - ba->radius - bb->radius;
    if (sa && sb) return (sa->center - sb->center).norm() - sa->radius - sb->radius;

    const auto* pa = std::get_if<ConvexPolygon2D>(&a.shape());
    const auto* pb = std::get_if<ConvexPolygon2D>(&b.shape());
    if (ba && pb) return b.distance(ba->center).distance - ba->radius;
    if (pa && bb) return a.distance(bb->center).distance - bb->radius;
    if (pa && pb) {
        // Disjoint convex polygons attain their separation at a vertex.
        double best = kInf;
        for (const Vec& v : pa->vertices) best = std::min(best, b.distance(v).distance);
        for (const Vec& v : pb->vertices) best = std::min(best, a.distance(v).distance);
        return best;
    }

    auto sample_against = [&](const Spline2D& s, const Obstacle& self, const Obstacle& other) {
        const auto& model = static_cast<const detail::SplineModel&>(self.model());
        double best = kInf;
        for (double t : model.spline().sample_parameters()) {
            const Eigen::Vector2d p = model.spline().point(t);
            best = std::min(best, other.distance(vec2(p.x(), p.y())).distance);
        }
        (void)s;
        return best;
    };
    const auto* spa = std::get_if<Spline2D>(&a.shape());
    const auto* spb = std::get_if<Spline2D>(&b.shape());
    if (spa && (std::get_if<Implicit>(&b.shape()) == nullptr)) {
        estimated = true;
        return sample_against(*spa, a, b);
    }
    if (spb && (std::get_if<Implicit>(&a.shape()) == nullptr)) {
        estimated = true;
        return sample_against(*spb, b, a);
    }
    return std::nullopt;
}

}  // namespace

FeasibilityReport validate_feasibility(const World& world, const RobotParams& robot, const PenaltyParams& penalty) {
    FeasibilityReport report;
    double reach = kInf;
    const auto& obs = world.obstacles();
    bool unknown = false;

    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (std::holds_alternative<Implicit>(obs[i].shape())) {
            unknown = true;
            report.notes.push_back("UnknownReach: implicit obstacle " + std::to_string(i) +
                                   " is excluded from the reach bound");
        }
        if (const auto* sp = std::get_if<Spline2D>(&obs[i].shape())) {
            (void)sp;
            const auto& model = static_cast<const detail::SplineModel&>(obs[i].model());
            double concave = kInf;
            for (double t : model.spline().sample_parameters()) {
                const double k = model.spline().curvature(t);
                if (k < 0.0) concave = std::min(concave, -1.0 / k);
            }
            report.advisory = true;
            report.notes.push_back("UnknownReach: spline obstacle " + std::to_string(i) +
                                   " reach estimated from sampled curvature (min concave radius " +
                                   fmt_double(concave) + ")");
            reach = std::min(reach, concave);
        }
        for (std::size_t j = i + 1; j < obs.size(); ++j) {
            bool estimated = false;
            const auto c = pair_clearance(obs[i], obs[j], estimated);
            if (!c) {
                unknown = true;
                continue;
            }
            if (estimated) report.advisory = true;
            if (*c <= 0.0) {
                report.violations.push_back("obstacles " + std::to_string(i) + " and " + std::to_string(j) +
                                            " overlap");
            }
            reach = std::min(reach, 0.5 * std::max(*c, 0.0));
        }
    }
    if (unknown) report.advisory = true;
    report.reach = reach;

    if (!(robot.radius > 0.0)) report.violations.push_back("robot radius R must be positive");
    if (!(robot.epsilon > 0.0)) {
        report.violations.push_back("feasibility condition violated: epsilon must be positive");
    } else if (!(robot.epsilon < reach - robot.radius)) {
        report.violations.push_back("feasibility condition violated: epsilon = " + fmt_double(robot.epsilon) +
                                    " must be below min(h, rho) - R = " + fmt_double(reach - robot.radius));
    }
    if (!(penalty.mu > 0.0)) {
        report.violations.push_back("penalty condition violated: mu must be positive");
    } else if (!(penalty.mu < reach - robot.clearance())) {
        report.violations.push_back("penalty condition violated: mu = " + fmt_double(penalty.mu) +
                                    " must be below min(h, rho) - (R + epsilon) = " +
                                    fmt_double(reach - robot.clearance()));
    }
    if (!(penalty.nu > 0.0)) report.violations.push_back("penalty condition violated: nu must be positive");
    report.feasible = report.violations.empty();
    return report;
}

}  // namespace spf
