#include "spf/spline.hpp"

#include "spf/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace spf {

namespace {

constexpr int kChunkSize = 16;

// Real roots of a + b u + c u^2 (c may vanish), ascending.
int quadratic_roots(double a, double b, double c, std::array<double, 2>& out) {
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
    if (scale == 0.0) return 0;
    if (std::abs(c) <= 1e-14 * scale) {
        if (std::abs(b) <= 1e-14 * scale) return 0;
        out[0] = -a / b;
        return 1;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return 0;
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(sq, b));
    double r0 = q / c;
    double r1 = q != 0.0 ? a / q : r0;
    if (r0 > r1) std::swap(r0, r1);
    out[0] = r0;
    out[1] = r1;
    return 2;
}

// Exact bounding box of one cubic piece restricted to [u0, u1].
Eigen::AlignedBox2d piece_box(const ClosedSpline::Piece& p, double u0, double u1) {
    auto eval = [&](double u) -> Eigen::Vector2d { return p.a + u * (p.b + u * (p.c + u * p.d)); };
    Eigen::AlignedBox2d box;
    box.extend(eval(u0));
    box.extend(eval(u1));
    for (int k = 0; k < 2; ++k) {
        std::array<double, 2> r{};
        const int n = quadratic_roots(p.b[k], 2.0 * p.c[k], 3.0 * p.d[k], r);
        for (int i = 0; i < n; ++i) {
            if (r[i] > u0 && r[i] < u1) box.extend(eval(r[i]));
        }
    }
    return box;
}

bool ray_hits_box(const Eigen::AlignedBox2d& box, const Eigen::Vector2d& o, const Eigen::Vector2d& dir,
                  double max_range) {
    double t0 = 0.0;
    double t1 = max_range;
    constexpr double pad = 1e-9;
    for (int k = 0; k < 2; ++k) {
        const double lo = box.min()[k] - pad;
        const double hi = box.max()[k] + pad;
        if (std::abs(dir[k]) < 1e-300) {
            if (o[k] < lo || o[k] > hi) return false;
            continue;
        }
        double ta = (lo - o[k]) / dir[k];
        double tb = (hi - o[k]) / dir[k];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    return true;
}

}  // namespace

std::vector<double> cubic_roots_unit(double c0, double c1, double c2, double c3) {
    auto p = [&](double u) { return c0 + u * (c1 + u * (c2 + u * c3)); };
    auto dp = [&](double u) { return c1 + u * (2.0 * c2 + u * 3.0 * c3); };

    std::array<double, 4> breaks{0.0, 0.0, 0.0, 0.0};
    int nb = 0;
    breaks[nb++] = 0.0;
    std::array<double, 2> crit{};
    const int nc = quadratic_roots(c1, 2.0 * c2, 3.0 * c3, crit);
    for (int i = 0; i < nc; ++i) {
        if (crit[i] > 0.0 && crit[i] < 1.0) breaks[nb++] = crit[i];
    }
    breaks[nb++] = 1.0;
    std::sort(breaks.begin(), breaks.begin() + nb);

    std::vector<double> roots;
    for (int i = 0; i + 1 < nb; ++i) {
        double lo = breaks[i];
        double hi = breaks[i + 1];
        double plo = p(lo);
        double phi = p(hi);
        if (plo == 0.0) {
            if (roots.empty() || roots.back() != lo) roots.push_back(lo);
            continue;
        }
        if (i + 2 == nb && phi == 0.0) {
            roots.push_back(hi);
            continue;
        }
        if ((plo < 0.0) == (phi < 0.0)) continue;
        double u = 0.5 * (lo + hi);
        for (int it = 0; it < 100; ++it) {
            const double pu = p(u);
            if (pu == 0.0) break;
            if ((pu < 0.0) == (plo < 0.0)) {
                lo = u;
                plo = pu;
            } else {
                hi = u;
            }
            const double d = dp(u);
            double next = d != 0.0 ? u - pu / d : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - u) <= 1e-16) {
                u = next;
                break;
            }
            u = next;
        }
        roots.push_back(u);
    }
    return roots;
}

ClosedSpline::ClosedSpline(std::vector<Eigen::Vector2d> points, int samples) : points_(std::move(points)) {
    const int m = static_cast<int>(points_.size());
    if (m < 4) throw Error(ErrorCode::InvalidArgument, "spline needs at least 4 control points");
    if (samples < m) throw Error(ErrorCode::InvalidArgument, "spline sample count below control point count");

    std::vector<double> h(m);
    for (int i = 0; i < m; ++i) {
        h[i] = (points_[(i + 1) % m] - points_[i]).norm();
        if (!(h[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "spline has repeated consecutive control points");
    }

    // Periodic second-derivative system.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd rhs(m, 2);
    for (int i = 0; i < m; ++i) {
        const int ip = (i + 1) % m;
        const int im = (i + m - 1) % m;
        A(i, im) += h[im];
        A(i, i) += 2.0 * (h[im] + h[i]);
        A(i, ip) += h[i];
        const Eigen::Vector2d r =
            6.0 * ((points_[ip] - points_[i]) / h[i] - (points_[i] - points_[im]) / h[im]);
        rhs.row(i) = r.transpose();
    }
    const Eigen::MatrixXd M = A.partialPivLu().solve(rhs);

    pieces_.resize(m);
    double t = 0.0;
    for (int i = 0; i < m; ++i) {
        const int ip = (i + 1) % m;
        const Eigen::Vector2d Mi = M.row(i).transpose();
        const Eigen::Vector2d Mp = M.row(ip).transpose();
        Piece& pc = pieces_[i];
        pc.t0 = t;
        pc.h = h[i];
        pc.a = points_[i];
        pc.c = 0.5 * Mi;
        pc.d = (Mp - Mi) / (6.0 * h[i]);
        pc.b = (points_[ip] - points_[i]) / h[i] - h[i] * (2.0 * Mi + Mp) / 6.0;
        pc.box = piece_box(pc, 0.0, h[i]);
        bounds_.extend(pc.box);
        t += h[i];
    }
    period_ = t;

    for (int i = 0; i < m; ++i) {
        const Piece& pc = pieces_[i];
        const int n = std::max(2, static_cast<int>(std::ceil(samples * pc.h / period_)));
        const double du = pc.h / n;
        const int first_in_piece = static_cast<int>(samples_.size());
        for (int k = 0; k < n; ++k) {
            const double u = k * du;
            samples_.push_back({pc.t0 + u, i, pc.a + u * (pc.b + u * (pc.c + u * pc.d))});
        }
        for (int k = 0; k < n; k += kChunkSize) {
            const int count = std::min(kChunkSize, n - k);
            const double u0 = k * du;
            const double u1 = std::min(pc.h, (k + count) * du);
            chunks_.push_back({first_in_piece + k, count, piece_box(pc, u0, u1)});
        }
    }

    double area = 0.0;
    const int ns = static_cast<int>(samples_.size());
    for (int i = 0; i < ns; ++i) {
        const Eigen::Vector2d& p = samples_[i].p;
        const Eigen::Vector2d& q = samples_[(i + 1) % ns].p;
        area += p.x() * q.y() - q.x() * p.y();
    }
    orientation_ = area >= 0.0 ? 1.0 : -1.0;
}

double ClosedSpline::wrap(double t) const {
    if (t >= 0.0 && t < period_) return t;
    if (t < 0.0 && t >= -period_) {
        const double r = t + period_;
        return r < period_ ? r : 0.0;
    }
    if (t >= period_ && t < 2.0 * period_) return t - period_;
    double r = std::fmod(t, period_);
    if (r < 0.0) r += period_;
    if (r >= period_) r = 0.0;
    return r;
}

int ClosedSpline::piece_index(double t) const {
    const auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                                     [](double value, const Piece& p) { return value < p.t0; });
    const int idx = static_cast<int>(it - pieces_.begin()) - 1;
    return std::clamp(idx, 0, static_cast<int>(pieces_.size()) - 1);
}

ClosedSpline::Jet ClosedSpline::jet(double t) const {
    t = wrap(t);
    const Piece& p = pieces_[piece_index(t)];
    const double u = t - p.t0;
    return {p.a + u * (p.b + u * (p.c + u * p.d)), p.b + u * (2.0 * p.c + u * 3.0 * p.d), 2.0 * p.c + 6.0 * u * p.d};
}

Eigen::Vector2d ClosedSpline::point(double t) const {
    t = wrap(t);
    const Piece& p = pieces_[piece_index(t)];
    const double u = t - p.t0;
    return p.a + u * (p.b + u * (p.c + u * p.d));
}

Eigen::Vector2d ClosedSpline::derivative(double t) const {
    t = wrap(t);
    const Piece& p = pieces_[piece_index(t)];
    const double u = t - p.t0;
    return p.b + u * (2.0 * p.c + u * 3.0 * p.d);
}

Eigen::Vector2d ClosedSpline::second_derivative(double t) const {
    t = wrap(t);
    const Piece& p = pieces_[piece_index(t)];
    const double u = t - p.t0;
    return 2.0 * p.c + 6.0 * u * p.d;
}

Eigen::Vector2d ClosedSpline::outward_normal(double t) const {
    const Eigen::Vector2d d = derivative(t).normalized();
    return orientation_ * Eigen::Vector2d(d.y(), -d.x());
}

double ClosedSpline::curvature(double t) const {
    const Eigen::Vector2d d1 = derivative(t);
    const Eigen::Vector2d d2 = second_derivative(t);
    const double speed = d1.norm();
    return orientation_ * (d1.x() * d2.y() - d1.y() * d2.x()) / (speed * speed * speed);
}

std::vector<double> ClosedSpline::sample_parameters() const {
    std::vector<double> out;
    out.reserve(samples_.size());
    for (const Sample& s : samples_) out.push_back(s.t);
    return out;
}

double ClosedSpline::refine(const Eigen::Vector2d& x, double lo, double mid, double hi) const {
    auto g = [&](double t) {
        const Jet j = jet(t);
        return (j.p - x).dot(j.d1);
    };

    const double width = hi - lo;
    for (int shift = 0; shift < 8 && g(lo) > 0.0; ++shift) {
        hi = lo;
        lo -= width;
        mid = 0.5 * (lo + hi);
    }
    for (int shift = 0; shift < 8 && g(hi) < 0.0; ++shift) {
        lo = hi;
        hi += width;
        mid = 0.5 * (lo + hi);
    }

    double t = mid;
    const double tol = 1e-15 * std::max(1.0, period_);
    for (int it = 0; it < 80; ++it) {
        const Jet j = jet(t);
        const Eigen::Vector2d r = j.p - x;
        const double gt = r.dot(j.d1);
        if (gt == 0.0) break;
        if (gt < 0.0) {
            lo = t;
        } else {
            hi = t;
        }
        const double gp = j.d1.squaredNorm() + r.dot(j.d2);
        double next = gp > 0.0 ? t - gt / gp : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= tol || hi - lo <= tol) {
            t = next;
            break;
        }
        t = next;
    }
    return wrap(t);
}

ClosedSpline::Foot ClosedSpline::closest(const Eigen::Vector2d& x) const {
    double best2 = std::numeric_limits<double>::infinity();
    int best = -1;

    // Candidate basins: best sample of each evaluated chunk.
    constexpr int kMaxCandidates = 8;
    std::array<std::pair<double, int>, kMaxCandidates> cand{};
    int ncand = 0;

    auto scan_chunk = [&](const Chunk& c) {
        double local2 = std::numeric_limits<double>::infinity();
        int local = -1;
        for (int k = c.first; k < c.first + c.count; ++k) {
            const double d2 = (samples_[k].p - x).squaredNorm();
            if (d2 < local2) {
                local2 = d2;
                local = k;
            }
        }
        if (local2 < best2) {
            best2 = local2;
            best = local;
        }
        if (ncand < kMaxCandidates) {
            cand[ncand++] = {local2, local};
        } else {
            auto worst = std::max_element(cand.begin(), cand.end());
            if (local2 < worst->first) *worst = {local2, local};
        }
    };

    int first = 0;
    double first_lb = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(chunks_.size()); ++i) {
        const double lb = chunks_[i].box.squaredExteriorDistance(x);
        if (lb < first_lb) {
            first_lb = lb;
            first = i;
        }
    }
    scan_chunk(chunks_[first]);
    for (int i = 0; i < static_cast<int>(chunks_.size()); ++i) {
        if (i == first) continue;
        if (chunks_[i].box.squaredExteriorDistance(x) < best2) scan_chunk(chunks_[i]);
    }

    const int ns = static_cast<int>(samples_.size());
    auto spacing_at = [&](int k) {
        const double next = k + 1 < ns ? samples_[k + 1].t : period_;
        const double prev = k > 0 ? samples_[k].t - samples_[k - 1].t : period_ - samples_[ns - 1].t;
        return std::max(next - samples_[k].t, prev);
    };

    Foot foot;
    foot.distance = std::numeric_limits<double>::infinity();
    const double best_d = std::sqrt(best2);
    auto sample_d2 = [&](int k) { return (samples_[(k + ns) % ns].p - x).squaredNorm(); };
    for (int c = 0; c < ncand; ++c) {
        const int k = cand[c].second;
        const double spacing = spacing_at(k);
        if (k != best) {
            if (std::sqrt(cand[c].first) > best_d + 2.0 * spacing) continue;
            // Only local minima of the sampled distance start a new basin.
            if (sample_d2(k - 1) < cand[c].first || sample_d2(k + 1) < cand[c].first) continue;
        }
        const double t0 = samples_[k].t;
        const double t = refine(x, t0 - spacing, t0, t0 + spacing);
        const Eigen::Vector2d p = point(t);
        const double d = (p - x).norm();
        if (d < foot.distance) {
            foot.distance = d;
            foot.t = t;
            foot.point = p;
        }
    }
    return foot;
}

std::optional<double> ClosedSpline::raycast(const Eigen::Vector2d& origin, const Eigen::Vector2d& direction,
                                            double max_range) const {
    if (!ray_hits_box(bounds_, origin, direction, max_range)) return std::nullopt;
    const Eigen::Vector2d perp(-direction.y(), direction.x());
    double best = std::numeric_limits<double>::infinity();
    for (const Piece& p : pieces_) {
        if (!ray_hits_box(p.box, origin, direction, max_range)) continue;
        const double h = p.h;
        const double q0 = perp.dot(p.a - origin);
        const double q1 = perp.dot(p.b) * h;
        const double q2 = perp.dot(p.c) * h * h;
        const double q3 = perp.dot(p.d) * h * h * h;
        for (double v : cubic_roots_unit(q0, q1, q2, q3)) {
            const double u = v * h;
            const Eigen::Vector2d s = p.a + u * (p.b + u * (p.c + u * p.d));
            const double t = direction.dot(s - origin);
            if (t > 1e-12 && t <= max_range && t < best) best = t;
        }
    }
    if (best == std::numeric_limits<double>::infinity()) return std::nullopt;
    return best;
}

}  // namespace spf
