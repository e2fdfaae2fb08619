#include "spf/controller.hpp"

#include "spf/error.hpp"

#include <cmath>
#include <limits>

namespace spf {

Mat Potential::hessian(const Vec& x) const {
    const Eigen::Index n = x.size();
    const double h = 1e-5 * std::max(1.0, x.norm());
    Mat H(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vec e = Vec::Zero(n);
        e[j] = h;
        H.col(j) = (gradient(x + e) - gradient(x - e)) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
}

QuadraticPotential::QuadraticPotential(Vec goal, Mat gain) : goal_(std::move(goal)), gain_(std::move(gain)) {
    const Eigen::Index n = goal_.size();
    if (n != 2 && n != 3) throw Error(ErrorCode::InvalidArgument, "goal must be 2D or 3D");
    if (gain_.rows() != n || gain_.cols() != n) throw Error(ErrorCode::InvalidArgument, "gain shape does not match goal");
    if ((gain_ - gain_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "gain must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(gain_);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "gain must be positive definite");
    }
}

double QuadraticPotential::value(const Vec& x) const {
    const Vec e = x - goal_;
    return 0.5 * e.dot(gain_ * e);
}

Vec QuadraticPotential::gradient(const Vec& x) const { return gain_ * (x - goal_); }

Vec nominal_control(const Potential& potential, const Vec& x) { return -potential.gradient(x); }

FilterResult spf_filter(const Vec& nominal, const SensorReading& reading, const PenaltyParams& params) {
    FilterResult out;
    out.diagnostics.nominal = nominal;
    if (!reading.valid) {
        out.velocity = nominal;
        out.diagnostics.filtered = nominal;
        return out;
    }
    if (std::abs(reading.normal.norm() - 1.0) > 1e-6) {
        throw Error(ErrorCode::InvalidNormal, "reading normal is not unit length");
    }
    const double s = nominal.dot(reading.normal);
    const double w = blend_weight(reading.margin, s, params);
    out.diagnostics.s = s;
    out.diagnostics.w = w;
    out.velocity = w == 0.0 ? nominal : Vec(nominal - (w * s) * reading.normal);
    out.diagnostics.filtered = out.velocity;
    return out;
}

MultiFilterResult spf_filter_multi(const Vec& nominal, std::span<const SensorReading> readings,
                                   const PenaltyParams& params) {
    const Eigen::Index n = nominal.size();
    MultiFilterResult out;
    Mat A = identity(n);
    for (const SensorReading& r : readings) {
        if (!r.valid) {
            out.weights.push_back(0.0);
            continue;
        }
        if (std::abs(r.normal.norm() - 1.0) > 1e-6) {
            throw Error(ErrorCode::InvalidNormal, "reading normal is not unit length");
        }
        double w = blend_weight(r.margin, nominal.dot(r.normal), params);
        if (w >= kSaturationClamp) {
            w = kSaturationClamp;
            out.saturated = true;
        }
        out.weights.push_back(w);
        if (w == 0.0) continue;
        const double psi = w / (1.0 - w);
        A.noalias() += psi * r.normal * r.normal.transpose();
    }
    out.velocity = A.ldlt().solve(nominal);
    return out;
}

FieldSample closed_loop_field(const Potential& potential, const World& world, const RobotParams& robot,
                              const PenaltyParams& penalty, const Vec& x, const SensorConfig& sensor,
                              double tolerance) {
    FieldSample out;
    if (world.empty()) {
        out.margin = std::numeric_limits<double>::infinity();
        out.reading.normal = Vec::Zero(x.size());
    } else {
        DistanceQuery q;
        try {
            q = distance_to_obstacles(world, x);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsideObstacle) throw;
            throw Error(ErrorCode::OutsidePracticalFreeSpace, "state lies inside an obstacle");
        }
        out.margin = q.value - robot.clearance();
        if (out.margin < -tolerance) {
            throw Error(ErrorCode::OutsidePracticalFreeSpace,
                        "margin " + std::to_string(out.margin) + " below tolerance");
        }
        if (sensor.mode == SensorMode::Oracle) {
            out.reading = {out.margin, q.normal, true};
        } else {
            out.reading = sense(world, x, robot, sensor);
        }
    }
    FilterResult f = spf_filter(nominal_control(potential, x), out.reading, penalty);
    out.velocity = std::move(f.velocity);
    out.diagnostics = std::move(f.diagnostics);
    return out;
}

}  // namespace spf
