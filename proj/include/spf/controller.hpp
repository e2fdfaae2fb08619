#pragma once

#include "spf/geometry.hpp"
#include "spf/penalty.hpp"
#include "spf/sensing.hpp"
#include "spf/types.hpp"

#include <span>
#include <vector>

namespace spf {

/// Smooth potential with a unique minimum at the goal. The nominal
/// controller descends its gradient.
class Potential {
public:
    virtual ~Potential() = default;

    virtual int dimension() const = 0;
    virtual double value(const Vec& x) const = 0;
    virtual Vec gradient(const Vec& x) const = 0;
    /// Central differences of the gradient unless overridden.
    virtual Mat hessian(const Vec& x) const;
};

/// V(x) = 1/2 (x - goal)^T P (x - goal) with P symmetric positive definite.
class QuadraticPotential final : public Potential {
public:
    QuadraticPotential(Vec goal, Mat gain);

    const Vec& goal() const { return goal_; }
    const Mat& gain() const { return gain_; }

    int dimension() const override { return static_cast<int>(goal_.size()); }
    double value(const Vec& x) const override;
    Vec gradient(const Vec& x) const override;
    Mat hessian(const Vec&) const override { return gain_; }

private:
    Vec goal_;
    Mat gain_;
};

struct FilterDiagnostics {
    double s = 0.0;  // alignment of the nominal command with the normal
    double w = 0.0;  // blend weight in [0, 1]
    Vec nominal;
    Vec filtered;
};

struct FilterResult {
    Vec velocity;
    FilterDiagnostics diagnostics;
};

/// -grad V(x).
Vec nominal_control(const Potential& potential, const Vec& x);

/// u = (I - w eta eta^T) nominal with w = blend_weight(d, nominal . eta).
/// Invalid readings pass the nominal command through.
FilterResult spf_filter(const Vec& nominal, const SensorReading& reading, const PenaltyParams& params);

struct MultiFilterResult {
    Vec velocity;
    std::vector<double> weights;  // per reading, after clamping
    /// Some weight reached the clamp 1 - 1e-9 (SaturatedPenalty).
    bool saturated = false;
};

inline constexpr double kSaturationClamp = 1.0 - 1e-9;

/// Minimizer of |u - nominal|^2 + sum_i psi_i (u . eta_i)^2, from the
/// stationarity system (I + sum_i psi_i eta_i eta_i^T) u = nominal.
MultiFilterResult spf_filter_multi(const Vec& nominal, std::span<const SensorReading> readings,
                                   const PenaltyParams& params);

struct FieldSample {
    Vec velocity;
    SensorReading reading;
    FilterDiagnostics diagnostics;
    double margin = 0.0;  // exact geometric margin at x
};

/// Closed-loop velocity at x: sense, compute the nominal command, filter.
/// Throws OutsidePracticalFreeSpace when the exact margin is below
/// -tolerance.
FieldSample closed_loop_field(const Potential& potential, const World& world, const RobotParams& robot,
                              const PenaltyParams& penalty, const Vec& x, const SensorConfig& sensor,
                              double tolerance = 1e-9);

}  // namespace spf
