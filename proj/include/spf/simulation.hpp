#pragma once

#include "spf/controller.hpp"
#include "spf/geometry.hpp"
#include "spf/penalty.hpp"
#include "spf/sensing.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace spf {

enum class Integrator { RK4, Euler };

enum class Termination { ReachedGoal, Timeout, Stalled, SafetyFault };

std::string_view to_string(Termination t);
std::string_view to_string(Integrator i);

struct SimConfig {
    World world;
    QuadraticPotential potential;
    RobotParams robot;
    PenaltyParams penalty;
    SensorConfig sensor;
    std::vector<Vec> initials;

    double dt = 1e-3;
    double t_max = 60.0;
    double goal_tolerance = 1e-2;
    Integrator integrator = Integrator::RK4;

    double stall_speed = 1e-6;   // |u| below this counts towards a stall
    double stall_window = 1.0;   // seconds of sustained low speed
    double safety_tolerance = 1e-6;  // allowed margin undershoot
    int max_halvings = 6;        // step retries down to dt / 64
    int record_stride = 1;       // keep every n-th step in the trajectory
};

void validate(const SimConfig& config);

struct TrajectoryRecord {
    double t = 0.0;
    Vec x;
    Vec u;
    double d = 0.0;  // exact margin
    double s = 0.0;
    double w = 0.0;
    double V = 0.0;
};

struct TrajectorySummary {
    Termination termination = Termination::Timeout;
    double min_margin = 0.0;
    double final_error = 0.0;
    double path_length = 0.0;
    double max_v_increase = 0.0;  // max over steps of V_{k+1} - V_k
    std::size_t steps = 0;
    double t_final = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    TrajectorySummary summary;
};

using VectorField = std::function<Vec(const Vec&)>;

/// One integration step of xdot = field(x). The field signals a state
/// outside the practical free space by throwing OutsidePracticalFreeSpace,
/// which is reported as FieldEvaluationFailed.
Vec step(const Vec& x, const VectorField& field, double dt, Integrator integrator = Integrator::RK4);

Trajectory simulate(const SimConfig& config, const Vec& initial);

/// Independent runs, results in input order. jobs = 0 uses the hardware
/// concurrency.
std::vector<Trajectory> batch_simulate(const SimConfig& config, std::span<const Vec> initials, unsigned jobs = 0);

struct GridSpec {
    Vec lo;
    Vec hi;
    int nx = 100;
    int ny = 100;
};

struct FieldCell {
    Vec x;
    Vec v;
    double w = 0.0;
};

/// Closed-loop field on a regular 2D lattice, skipping cells with negative
/// margin.
std::vector<FieldCell> emit_vector_field(const SimConfig& config, const GridSpec& grid);

/// Seeded uniform samples inside the world bounds with margin >= min_margin.
std::vector<Vec> random_initials(const World& world, const RobotParams& robot, std::size_t count, std::uint64_t seed,
                                 double min_margin = 0.0);

}  // namespace spf
