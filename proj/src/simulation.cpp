#include "spf/simulation.hpp"

#include "spf/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace spf {

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::ReachedGoal: return "reached_goal";
        case Termination::Timeout: return "timeout";
        case Termination::Stalled: return "stalled";
        case Termination::SafetyFault: return "safety_fault";
    }
    return "unknown";
}

std::string_view to_string(Integrator i) { return i == Integrator::RK4 ? "rk4" : "euler"; }

void validate(const SimConfig& c) {
    if (!(c.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    if (!(c.t_max >= c.dt)) throw Error(ErrorCode::InvalidArgument, "t_max must be at least dt");
    if (!(c.goal_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "goal tolerance must be positive");
    if (c.record_stride < 1) throw Error(ErrorCode::InvalidArgument, "record stride must be at least 1");
    if (c.max_halvings < 0) throw Error(ErrorCode::InvalidArgument, "max halvings must be non-negative");
    if (c.potential.dimension() != c.world.dimension()) {
        throw Error(ErrorCode::InvalidArgument, "potential dimension does not match the world");
    }
    validate(c.penalty);
    if (c.sensor.mode != SensorMode::Oracle) validate(c.sensor.lidar, c.world.dimension());
    if (c.sensor.mode == SensorMode::Lidar2D && c.world.dimension() != 2) {
        throw Error(ErrorCode::InvalidArgument, "lidar2d sensing requires a 2D world");
    }
    if (c.sensor.mode == SensorMode::Lidar3D && c.world.dimension() != 3) {
        throw Error(ErrorCode::InvalidArgument, "lidar3d sensing requires a 3D world");
    }
}

namespace {

template <typename Field>
Vec advance(const Vec& x, const Vec& k1, const Field& field, double dt, Integrator integrator) {
    if (integrator == Integrator::Euler) return x + dt * k1;
    const Vec k2 = field(x + 0.5 * dt * k1);
    const Vec k3 = field(x + 0.5 * dt * k2);
    const Vec k4 = field(x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

[[noreturn]] void field_failed(const Error& e) {
    throw Error(ErrorCode::FieldEvaluationFailed, e.what());
}

}  // namespace

Vec step(const Vec& x, const VectorField& field, double dt, Integrator integrator) {
    auto guarded = [&](const Vec& y) -> Vec {
        try {
            return field(y);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::OutsidePracticalFreeSpace || e.code() == ErrorCode::InsideObstacle) {
                field_failed(e);
            }
            throw;
        }
    };
    return advance(x, guarded(x), guarded, dt, integrator);
}

Trajectory simulate(const SimConfig& config, const Vec& initial) {
    validate(config);
    if (initial.size() != config.world.dimension()) {
        throw Error(ErrorCode::InvalidArgument, "initial state dimension does not match the world");
    }

    auto sample_at = [&](const Vec& y) {
        return closed_loop_field(config.potential, config.world, config.robot, config.penalty, y, config.sensor,
                                 config.safety_tolerance);
    };
    const VectorField velocity = [&](const Vec& y) { return sample_at(y).velocity; };

    Trajectory traj;
    TrajectorySummary& sum = traj.summary;
    sum.min_margin = std::numeric_limits<double>::infinity();
    sum.max_v_increase = -std::numeric_limits<double>::infinity();

    Vec x = initial;
    double prev_v = std::numeric_limits<double>::quiet_NaN();
    double stall_since = -1.0;
    const std::size_t max_steps = static_cast<std::size_t>(std::ceil(config.t_max / config.dt - 1e-9));

    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * config.dt;
        FieldSample sample;
        try {
            sample = sample_at(x);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::OutsidePracticalFreeSpace) throw;
            sum.termination = Termination::SafetyFault;
            sum.steps = k;
            sum.t_final = t;
            break;
        }

        TrajectoryRecord rec;
        rec.t = t;
        rec.x = x;
        rec.u = sample.velocity;
        rec.d = sample.margin;
        rec.s = sample.diagnostics.s;
        rec.w = sample.diagnostics.w;
        rec.V = config.potential.value(x);

        sum.min_margin = std::min(sum.min_margin, rec.d);
        if (!std::isnan(prev_v)) sum.max_v_increase = std::max(sum.max_v_increase, rec.V - prev_v);
        prev_v = rec.V;
        sum.final_error = (x - config.potential.goal()).norm();
        sum.steps = k;
        sum.t_final = t;

        bool done = true;
        if (sum.final_error < config.goal_tolerance) {
            sum.termination = Termination::ReachedGoal;
        } else {
            if (rec.u.norm() < config.stall_speed) {
                if (stall_since < 0.0) stall_since = t;
            } else {
                stall_since = -1.0;
            }
            if (stall_since >= 0.0 && t - stall_since >= config.stall_window - 1e-12) {
                sum.termination = Termination::Stalled;
            } else if (k >= max_steps) {
                sum.termination = Termination::Timeout;
            } else {
                done = false;
            }
        }

        if (done || k % static_cast<std::size_t>(config.record_stride) == 0) traj.records.push_back(rec);
        if (done) break;

        // Integrate, retrying with halved sub-steps when a stage leaves the
        // practical free space.
        std::optional<Vec> next;
        for (int halvings = 0; halvings <= config.max_halvings && !next; ++halvings) {
            const int substeps = 1 << halvings;
            const double h = config.dt / substeps;
            try {
                Vec y = x;
                for (int j = 0; j < substeps; ++j) {
                    const Vec k1 = j == 0 ? sample.velocity : velocity(y);
                    y = advance(y, k1, velocity, h, config.integrator);
                }
                next = std::move(y);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::OutsidePracticalFreeSpace) throw;
            }
        }
        if (!next) {
            sum.termination = Termination::SafetyFault;
            if (traj.records.empty() || traj.records.back().t != t) traj.records.push_back(rec);
            break;
        }
        sum.path_length += (*next - x).norm();
        x = std::move(*next);
    }
    if (sum.max_v_increase == -std::numeric_limits<double>::infinity()) sum.max_v_increase = 0.0;
    return traj;
}

std::vector<Trajectory> batch_simulate(const SimConfig& config, std::span<const Vec> initials, unsigned jobs) {
    std::vector<Trajectory> out(initials.size());
    if (initials.empty()) return out;
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(initials.size()));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (std::size_t i = next++; i < initials.size(); i = next++) {
            if (failed) return;
            try {
                out[i] = simulate(config, initials[i]);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<FieldCell> emit_vector_field(const SimConfig& config, const GridSpec& grid) {
    if (config.world.dimension() != 2) throw Error(ErrorCode::Unsupported, "vector field export requires a 2D world");
    if (grid.nx < 2 || grid.ny < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2x2 points");
    if (grid.lo.size() != 2 || grid.hi.size() != 2) throw Error(ErrorCode::InvalidArgument, "grid bounds must be 2D");
    std::vector<FieldCell> cells;
    cells.reserve(static_cast<std::size_t>(grid.nx) * grid.ny);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const Vec x = vec2(grid.lo[0] + (grid.hi[0] - grid.lo[0]) * i / (grid.nx - 1),
                               grid.lo[1] + (grid.hi[1] - grid.lo[1]) * j / (grid.ny - 1));
            if (!config.world.empty()) {
                try {
                    if (margin(config.world, x, config.robot) < 0.0) continue;
                } catch (const Error& e) {
                    if (e.code() == ErrorCode::InsideObstacle) continue;
                    throw;
                }
            }
            const FieldSample s = closed_loop_field(config.potential, config.world, config.robot, config.penalty, x,
                                                    config.sensor, 0.0);
            cells.push_back({x, s.velocity, s.diagnostics.w});
        }
    }
    return cells;
}

std::vector<Vec> random_initials(const World& world, const RobotParams& robot, std::size_t count, std::uint64_t seed,
                                 double min_margin) {
    if (!world.bounds()) throw Error(ErrorCode::InvalidArgument, "random initial states need world bounds");
    const Bounds& b = *world.bounds();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec> out;
    out.reserve(count);
    std::size_t attempts = 0;
    while (out.size() < count) {
        if (++attempts > 1000000 + 1000 * count) {
            throw Error(ErrorCode::InvalidArgument, "could not sample enough free-space initial states");
        }
        Vec x(world.dimension());
        for (int k = 0; k < world.dimension(); ++k) x[k] = b.lo[k] + (b.hi[k] - b.lo[k]) * unit(rng);
        if (!world.empty()) {
            try {
                if (margin(world, x, robot) < min_margin) continue;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::InsideObstacle) continue;
                throw;
            }
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace spf
