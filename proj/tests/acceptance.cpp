// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include "spf/analysis.hpp"
#include "spf/cli.hpp"
#include "spf/config.hpp"
#include "spf/controller.hpp"
#include "spf/error.hpp"
#include "spf/penalty.hpp"
#include "spf/sensing.hpp"
#include "spf/simulation.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace spf;
using spf::test::random_unit;
using spf::test::source_path;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Aggregates over a Monte-Carlo batch. Trajectories are simulated in chunks
// and dropped after inspection so every step can be recorded.
struct BatchStats {
    std::size_t runs = 0;
    std::size_t reached = 0;
    std::size_t faults = 0;
    double min_margin = INFINITY;   // over every recorded state
    double max_v_step = -INFINITY;  // max V_{k+1} - V_k over recorded states
    double seconds = 0.0;
    std::vector<Trajectory> unconverged;  // summary and last record only
};

BatchStats run_batch(const SimConfig& cfg) {
    BatchStats st;
    const auto t0 = std::chrono::steady_clock::now();
    constexpr std::size_t chunk = 10;
    for (std::size_t first = 0; first < cfg.initials.size(); first += chunk) {
        const std::size_t n = std::min(chunk, cfg.initials.size() - first);
        const auto runs = batch_simulate(cfg, std::span(cfg.initials).subspan(first, n), 0);
        for (const Trajectory& t : runs) {
            ++st.runs;
            st.reached += t.summary.termination == Termination::ReachedGoal;
            st.faults += t.summary.termination == Termination::SafetyFault;
            for (std::size_t k = 0; k < t.records.size(); ++k) {
                st.min_margin = std::min(st.min_margin, t.records[k].d);
                if (k > 0) st.max_v_step = std::max(st.max_v_step, t.records[k].V - t.records[k - 1].V);
            }
            if (t.summary.termination != Termination::ReachedGoal) {
                Trajectory keep;
                keep.summary = t.summary;
                keep.records.push_back(t.records.back());
                st.unconverged.push_back(std::move(keep));
            }
        }
    }
    st.seconds = seconds_since(t0);
    return st;
}

struct MonteCarlo {
    RunDocument doc;
    SimConfig cfg;
    BatchStats oracle;
};

MonteCarlo& monte_carlo() {
    static MonteCarlo mc = [] {
        RunDocument doc = load_document(source_path("configs/world2d_montecarlo.json"), {"sim.record_stride=1"});
        SimConfig cfg = build_sim_config(doc);
        return MonteCarlo{doc, cfg, run_batch(cfg)};
    }();
    return mc;
}

bool reference_2d_parameters(const RunDocument& d) {
    Mat P(2, 2);
    P << 0.4, 0.2, 0.2, 0.8;
    return d.robot.radius == 0.34 && d.robot.epsilon == 0.06 && d.penalty.mu == 0.6 && d.penalty.nu == 1.0 &&
           d.gain == P && d.goal == vec2(4, -1) && d.sensor.lidar.resolution_deg == 1.0 && d.sim.dt == 1e-3;
}

Verdict criterion_1() {
    const MonteCarlo& mc = monte_carlo();
    const bool params = reference_2d_parameters(mc.doc) && mc.cfg.sensor.mode == SensorMode::Oracle;
    const bool ok = params && mc.oracle.runs == 100 && mc.oracle.faults == 0 && mc.oracle.min_margin >= -1e-6 &&
                    mc.oracle.seconds < 60.0;
    return {ok, fmt("%zu runs, min recorded margin %.3e, %zu safety faults, %.1f s, reference parameters %s",
                    mc.oracle.runs, mc.oracle.min_margin, mc.oracle.faults, mc.oracle.seconds,
                    params ? "ok" : "MISMATCH")};
}

Verdict criterion_2() {
    const PenaltyParams p;
    std::mt19937_64 rng(2002);
    std::uniform_real_distribution<double> d(-0.2, 1.0), mag(0.0, 5.0);
    std::size_t violations = 0;
    double worst = -INFINITY;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        const int dim = 2 + (i & 1);
        const Vec k = random_unit(rng, dim) * mag(rng);
        const SensorReading r{d(rng), random_unit(rng, dim), true};
        const double excess = spf_filter(k, r, p).velocity.norm() - k.norm();
        worst = std::max(worst, excess);
        violations += excess > 1e-12;
    }
    return {violations == 0, fmt("%d samples, %zu violations, max |u| - |k| = %.3e", n, violations, worst)};
}

Verdict criterion_3() {
    const BatchStats& st = monte_carlo().oracle;
    return {st.max_v_step <= 1e-9, fmt("max V_{k+1} - V_k = %.3e over %zu trajectories", st.max_v_step, st.runs)};
}

Verdict criterion_4() {
    const PenaltyParams p;
    std::mt19937_64 rng(4004);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::size_t mismatches = 0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) {
        const int dim = 2 + (i & 1);
        const Vec eta = random_unit(rng, dim);
        Vec k;
        double d;
        if (i % 2 == 0) {
            // Far from the obstacle, any heading.
            d = p.mu + 3.0 * u01(rng);
            k = random_unit(rng, dim) * (5.0 * u01(rng));
        } else {
            // Close to the obstacle, heading away fast enough.
            d = -0.1 + (p.mu + 0.1) * u01(rng);
            const Vec t = random_unit(rng, dim);
            k = (t - eta * eta.dot(t)) * (3.0 * u01(rng)) + eta * (p.nu + 3.0 * u01(rng));
            if (k.dot(eta) < p.nu) continue;
        }
        const Vec u = spf_filter(k, SensorReading{d, eta, true}, p).velocity;
        mismatches += std::memcmp(u.data(), k.data(), sizeof(double) * dim) != 0;
    }
    return {mismatches == 0, fmt("%d samples, %zu not bitwise equal to the nominal command", n, mismatches)};
}

Verdict criterion_5() {
    const MonteCarlo& mc = monte_carlo();
    const World& world = mc.cfg.world;
    std::mt19937_64 rng(5005);
    const Bounds& b = *world.bounds();
    std::uniform_real_distribution<double> ux(b.lo[0], b.hi[0]), uy(b.lo[1], b.hi[1]);
    int built = 0, tries = 0;
    double worst = 0.0;
    std::size_t not_saturated = 0;
    while (built < 10'000 && tries < 1'000'000) {
        ++tries;
        // Project a random point onto the protected boundary of its nearest obstacle.
        const Vec y = vec2(ux(rng), uy(rng));
        DistanceQuery q;
        try {
            q = distance_to_obstacles(world, y);
        } catch (const Error&) {
            continue;
        }
        const Vec x = q.nearest + mc.cfg.robot.clearance() * q.normal;
        if (distance_to_obstacles(world, x).obstacle != q.obstacle) continue;
        FieldSample f;
        try {
            f = closed_loop_field(mc.cfg.potential, world, mc.cfg.robot, mc.cfg.penalty, x, mc.cfg.sensor, 1e-9);
        } catch (const Error&) {
            continue;
        }
        if (f.diagnostics.s > 0.0) continue;  // heading outward: not a shielded state
        ++built;
        not_saturated += f.diagnostics.w != 1.0;
        worst = std::max(worst, std::abs(f.reading.normal.dot(f.velocity)));
    }
    const bool ok = built == 10'000 && not_saturated == 0 && worst <= 1e-12;
    return {ok, fmt("%d boundary states, %zu with w != 1, max |eta . u| = %.3e", built, not_saturated, worst)};
}

Verdict criterion_6() {
    const MonteCarlo& mc = monte_carlo();
    const BatchStats& st = mc.oracle;
    std::size_t bad = 0;
    for (const Trajectory& t : st.unconverged) {
        const Vec& x = t.records.back().x;
        bool ok = t.summary.termination == Termination::Stalled;
        if (ok) {
            const EquilibriumResidual r = equilibrium_residual(mc.cfg.world, mc.cfg.potential, mc.cfg.robot, x);
            ok = r.lambda > 0.0 && r.residual <= 1e-6;
        }
        bad += !ok;
    }
    const bool ok = st.reached >= 99 && bad == 0 && mc.cfg.t_max == 60.0 && mc.cfg.goal_tolerance == 1e-2;
    return {ok, fmt("%zu/%zu reached the goal, %zu non-converged runs not explained by an equilibrium", st.reached,
                    st.runs, bad)};
}

Verdict criterion_7() {
    const World world = spf::test::disk_world(1.0);
    const QuadraticPotential V(vec2(4, 0), identity(2));
    const Vec x = vec2(-1.4, 0.0);
    const Vec t = vec2(0.0, 1.0);
    // Offset circle of radius 1.4; level set of V through x is a circle of radius 5.4.
    const double c_obs = curvature_obstacle(world, x, t);
    const double c_lvl = curvature_levelset(V, x, t);
    const Classification c = classify_equilibrium(world, V, x, 5.4);
    const double ev = c.spectrum.empty() ? NAN : c.spectrum.back();
    const bool ok = std::abs(c_obs - 1.0 / 1.4) <= 1e-6 && std::abs(c_lvl - 1.0 / 5.4) <= 1e-6 && c.unstable &&
                    std::abs(ev - (5.4 / 1.4 - 1.0)) <= 1e-6;
    return {ok, fmt("C_obs %.9f (1/1.4), C_L %.9f (1/5.4), eigenvalue %.9f (%.9f), unstable %s", c_obs, c_lvl, ev,
                    5.4 / 1.4 - 1.0, c.unstable ? "yes" : "no")};
}

int quiet_analyze(const std::string& config, const std::filesystem::path& out) {
    std::ostringstream sink;
    std::streambuf* old = std::cout.rdbuf(sink.rdbuf());
    cli::Options opt;
    opt.config = config;
    opt.out = out.string();
    const int code = cli::cmd_analyze(opt);
    std::cout.rdbuf(old);
    return code;
}

Verdict criterion_8() {
    // Disk world: escape along the unstable tangent.
    const RunDocument disk = load_document(source_path("configs/disk.json"));
    SimConfig cfg = build_sim_config(disk);
    const World& world = cfg.world;
    const auto eqs = find_equilibria(world, cfg.potential, cfg.robot);
    if (eqs.size() != 1 || !eqs[0].classified) return {false, "disk equilibrium not found or not classified"};
    const Vec xs = eqs[0].location;
    const Vec dir = eqs[0].classification.directions.back();
    cfg.record_stride = 1;
    double escape = 0.0;
    bool all_ok = true;
    for (double sign : {1.0, -1.0}) {
        const Trajectory t = simulate(cfg, xs + sign * 1e-4 * dir);
        double far = 0.0;
        for (const TrajectoryRecord& r : t.records) far = std::max(far, (r.x - xs).norm());
        escape = std::max(escape, far);
        all_ok = all_ok && far > 0.1 && t.summary.termination == Termination::ReachedGoal;
    }

    // Flat face: captured at the stable equilibrium.
    const RunDocument flat = load_document(source_path("configs/flat_face.json"));
    SimConfig fcfg = build_sim_config(flat);
    fcfg.record_stride = 1000;
    const Trajectory ft = simulate(fcfg, fcfg.initials.front());
    const Vec xf = ft.records.back().x;
    const auto feqs = find_equilibria(fcfg.world, fcfg.potential, fcfg.robot);
    bool at_stable = false;
    for (const EquilibriumReport& e : feqs) {
        if (e.classified && !e.classification.unstable && (e.location - xf).norm() < 1e-2) at_stable = true;
    }
    const auto out = std::filesystem::temp_directory_path() / "spf_acceptance_flat";
    const int code = quiet_analyze(source_path("configs/flat_face.json").string(), out);
    std::filesystem::remove_all(out);

    const bool stalled = ft.summary.termination == Termination::Stalled;
    const bool ok = all_ok && stalled && at_stable && code == 2;
    return {ok, fmt("disk: max excursion %.3f from the saddle, both sides converge %s; flat face: %s at (%.4f, %.4f) "
                    "after %.1f s, stable equilibrium there %s, analyze exit %d",
                    escape, all_ok ? "yes" : "no", std::string(to_string(ft.summary.termination)).c_str(), xf[0],
                    xf[1], ft.summary.t_final, at_stable ? "yes" : "no", code)};
}

Verdict criterion_9() {
    const PenaltyParams p;
    std::mt19937_64 rng(9009);
    std::uniform_real_distribution<double> d(0.0, 0.6), u01(0.0, 1.0);
    int instances = 0;
    double worst = 0.0;
    std::size_t misses = 0;
    while (instances < 1000) {
        const int dim = 2 + static_cast<int>(rng() % 2);
        const int m = 1 + static_cast<int>(rng() % 4);
        const Vec k = random_unit(rng, dim) * (0.1 + 3.0 * u01(rng));
        std::vector<SensorReading> readings;
        for (int j = 0; j < m; ++j) readings.push_back({d(rng), random_unit(rng, dim), true});
        const MultiFilterResult res = spf_filter_multi(k, readings, p);
        if (*std::max_element(res.weights.begin(), res.weights.end()) > 0.99) continue;
        ++instances;
        spf::test::PenaltyObjective f{k, {}, {}};
        for (int j = 0; j < m; ++j) {
            // psi recomputed from the penalty module, not from the solver's weights.
            f.normals.push_back(readings[j].normal);
            f.psi.push_back(penalty_value(readings[j].margin, k.dot(readings[j].normal), p));
        }
        const double err = (spf::test::minimize(f, k) - res.velocity).norm();
        worst = std::max(worst, err);
        misses += err > 1e-8;
    }
    return {misses == 0, fmt("%d instances, max |u_solve - u_min| = %.3e", instances, worst)};
}

Verdict criterion_10() {
    // Sensor accuracy against the oracle on a unit disk.
    const World world = spf::test::disk_world(1.0);
    const RobotParams robot;
    SensorConfig lidar;
    lidar.mode = SensorMode::Lidar2D;
    lidar.lidar = LidarConfig{3.0, 1.0};
    std::mt19937_64 rng(10010);
    std::uniform_real_distribution<double> u(0.5, 2.5);
    double worst_d = 0.0, worst_angle = 0.0;
    std::size_t misses = 0;
    for (int i = 0; i < 10'000; ++i) {
        const double dist = u(rng);
        const Vec x = (1.0 + dist) * random_unit(rng, 2);
        const SensorReading o = oracle_reading(world, x, robot);
        const SensorReading l = sense(world, x, robot, lidar);
        const double err = std::abs(l.margin - o.margin);
        const double angle = std::acos(std::clamp(l.normal.dot(o.normal), -1.0, 1.0));
        worst_d = std::max(worst_d, err / (dist * (1.0 - std::cos(kDeg))));
        worst_angle = std::max(worst_angle, angle);
        misses += !l.valid || err > dist * (1.0 - std::cos(kDeg)) + 1e-9 || angle > kDeg;
    }

    // Batch re-run with simulated LiDAR.
    MonteCarlo& mc = monte_carlo();
    SimConfig cfg = mc.cfg;
    cfg.sensor.mode = SensorMode::Lidar2D;
    cfg.safety_tolerance = 1e-3;
    const BatchStats st = run_batch(cfg);
    const bool batch_ok = st.runs == 100 && st.faults == 0 && st.min_margin >= -1e-3 && st.max_v_step <= 1e-9;
    const bool ok = misses == 0 && batch_ok;
    return {ok, fmt("10000 readings, %zu outside the bounds (worst d error %.2f of the chord bound, worst normal "
                    "error %.3f deg); lidar batch: %zu runs, %zu faults, min margin %.3e, max dV %.3e, %.1f s",
                    misses, worst_d, worst_angle / kDeg, st.runs, st.faults, st.min_margin, st.max_v_step,
                    st.seconds)};
}

Verdict criterion_11() {
    const World world = spf::test::disk_world(1.0);
    const QuadraticPotential V(vec2(4, 0), identity(2));
    const RobotParams robot;
    const PenaltyParams pen;
    const double h = 1e-6;
    auto field = [&](const Vec& x) {
        return closed_loop_field(V, world, robot, pen, x, SensorConfig{}).velocity;
    };
    auto jac = [&](const Vec& x) {
        Mat J(2, 2);
        for (int j = 0; j < 2; ++j) {
            Vec e = Vec::Zero(2);
            e[j] = h;
            J.col(j) = (field(x + e) - field(x - e)) / (2.0 * h);
        }
        return J;
    };
    // Jacobians are compared at two points one probe step apart, one on each
    // side of the seam. The cubic blend is C1 only, so the change is linear in
    // the step: about 6 |s| h / mu^2 at the d = mu seam.
    std::mt19937_64 rng(11011);
    std::uniform_real_distribution<double> ang(0.2, 2.0 * std::numbers::pi - 0.2), dd(0.05, 0.55);
    double worst = 0.0;
    int points = 0;
    // d = mu: the circle of radius 1 + R + eps + mu, crossed radially.
    for (int i = 0; i < 50; ++i) {
        const double a = ang(rng);
        const Vec n = vec2(std::cos(a), std::sin(a));
        const Vec x = (1.4 + pen.mu) * n;
        worst = std::max(worst, (jac(x + 0.5 * h * n) - jac(x - 0.5 * h * n)).cwiseAbs().maxCoeff());
        ++points;
    }
    // s = nu: on the circle of radius rho, s = 4 cos(theta) - rho, crossed tangentially.
    for (int i = 0; i < 50; ++i) {
        const double rho = 1.4 + dd(rng);
        const double theta = (i % 2 ? 1.0 : -1.0) * std::acos((pen.nu + rho) / 4.0);
        const Vec n = vec2(std::cos(theta), std::sin(theta));
        const Vec t = vec2(-n[1], n[0]);
        const Vec x = rho * n;
        const double s = -V.gradient(x).dot(n);
        if (std::abs(s - pen.nu) > 1e-12) return {false, fmt("seam construction off by %.3e", s - pen.nu)};
        worst = std::max(worst, (jac(x + 0.5 * h * t) - jac(x - 0.5 * h * t)).cwiseAbs().maxCoeff());
        ++points;
    }
    return {worst < 1e-4, fmt("%d seam points, max Jacobian change %.3e across the seam", points, worst)};
}

Verdict criterion_12() {
    const RunDocument doc = load_document(source_path("configs/world3d.json"), {"sensor.mode=lidar3d"});
    Mat P(3, 3);
    P << 1, 0, 0, 0, 1, 0.5, 0, 0.5, 2;
    const bool params = doc.gain == P && doc.goal == vec3(4, 7, 1) && doc.sensor.lidar.resolution_deg == 2.0 &&
                        doc.robot.radius == 0.34 && doc.robot.epsilon == 0.06 && doc.penalty.mu == 0.6 &&
                        doc.penalty.nu == 1.0;
    const SimConfig cfg = build_sim_config(doc);
    const BatchStats st = run_batch(cfg);
    const bool ok = params && cfg.initials.size() == 4 && st.reached == 4 && st.min_margin >= -1e-6 &&
                    st.seconds < 300.0;
    return {ok, fmt("lidar3d at 2 deg: %zu/%zu converged, min margin %.3e, %.1f s, reference parameters %s", st.reached,
                    st.runs, st.min_margin, st.seconds, params ? "ok" : "MISMATCH")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Verdict()>> criteria = {
        criterion_1, criterion_2, criterion_3, criterion_4,  criterion_5,  criterion_6,
        criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12,
    };
    // Optional arguments select criteria by number.
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i]();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::printf("criterion %2d: %s  %s  [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
