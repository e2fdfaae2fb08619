#include "spf/cli.hpp"

#include "spf/analysis.hpp"
#include "spf/config.hpp"
#include "spf/contour.hpp"
#include "spf/error.hpp"
#include "spf/io.hpp"
#include "spf/simulation.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace spf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void init_logging() {
    static bool done = false;
    if (done) return;
    done = true;
    auto logger = spdlog::stderr_color_mt("spf");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("SPF_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only accept it when asked for.
        if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
        else spdlog::warn("ignoring unknown SPF_LOG level '{}'", env);
    }
}

RunDocument load(const Options& opt) {
    std::vector<std::string> overrides = opt.overrides;
    if (opt.seed) {
        // Applied last so that --seed wins over an override of the same key.
        overrides.push_back("sim.random_initials.seed=" + std::to_string(*opt.seed));
    }
    json j = read_json_file(opt.config);
    for (const std::string& o : overrides) apply_override(j, o);
    if (opt.seed && !j["sim"]["random_initials"].contains("count")) {
        spdlog::warn("--seed has no effect without sim.random_initials");
        j["sim"].erase("random_initials");
    }
    return parse_document(j);
}

fs::path output_dir(const Options& opt, const RunDocument& doc) {
    fs::path dir = opt.out.empty() ? fs::path(doc.output.directory) : fs::path(opt.out);
    fs::create_directories(dir);
    return dir;
}

bool wants(const RunDocument& doc, const char* format) {
    return std::find(doc.output.formats.begin(), doc.output.formats.end(), format) != doc.output.formats.end();
}

// Logs the feasibility verdict; false when a condition is violated.
bool check_feasibility(const RunDocument& doc, const World& world) {
    const FeasibilityReport rep = validate_feasibility(world, doc.robot, doc.penalty);
    for (const std::string& n : rep.notes) spdlog::debug("{}", n);
    if (rep.advisory) spdlog::warn("reach is estimated for some obstacles; the feasibility verdict is advisory");
    for (const std::string& v : rep.violations) spdlog::error("{}", v);
    return rep.feasible;
}

template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        switch (e.code()) {
            case ErrorCode::SchemaViolation:
            case ErrorCode::InvalidArgument:
            case ErrorCode::InvalidThreshold: return kBadDocument;
            case ErrorCode::InfeasibleParameters: return kInfeasible;
            case ErrorCode::Unsupported: return kUnsupported;
            default: return kSafetyFault;
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kBadDocument;
    }
}

std::string indexed(const char* stem, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu.%s", stem, i, ext);
    return buf;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

}  // namespace

int cmd_run(const Options& opt) {
    init_logging();
    return guarded([&] {
        const RunDocument doc = load(opt);
        const SimConfig cfg = build_sim_config(doc);
        if (!cfg.world.empty() && !check_feasibility(doc, cfg.world)) return static_cast<int>(kInfeasible);

        spdlog::info("simulating {} initial states", cfg.initials.size());
        const std::vector<Trajectory> runs = batch_simulate(cfg, cfg.initials, opt.jobs);
        const fs::path dir = output_dir(opt, doc);

        json report = {{"n_runs", runs.size()}};
        std::size_t reached = 0, faults = 0;
        double worst = std::numeric_limits<double>::infinity();
        double v_increase = -std::numeric_limits<double>::infinity();
        json items = json::array();
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const TrajectorySummary& s = runs[i].summary;
            reached += s.termination == Termination::ReachedGoal;
            faults += s.termination == Termination::SafetyFault;
            worst = std::min(worst, s.min_margin);
            v_increase = std::max(v_increase, s.max_v_increase);
            json summary = to_json(s);
            summary["initial"] = vec_json(cfg.initials[i]);
            if (wants(doc, "csv")) write_trajectory_csv(dir / indexed("traj", i, "csv"), runs[i]);
            if (wants(doc, "json")) write_json(dir / indexed("traj", i, "json"), summary);
            summary["index"] = i;
            items.push_back(summary);
            spdlog::debug("run {}: {} after {} s, min margin {}", i, to_string(s.termination), s.t_final, s.min_margin);
        }
        report["n_reached"] = reached;
        report["n_safety_fault"] = faults;
        report["worst_min_margin"] = runs.empty() ? json(nullptr) : json(worst);
        report["max_v_increase"] = runs.empty() ? json(nullptr) : json(v_increase);
        report["runs"] = items;
        write_json(dir / "report.json", report);

        spdlog::info("{}/{} reached the goal, {} safety faults, worst margin {}", reached, runs.size(), faults,
                     runs.empty() ? 0.0 : worst);
        return static_cast<int>(faults > 0 ? kSafetyFault : kOk);
    });
}

int cmd_analyze(const Options& opt) {
    init_logging();
    return guarded([&] {
        const RunDocument doc = load(opt);
        const World world = build_world(doc);
        const QuadraticPotential potential = build_potential(doc);
        if (!world.empty() && !check_feasibility(doc, world)) return static_cast<int>(kInfeasible);

        std::vector<EquilibriumReport> reports;
        if (!world.empty()) reports = find_equilibria(world, potential, doc.robot);

        json out = json::array();
        bool undesirable = false;
        for (const EquilibriumReport& r : reports) {
            out.push_back(to_json(r));
            if (!r.classified || !r.classification.unstable) {
                undesirable = true;
                spdlog::warn("{} equilibrium at ({})", r.classified ? "stable" : "undecidable",
                             out.back()["location"].dump());
            }
        }
        const fs::path dir = output_dir(opt, doc);
        write_json(dir / "equilibria.json", out);
        std::cout << out.dump(2) << '\n';
        spdlog::info("{} equilibria located", reports.size());
        return static_cast<int>(undesirable ? kUndesirable : kOk);
    });
}

int cmd_field(const Options& opt, const FieldOptions& field) {
    init_logging();
    return guarded([&] {
        const RunDocument doc = load(opt);
        if (doc.dimension != 2) throw Error(ErrorCode::Unsupported, "field export requires a 2D world");
        const SimConfig cfg = build_sim_config(doc);

        GridSpec grid;
        grid.nx = field.nx;
        grid.ny = field.ny;
        if (field.box) {
            const auto& b = *field.box;
            if (b.size() != 4) throw Error(ErrorCode::InvalidArgument, "--box expects xmin xmax ymin ymax");
            grid.lo = vec2(b[0], b[2]);
            grid.hi = vec2(b[1], b[3]);
        } else if (doc.bounds) {
            grid.lo = doc.bounds->lo;
            grid.hi = doc.bounds->hi;
        } else {
            throw Error(ErrorCode::InvalidArgument, "no world bounds; pass --box");
        }
        if (!((grid.hi - grid.lo).array() > 0.0).all()) throw Error(ErrorCode::InvalidArgument, "empty field box");

        const fs::path dir = output_dir(opt, doc);
        const std::vector<FieldCell> cells = emit_vector_field(cfg, grid);
        write_field_csv(dir / "field.csv", cells);

        if (!cfg.world.empty()) {
            const int n = std::max(2, field.contour_resolution);
            const Eigen::Vector2d lo(grid.lo[0], grid.lo[1]);
            const Eigen::Vector2d hi(grid.hi[0], grid.hi[1]);
            const std::vector<double> m = sample_margin(cfg.world, cfg.robot, n, n, lo, hi);
            std::vector<ContourSet> sets;
            for (double level : {0.0, doc.penalty.mu}) sets.push_back({level, marching_squares(m, n, n, lo, hi, level)});
            write_contours_csv(dir / "contours.csv", sets);
        }
        spdlog::info("wrote {} field cells to {}", cells.size(), (dir / "field.csv").string());
        return static_cast<int>(kOk);
    });
}

int cmd_validate(const Options& opt) {
    init_logging();
    return guarded([&] {
        const RunDocument doc = load(opt);
        const World world = build_world(doc);
        const FeasibilityReport rep = validate_feasibility(world, doc.robot, doc.penalty);
        const json out = {
            {"feasible", rep.feasible},
            {"advisory", rep.advisory},
            {"reach", std::isfinite(rep.reach) ? json(rep.reach) : json(nullptr)},
            {"violations", rep.violations},
            {"notes", rep.notes},
        };
        std::cout << out.dump(2) << '\n';
        for (const std::string& v : rep.violations) spdlog::error("{}", v);
        return static_cast<int>(rep.feasible ? kOk : kInfeasible);
    });
}

int main(int argc, char** argv) {
    init_logging();
    CLI::App app{"Safe penalty-based feedback: simulation and equilibrium analysis"};
    app.require_subcommand(1);

    Options opt;
    FieldOptions field;
    std::uint64_t seed = 0;
    std::vector<double> box;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config,-c", opt.config, "Run document (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--override,-o", opt.overrides, "Set a document value, key.path=value (repeatable)");
        sub->add_option("--out", opt.out, "Output directory (default: output.directory)");
        sub->add_option("--seed", seed, "Seed for sim.random_initials");
        sub->add_option("--jobs,-j", opt.jobs, "Worker threads (0: all cores)");
    };
    CLI::App* run = app.add_subcommand("run", "Simulate every initial state");
    CLI::App* analyze = app.add_subcommand("analyze", "Locate and classify undesired equilibria");
    CLI::App* fld = app.add_subcommand("field", "Export the closed-loop vector field and dilation contours");
    CLI::App* validate = app.add_subcommand("validate", "Check the document and the feasibility conditions");
    for (CLI::App* sub : {run, analyze, fld, validate}) common(sub);
    fld->add_option("--nx", field.nx, "Grid points along x")->check(CLI::Range(2, 100000));
    fld->add_option("--ny", field.ny, "Grid points along y")->check(CLI::Range(2, 100000));
    fld->add_option("--box", box, "xmin xmax ymin ymax (default: world bounds)")->expected(4);
    fld->add_option("--contour-res", field.contour_resolution, "Samples per axis for the contours")
        ->check(CLI::Range(2, 100000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(kBadDocument);
    }
    for (CLI::App* sub : {run, analyze, fld, validate}) {
        if (sub->count("--seed") > 0) opt.seed = seed;
    }
    if (!box.empty()) field.box = box;

    if (*run) return cmd_run(opt);
    if (*analyze) return cmd_analyze(opt);
    if (*fld) return cmd_field(opt, field);
    return cmd_validate(opt);
}

}  // namespace spf::cli
