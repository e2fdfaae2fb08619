#pragma once

#include "spf/geometry.hpp"
#include "spf/penalty.hpp"
#include "spf/sensing.hpp"
#include "spf/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spf {

struct RandomInitials {
    std::size_t count = 0;
    std::uint64_t seed = 0;
    double min_margin = 0.0;
};

struct SimSettings {
    double dt = 1e-3;
    double t_max = 60.0;
    double goal_tol = 1e-2;
    Integrator integrator = Integrator::RK4;
    std::vector<Vec> initials;
    std::optional<RandomInitials> random_initials;
    int record_stride = 1;
    double safety_tol = 1e-6;
};

struct OutputSettings {
    std::string directory = "out";
    std::vector<std::string> formats = {"csv", "json"};
};

/// Typed form of a run document. Everything except `world` and `potential`
/// has defaults.
struct RunDocument {
    int dimension = 2;
    std::vector<ObstacleShape> obstacles;
    std::optional<Bounds> bounds;
    Vec goal;
    Mat gain;
    RobotParams robot;
    PenaltyParams penalty;
    SensorConfig sensor;
    SimSettings sim;
    OutputSettings output;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// SchemaViolation naming the offending path.
RunDocument parse_document(const nlohmann::json& doc);

/// Fully specified JSON form; parse_document(to_json(d)) reproduces d.
nlohmann::json to_json(const RunDocument& doc);

/// Sets the value at a dotted path ("sim.dt=2e-3", "sim.initials.0=[1,2]").
/// The value is parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

nlohmann::json read_json_file(const std::filesystem::path& path);

RunDocument load_document(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

World build_world(const RunDocument& doc);
QuadraticPotential build_potential(const RunDocument& doc);

/// Simulation setup including the explicit and seeded random initial states.
/// Throws InvalidArgument if an explicit initial state has negative margin.
SimConfig build_sim_config(const RunDocument& doc);

}  // namespace spf
