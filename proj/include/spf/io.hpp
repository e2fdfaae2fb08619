#pragma once

#include "spf/analysis.hpp"
#include "spf/contour.hpp"
#include "spf/simulation.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace spf {

/// 17 significant digits, so the text reads back to the same double.
std::string format_double(double v);

/// Header t,x0..,u0..,d,s,w,V followed by one row per record.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

/// Records from a trajectory CSV (the summary is left default).
std::vector<TrajectoryRecord> read_trajectory_csv(const std::filesystem::path& path);

nlohmann::json to_json(const TrajectorySummary& summary);
nlohmann::json to_json(const EquilibriumReport& report);

/// Header x0,x1,v0,v1,w.
void write_field_csv(const std::filesystem::path& path, const std::vector<FieldCell>& cells);

struct ContourSet {
    double level = 0.0;
    std::vector<Polyline> lines;
};

/// Header level,polyline,closed,x0,x1; closed polylines repeat their first point.
void write_contours_csv(const std::filesystem::path& path, const std::vector<ContourSet>& sets);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);

}  // namespace spf
