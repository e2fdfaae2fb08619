#include "spf/io.hpp"

#include "spf/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace spf {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string() + " for writing");
    return os;
}

nlohmann::json vec_json(const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

double parse_double(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw Error(ErrorCode::SchemaViolation, "malformed number '" + s + "'");
    return v;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const Eigen::Index n = traj.records.empty() ? 0 : traj.records.front().x.size();
    os << 't';
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
    for (Eigen::Index i = 0; i < n; ++i) os << ",u" << i;
    os << ",d,s,w,V\n";
    for (const TrajectoryRecord& r : traj.records) {
        os << format_double(r.t);
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(r.x[i]);
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(r.u[i]);
        os << ',' << format_double(r.d) << ',' << format_double(r.s) << ',' << format_double(r.w) << ','
           << format_double(r.V) << '\n';
    }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream os = open_out(path);
    write_trajectory_csv(os, traj);
}

std::vector<TrajectoryRecord> read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorCode::SchemaViolation, "empty trajectory file");
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') + 1);
    if (columns < 5 || (columns - 5) % 2 != 0) throw Error(ErrorCode::SchemaViolation, "unexpected trajectory header");
    const std::size_t n = (columns - 5) / 2;

    std::vector<TrajectoryRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(parse_double(cell));
        if (f.size() != columns) throw Error(ErrorCode::SchemaViolation, "trajectory row has the wrong column count");
        TrajectoryRecord r;
        r.t = f[0];
        r.x.resize(static_cast<Eigen::Index>(n));
        r.u.resize(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            r.x[i] = f[1 + i];
            r.u[i] = f[1 + n + i];
        }
        r.d = f[1 + 2 * n];
        r.s = f[2 + 2 * n];
        r.w = f[3 + 2 * n];
        r.V = f[4 + 2 * n];
        out.push_back(std::move(r));
    }
    return out;
}

nlohmann::json to_json(const TrajectorySummary& s) {
    return {
        {"termination", std::string(to_string(s.termination))},
        {"min_margin", s.min_margin},
        {"final_error", s.final_error},
        {"path_length", s.path_length},
        {"max_v_increase", s.max_v_increase},
        {"steps", s.steps},
        {"t_final", s.t_final},
    };
}

nlohmann::json to_json(const EquilibriumReport& r) {
    nlohmann::json j = {
        {"location", vec_json(r.location)},
        {"lambda", r.lambda},
        {"residual", r.residual},
        {"obstacle", r.obstacle},
        {"status", r.classified ? "classified" : "indefinite"},
        {"spectrum", r.classification.spectrum},
    };
    nlohmann::json dirs = nlohmann::json::array();
    for (const Vec& d : r.classification.directions) dirs.push_back(vec_json(d));
    j["directions"] = dirs;
    if (r.classified) {
        j["isolated"] = r.classification.isolated;
        j["unstable"] = r.classification.unstable;
    } else {
        j["isolated"] = nullptr;
        j["unstable"] = nullptr;
    }
    return j;
}

void write_field_csv(const std::filesystem::path& path, const std::vector<FieldCell>& cells) {
    std::ofstream os = open_out(path);
    os << "x0,x1,v0,v1,w\n";
    for (const FieldCell& c : cells) {
        os << format_double(c.x[0]) << ',' << format_double(c.x[1]) << ',' << format_double(c.v[0]) << ','
           << format_double(c.v[1]) << ',' << format_double(c.w) << '\n';
    }
}

void write_contours_csv(const std::filesystem::path& path, const std::vector<ContourSet>& sets) {
    std::ofstream os = open_out(path);
    os << "level,polyline,closed,x0,x1\n";
    for (const ContourSet& set : sets) {
        int id = 0;
        for (const Polyline& line : set.lines) {
            auto row = [&](const Eigen::Vector2d& p) {
                os << format_double(set.level) << ',' << id << ',' << (line.closed ? 1 : 0) << ','
                   << format_double(p.x()) << ',' << format_double(p.y()) << '\n';
            };
            for (const auto& p : line.points) row(p);
            if (line.closed && !line.points.empty()) row(line.points.front());
            ++id;
        }
    }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
    std::ofstream os = open_out(path);
    os << value.dump(2) << '\n';
}

}  // namespace spf
