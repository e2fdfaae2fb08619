#include "spf/config.hpp"

#include "spf/error.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace spf {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::SchemaViolation, path + ": " + what);
}

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string child(const std::string& path, std::size_t index) { return path + "." + std::to_string(index); }

void expect_object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(child(path, key), "unknown field");
    }
}

const json& require(const json& j, const std::string& path, const std::string& key) {
    const auto it = j.find(key);
    if (it == j.end()) fail(child(path, key), "missing required field");
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double number(const json& j, const std::string& path, const std::string& key, double fallback) {
    const auto it = j.find(key);
    return it == j.end() ? fallback : as_number(*it, child(path, key));
}

double positive(double v, const std::string& path) {
    if (!(v > 0.0)) fail(path, "must be positive");
    return v;
}

std::uint64_t as_unsigned(const json& j, const std::string& path) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
        fail(path, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Vec as_vec(const json& j, const std::string& path, int dim = -1) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    if (dim > 0 && static_cast<int>(j.size()) != dim) fail(path, "expected " + std::to_string(dim) + " components");
    if (j.size() < 2 || j.size() > 3) fail(path, "expected 2 or 3 components");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_number(j[i], child(path, i));
    return v;
}

std::vector<Vec> as_points(const json& j, const std::string& path, int dim) {
    if (!j.is_array()) fail(path, "expected an array of points");
    std::vector<Vec> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_vec(j[i], child(path, i), dim));
    return out;
}

Mat as_mat(const json& j, const std::string& path, int dim) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim) fail(path, "expected a square matrix");
    Mat m(dim, dim);
    for (int r = 0; r < dim; ++r) m.row(r) = as_vec(j[r], child(path, static_cast<std::size_t>(r)), dim).transpose();
    return m;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json points_json(const std::vector<Vec>& pts) {
    json a = json::array();
    for (const Vec& p : pts) a.push_back(vec_json(p));
    return a;
}

template <typename E, std::size_t N>
E as_enum(const json& j, const std::string& path, const std::array<std::pair<std::string_view, E>, N>& names) {
    const std::string s = as_string(j, path);
    for (const auto& [name, value] : names) {
        if (s == name) return value;
    }
    std::string allowed;
    for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    fail(path, "expected one of " + allowed);
}

ObstacleShape parse_obstacle(const json& j, const std::string& path, int dim) {
    if (!j.is_object()) fail(path, "expected an object");
    const std::string type = as_string(require(j, path, "type"), child(path, "type"));
    if (type == "disk" || type == "sphere") {
        expect_object(j, path, {"type", "center", "radius"});
        if ((type == "disk") != (dim == 2)) fail(child(path, "type"), type + " does not match the world dimension");
        const Vec c = as_vec(require(j, path, "center"), child(path, "center"), dim);
        const double r = positive(as_number(require(j, path, "radius"), child(path, "radius")), child(path, "radius"));
        if (type == "disk") return Disk2D{c, r};
        return Sphere3D{c, r};
    }
    if (type == "polygon") {
        expect_object(j, path, {"type", "vertices"});
        if (dim != 2) fail(child(path, "type"), "polygon requires a 2D world");
        return ConvexPolygon2D{as_points(require(j, path, "vertices"), child(path, "vertices"), 2)};
    }
    if (type == "spline") {
        expect_object(j, path, {"type", "points"});
        if (dim != 2) fail(child(path, "type"), "spline requires a 2D world");
        return Spline2D{as_points(require(j, path, "points"), child(path, "points"), 2)};
    }
    if (type == "implicit") {
        const std::string shape = as_string(require(j, path, "shape"), child(path, "shape"));
        if (shape == "ellipsoid") {
            expect_object(j, path, {"type", "shape", "center", "semi_axes"});
            const Vec c = as_vec(require(j, path, "center"), child(path, "center"), dim);
            const Vec a = as_vec(require(j, path, "semi_axes"), child(path, "semi_axes"), dim);
            if ((a.array() <= 0.0).any()) fail(child(path, "semi_axes"), "must be positive");
            return make_ellipsoid(c, a);
        }
        if (shape == "torus") {
            expect_object(j, path, {"type", "shape", "center", "axis", "major_radius", "minor_radius"});
            if (dim != 3) fail(child(path, "shape"), "torus requires a 3D world");
            const Vec c = as_vec(require(j, path, "center"), child(path, "center"), 3);
            const Vec axis = as_vec(require(j, path, "axis"), child(path, "axis"), 3);
            const double big = as_number(require(j, path, "major_radius"), child(path, "major_radius"));
            const double small = as_number(require(j, path, "minor_radius"), child(path, "minor_radius"));
            if (!(small > 0.0) || !(big > small)) fail(path, "torus needs major_radius > minor_radius > 0");
            if (!(axis.norm() > 0.0)) fail(child(path, "axis"), "must be nonzero");
            return make_torus(c, axis, big, small);
        }
        fail(child(path, "shape"), "expected ellipsoid or torus");
    }
    fail(child(path, "type"), "unknown obstacle type '" + type + "'");
}

json obstacle_json(const ObstacleShape& shape) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Disk2D>) {
                return {{"type", "disk"}, {"center", vec_json(s.center)}, {"radius", s.radius}};
            } else if constexpr (std::is_same_v<T, Sphere3D>) {
                return {{"type", "sphere"}, {"center", vec_json(s.center)}, {"radius", s.radius}};
            } else if constexpr (std::is_same_v<T, ConvexPolygon2D>) {
                return {{"type", "polygon"}, {"vertices", points_json(s.vertices)}};
            } else if constexpr (std::is_same_v<T, Spline2D>) {
                return {{"type", "spline"}, {"points", points_json(s.control_points)}};
            } else {
                if (s.shape == Implicit::Shape::Ellipsoid) {
                    return {{"type", "implicit"},
                            {"shape", "ellipsoid"},
                            {"center", vec_json(s.center)},
                            {"semi_axes", vec_json(s.semi_axes)}};
                }
                if (s.shape == Implicit::Shape::Torus) {
                    return {{"type", "implicit"},
                            {"shape", "torus"},
                            {"center", vec_json(s.center)},
                            {"axis", vec_json(s.axis)},
                            {"major_radius", s.major_radius},
                            {"minor_radius", s.minor_radius}};
                }
                throw Error(ErrorCode::Unsupported, "custom implicit obstacles cannot be serialized");
            }
        },
        shape);
}

constexpr std::array<std::pair<std::string_view, Blend>, 2> kBlends{{{"cubic", Blend::Cubic},
                                                                      {"quintic", Blend::Quintic}}};
constexpr std::array<std::pair<std::string_view, SensorMode>, 3> kModes{
    {{"oracle", SensorMode::Oracle}, {"lidar2d", SensorMode::Lidar2D}, {"lidar3d", SensorMode::Lidar3D}}};
constexpr std::array<std::pair<std::string_view, SphereSampling>, 2> kSampling{
    {{"lattice", SphereSampling::Lattice}, {"fibonacci", SphereSampling::Fibonacci}}};
constexpr std::array<std::pair<std::string_view, Integrator>, 2> kIntegrators{
    {{"rk4", Integrator::RK4}, {"euler", Integrator::Euler}}};

template <typename E, std::size_t N>
std::string enum_name(E value, const std::array<std::pair<std::string_view, E>, N>& names) {
    for (const auto& [name, v] : names) {
        if (v == value) return std::string(name);
    }
    return {};
}

}  // namespace

RunDocument parse_document(const json& j) {
    expect_object(j, "", {"world", "potential", "robot", "penalty", "sensor", "sim", "output"});
    RunDocument doc;

    const json& world = require(j, "", "world");
    expect_object(world, "world", {"dimension", "obstacles", "bounds"});
    const json& dim_j = require(world, "world", "dimension");
    if (!dim_j.is_number_integer() || (dim_j.get<int>() != 2 && dim_j.get<int>() != 3)) {
        fail("world.dimension", "expected 2 or 3");
    }
    doc.dimension = dim_j.get<int>();
    const int dim = doc.dimension;
    if (const auto it = world.find("obstacles"); it != world.end()) {
        if (!it->is_array()) fail("world.obstacles", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string path = child("world.obstacles", i);
            try {
                ObstacleShape shape = parse_obstacle((*it)[i], path, dim);
                Obstacle probe(shape);  // shape-specific validation
                doc.obstacles.push_back(std::move(shape));
            } catch (const Error& e) {
                if (e.code() == ErrorCode::SchemaViolation) throw;
                fail(path, e.what());
            }
        }
    }
    if (const auto it = world.find("bounds"); it != world.end()) {
        expect_object(*it, "world.bounds", {"min", "max"});
        Bounds b{as_vec(require(*it, "world.bounds", "min"), "world.bounds.min", dim),
                 as_vec(require(*it, "world.bounds", "max"), "world.bounds.max", dim)};
        if (((b.hi - b.lo).array() <= 0.0).any()) fail("world.bounds", "max must exceed min in every coordinate");
        doc.bounds = std::move(b);
    }

    const json& pot = require(j, "", "potential");
    expect_object(pot, "potential", {"goal", "gain"});
    doc.goal = as_vec(require(pot, "potential", "goal"), "potential.goal", dim);
    doc.gain = as_mat(require(pot, "potential", "gain"), "potential.gain", dim);
    try {
        QuadraticPotential check(doc.goal, doc.gain);
    } catch (const Error& e) {
        fail("potential.gain", e.what());
    }

    if (const auto it = j.find("robot"); it != j.end()) {
        expect_object(*it, "robot", {"R", "epsilon"});
        doc.robot.radius = positive(number(*it, "robot", "R", doc.robot.radius), "robot.R");
        doc.robot.epsilon = number(*it, "robot", "epsilon", doc.robot.epsilon);
        if (doc.robot.epsilon < 0.0) fail("robot.epsilon", "must be non-negative");
    }

    if (const auto it = j.find("penalty"); it != j.end()) {
        expect_object(*it, "penalty", {"mu", "nu", "blend"});
        doc.penalty.mu = positive(number(*it, "penalty", "mu", doc.penalty.mu), "penalty.mu");
        doc.penalty.nu = positive(number(*it, "penalty", "nu", doc.penalty.nu), "penalty.nu");
        if (const auto b = it->find("blend"); b != it->end()) doc.penalty.blend = as_enum(*b, "penalty.blend", kBlends);
    }

    if (const auto it = j.find("sensor"); it != j.end()) {
        expect_object(*it, "sensor", {"mode", "range", "resolution_deg", "sampling"});
        if (const auto m = it->find("mode"); m != it->end()) doc.sensor.mode = as_enum(*m, "sensor.mode", kModes);
        doc.sensor.lidar.range = positive(number(*it, "sensor", "range", doc.sensor.lidar.range), "sensor.range");
        doc.sensor.lidar.resolution_deg =
            positive(number(*it, "sensor", "resolution_deg", doc.sensor.lidar.resolution_deg), "sensor.resolution_deg");
        if (const auto s = it->find("sampling"); s != it->end()) {
            doc.sensor.lidar.sampling = as_enum(*s, "sensor.sampling", kSampling);
        }
        if ((doc.sensor.mode == SensorMode::Lidar2D && dim != 2) || (doc.sensor.mode == SensorMode::Lidar3D && dim != 3)) {
            fail("sensor.mode", "does not match the world dimension");
        }
        if (doc.sensor.mode != SensorMode::Oracle) {
            try {
                validate(doc.sensor.lidar, dim);
            } catch (const Error& e) {
                fail("sensor", e.what());
            }
        }
    }

    if (const auto it = j.find("sim"); it != j.end()) {
        const json& s = *it;
        expect_object(s, "sim",
                      {"dt", "t_max", "goal_tol", "integrator", "initials", "random_initials", "record_stride",
                       "safety_tol"});
        SimSettings& sim = doc.sim;
        sim.dt = positive(number(s, "sim", "dt", sim.dt), "sim.dt");
        sim.t_max = number(s, "sim", "t_max", sim.t_max);
        if (!(sim.t_max >= sim.dt)) fail("sim.t_max", "must be at least dt");
        sim.goal_tol = positive(number(s, "sim", "goal_tol", sim.goal_tol), "sim.goal_tol");
        if (const auto i = s.find("integrator"); i != s.end()) sim.integrator = as_enum(*i, "sim.integrator", kIntegrators);
        if (const auto i = s.find("initials"); i != s.end()) sim.initials = as_points(*i, "sim.initials", dim);
        if (const auto r = s.find("random_initials"); r != s.end()) {
            expect_object(*r, "sim.random_initials", {"count", "seed", "min_margin"});
            RandomInitials ri;
            ri.count = as_unsigned(require(*r, "sim.random_initials", "count"), "sim.random_initials.count");
            ri.seed = as_unsigned(require(*r, "sim.random_initials", "seed"), "sim.random_initials.seed");
            ri.min_margin = number(*r, "sim.random_initials", "min_margin", 0.0);
            if (ri.min_margin < 0.0) fail("sim.random_initials.min_margin", "must be non-negative");
            if (ri.count > 0 && !doc.bounds) fail("sim.random_initials", "requires world.bounds");
            sim.random_initials = ri;
        }
        if (const auto r = s.find("record_stride"); r != s.end()) {
            const std::uint64_t stride = as_unsigned(*r, "sim.record_stride");
            if (stride < 1 || stride > 1000000) fail("sim.record_stride", "must be between 1 and 1000000");
            sim.record_stride = static_cast<int>(stride);
        }
        sim.safety_tol = number(s, "sim", "safety_tol", sim.safety_tol);
        if (sim.safety_tol < 0.0) fail("sim.safety_tol", "must be non-negative");
    }

    if (const auto it = j.find("output"); it != j.end()) {
        expect_object(*it, "output", {"directory", "formats"});
        if (const auto d = it->find("directory"); d != it->end()) doc.output.directory = as_string(*d, "output.directory");
        if (const auto f = it->find("formats"); f != it->end()) {
            if (!f->is_array()) fail("output.formats", "expected an array of strings");
            doc.output.formats.clear();
            for (std::size_t i = 0; i < f->size(); ++i) {
                const std::string fmt = as_string((*f)[i], child("output.formats", i));
                if (fmt != "csv" && fmt != "json") fail(child("output.formats", i), "expected csv or json");
                doc.output.formats.push_back(fmt);
            }
        }
    }
    return doc;
}

json to_json(const RunDocument& doc) {
    json world = {{"dimension", doc.dimension}, {"obstacles", json::array()}};
    for (const ObstacleShape& o : doc.obstacles) world["obstacles"].push_back(obstacle_json(o));
    if (doc.bounds) world["bounds"] = {{"min", vec_json(doc.bounds->lo)}, {"max", vec_json(doc.bounds->hi)}};

    json gain = json::array();
    for (Eigen::Index r = 0; r < doc.gain.rows(); ++r) gain.push_back(vec_json(doc.gain.row(r).transpose()));

    json sim = {
        {"dt", doc.sim.dt},
        {"t_max", doc.sim.t_max},
        {"goal_tol", doc.sim.goal_tol},
        {"integrator", enum_name(doc.sim.integrator, kIntegrators)},
        {"initials", points_json(doc.sim.initials)},
        {"record_stride", doc.sim.record_stride},
        {"safety_tol", doc.sim.safety_tol},
    };
    if (doc.sim.random_initials) {
        sim["random_initials"] = {{"count", doc.sim.random_initials->count},
                                  {"seed", doc.sim.random_initials->seed},
                                  {"min_margin", doc.sim.random_initials->min_margin}};
    }

    return {
        {"world", world},
        {"potential", {{"goal", vec_json(doc.goal)}, {"gain", gain}}},
        {"robot", {{"R", doc.robot.radius}, {"epsilon", doc.robot.epsilon}}},
        {"penalty", {{"mu", doc.penalty.mu}, {"nu", doc.penalty.nu}, {"blend", enum_name(doc.penalty.blend, kBlends)}}},
        {"sensor",
         {{"mode", enum_name(doc.sensor.mode, kModes)},
          {"range", doc.sensor.lidar.range},
          {"resolution_deg", doc.sensor.lidar.resolution_deg},
          {"sampling", enum_name(doc.sensor.lidar.sampling, kSampling)}}},
        {"sim", sim},
        {"output", {{"directory", doc.output.directory}, {"formats", doc.output.formats}}},
    };
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw Error(ErrorCode::InvalidArgument, "override must look like key.path=value: '" + std::string(assignment) + "'");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));

    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }

    json* node = &doc;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw Error(ErrorCode::InvalidArgument, "empty segment in override path '" + key + "'");
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                std::size_t used = 0;
                idx = std::stoul(part, &used);
                if (used != part.size()) throw std::invalid_argument(part);
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidArgument, "override path '" + key + "' indexes an array with '" + part + "'");
            }
            if (idx > node->size()) throw Error(ErrorCode::InvalidArgument, "override index out of range in '" + key + "'");
            if (idx == node->size()) node->push_back(nullptr);
            node = &(*node)[idx];
        } else {
            if (node->is_null()) *node = json::object();
            if (!node->is_object()) {
                throw Error(ErrorCode::InvalidArgument, "override path '" + key + "' descends into a scalar");
            }
            node = &(*node)[part];
        }
    }
    *node = std::move(value);
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
}

RunDocument load_document(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    json j = read_json_file(path);
    for (const std::string& o : overrides) apply_override(j, o);
    return parse_document(j);
}

World build_world(const RunDocument& doc) {
    std::vector<Obstacle> obstacles;
    obstacles.reserve(doc.obstacles.size());
    for (const ObstacleShape& s : doc.obstacles) obstacles.emplace_back(s);
    return World(doc.dimension, std::move(obstacles), doc.bounds);
}

QuadraticPotential build_potential(const RunDocument& doc) { return QuadraticPotential(doc.goal, doc.gain); }

SimConfig build_sim_config(const RunDocument& doc) {
    SimConfig cfg{
        .world = build_world(doc),
        .potential = build_potential(doc),
        .robot = doc.robot,
        .penalty = doc.penalty,
        .sensor = doc.sensor,
        .initials = doc.sim.initials,
        .dt = doc.sim.dt,
        .t_max = doc.sim.t_max,
        .goal_tolerance = doc.sim.goal_tol,
        .integrator = doc.sim.integrator,
    };
    cfg.safety_tolerance = doc.sim.safety_tol;
    cfg.record_stride = doc.sim.record_stride;
    if (!cfg.world.empty()) {
        for (std::size_t i = 0; i < cfg.initials.size(); ++i) {
            bool inside = false;
            try {
                inside = margin(cfg.world, cfg.initials[i], cfg.robot) < 0.0;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::InsideObstacle) throw;
                inside = true;
            }
            if (inside) {
                throw Error(ErrorCode::InvalidArgument,
                            "initial state " + std::to_string(i) + " lies outside the practical free space");
            }
        }
    }
    if (doc.sim.random_initials && doc.sim.random_initials->count > 0) {
        const RandomInitials& r = *doc.sim.random_initials;
        for (Vec& x : random_initials(cfg.world, cfg.robot, r.count, r.seed, r.min_margin)) cfg.initials.push_back(std::move(x));
    }
    return cfg;
}

}  // namespace spf
