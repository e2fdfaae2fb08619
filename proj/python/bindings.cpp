#include "spf/analysis.hpp"
#include "spf/config.hpp"
#include "spf/contour.hpp"
#include "spf/controller.hpp"
#include "spf/error.hpp"
#include "spf/io.hpp"
#include "spf/penalty.hpp"
#include "spf/sensing.hpp"
#include "spf/simulation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace spf;
using nlohmann::json;

namespace {

py::object to_python(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return py::none();
        case json::value_t::boolean: return py::bool_(j.get<bool>());
        case json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
        case json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
        case json::value_t::number_float: return py::float_(j.get<double>());
        case json::value_t::string: return py::str(j.get<std::string>());
        case json::value_t::array: {
            py::list out;
            for (const json& v : j) out.append(to_python(v));
            return out;
        }
        case json::value_t::object: {
            py::dict out;
            for (const auto& [k, v] : j.items()) out[py::str(k)] = to_python(v);
            return out;
        }
        default: return py::none();
    }
}

json from_python(const py::handle& obj) {
    const py::module_ jsonmod = py::module_::import("json");
    return json::parse(jsonmod.attr("dumps")(obj).cast<std::string>());
}

Vec as_point(const Eigen::VectorXd& x) {
    if (x.size() != 2 && x.size() != 3) throw Error(ErrorCode::InvalidArgument, "points must have 2 or 3 components");
    return Vec(x);
}

PenaltyParams penalty(double mu, double nu, const std::string& blend) {
    if (blend != "cubic" && blend != "quintic") throw Error(ErrorCode::InvalidArgument, "blend must be cubic or quintic");
    return {mu, nu, blend == "cubic" ? Blend::Cubic : Blend::Quintic};
}

py::dict trajectory_dict(const Trajectory& t) {
    const auto n = static_cast<py::ssize_t>(t.records.size());
    const py::ssize_t dim = t.records.empty() ? 0 : t.records.front().x.size();
    py::array_t<double> time(n), d(n), s(n), w(n), V(n);
    py::array_t<double> x({n, dim}), u({n, dim});
    auto xm = x.mutable_unchecked<2>();
    auto um = u.mutable_unchecked<2>();
    for (py::ssize_t k = 0; k < n; ++k) {
        const TrajectoryRecord& r = t.records[static_cast<std::size_t>(k)];
        time.mutable_at(k) = r.t;
        d.mutable_at(k) = r.d;
        s.mutable_at(k) = r.s;
        w.mutable_at(k) = r.w;
        V.mutable_at(k) = r.V;
        for (py::ssize_t i = 0; i < dim; ++i) {
            xm(k, i) = r.x[i];
            um(k, i) = r.u[i];
        }
    }
    py::dict out;
    out["t"] = time;
    out["x"] = x;
    out["u"] = u;
    out["d"] = d;
    out["s"] = s;
    out["w"] = w;
    out["V"] = V;
    out["summary"] = to_python(to_json(t.summary));
    return out;
}

// Parsed document plus the objects built from it.
class Document {
public:
    explicit Document(RunDocument doc) : doc_(std::move(doc)), cfg_(build_sim_config(doc_)) {}

    static Document from_file(const std::string& path, const std::vector<std::string>& overrides) {
        return Document(load_document(path, overrides));
    }

    static Document from_dict(const py::handle& obj, const std::vector<std::string>& overrides) {
        json j = from_python(obj);
        for (const std::string& o : overrides) apply_override(j, o);
        return Document(parse_document(j));
    }

    py::object as_dict() const { return to_python(to_json(doc_)); }
    int dimension() const { return doc_.dimension; }
    std::vector<Vec> initials() const { return cfg_.initials; }

    py::dict feasibility() const {
        const FeasibilityReport r = validate_feasibility(cfg_.world, doc_.robot, doc_.penalty);
        py::dict out;
        out["feasible"] = r.feasible;
        out["advisory"] = r.advisory;
        out["reach"] = r.reach;
        out["violations"] = r.violations;
        out["notes"] = r.notes;
        return out;
    }

    double margin_at(const Eigen::VectorXd& x) const { return margin(cfg_.world, as_point(x), doc_.robot); }

    py::dict field_at(const Eigen::VectorXd& x) const {
        const FieldSample f = closed_loop_field(cfg_.potential, cfg_.world, doc_.robot, doc_.penalty, as_point(x),
                                                cfg_.sensor, cfg_.safety_tolerance);
        py::dict out;
        out["velocity"] = Eigen::VectorXd(f.velocity);
        out["nominal"] = Eigen::VectorXd(f.diagnostics.nominal);
        out["w"] = f.diagnostics.w;
        out["s"] = f.diagnostics.s;
        out["margin"] = f.margin;
        return out;
    }

    py::dict simulate_one(const Eigen::VectorXd& x0) const {
        Trajectory t;
        {
            py::gil_scoped_release release;
            t = simulate(cfg_, as_point(x0));
        }
        return trajectory_dict(t);
    }

    py::list run(unsigned jobs) const {
        std::vector<Trajectory> runs;
        {
            py::gil_scoped_release release;
            runs = batch_simulate(cfg_, cfg_.initials, jobs);
        }
        py::list out;
        for (const Trajectory& t : runs) out.append(trajectory_dict(t));
        return out;
    }

    py::list analyze() const {
        py::list out;
        for (const EquilibriumReport& r : find_equilibria(cfg_.world, cfg_.potential, doc_.robot)) {
            out.append(to_python(to_json(r)));
        }
        return out;
    }

    py::dict vector_field(int nx, int ny) const {
        if (!doc_.bounds) throw Error(ErrorCode::InvalidArgument, "vector field export needs world bounds");
        const auto cells = emit_vector_field(cfg_, GridSpec{doc_.bounds->lo, doc_.bounds->hi, nx, ny});
        const auto n = static_cast<py::ssize_t>(cells.size());
        py::array_t<double> x({n, py::ssize_t{2}}), v({n, py::ssize_t{2}}), w(n);
        auto xm = x.mutable_unchecked<2>();
        auto vm = v.mutable_unchecked<2>();
        for (py::ssize_t k = 0; k < n; ++k) {
            const FieldCell& c = cells[static_cast<std::size_t>(k)];
            xm(k, 0) = c.x[0];
            xm(k, 1) = c.x[1];
            vm(k, 0) = c.v[0];
            vm(k, 1) = c.v[1];
            w.mutable_at(k) = c.w;
        }
        py::dict out;
        out["x"] = x;
        out["v"] = v;
        out["w"] = w;
        return out;
    }

    py::list contours(double level, int resolution) const {
        if (doc_.dimension != 2 || !doc_.bounds) throw Error(ErrorCode::Unsupported, "contours need a bounded 2D world");
        const Eigen::Vector2d lo(doc_.bounds->lo[0], doc_.bounds->lo[1]);
        const Eigen::Vector2d hi(doc_.bounds->hi[0], doc_.bounds->hi[1]);
        const auto m = sample_margin(cfg_.world, doc_.robot, resolution, resolution, lo, hi);
        py::list out;
        for (const Polyline& line : marching_squares(m, resolution, resolution, lo, hi, level)) {
            Eigen::MatrixX2d pts(static_cast<Eigen::Index>(line.points.size()), 2);
            for (std::size_t i = 0; i < line.points.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) = line.points[i];
            out.append(py::make_tuple(pts, line.closed));
        }
        return out;
    }

    py::dict scan(const Eigen::VectorXd& x) const {
        const Scan sc = doc_.dimension == 2 ? scan_2d(cfg_.world, as_point(x), doc_.sensor.lidar)
                                            : scan_3d(cfg_.world, as_point(x), doc_.sensor.lidar);
        Eigen::MatrixXd dirs(static_cast<Eigen::Index>(sc.directions.size()), doc_.dimension);
        for (std::size_t k = 0; k < sc.directions.size(); ++k) dirs.row(static_cast<Eigen::Index>(k)) = sc.directions[k];
        py::dict out;
        out["directions"] = dirs;
        out["ranges"] = py::array_t<double>(static_cast<py::ssize_t>(sc.ranges.size()), sc.ranges.data());
        return out;
    }

private:
    RunDocument doc_;
    SimConfig cfg_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Safe penalty-based feedback: geometry, filter, simulation and analysis";

    static py::exception<Error> error(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object code = py::str(std::string(to_string(e.code())));
            py::object exc = py::handle(error.ptr())(py::str(e.what()));
            exc.attr("code") = code;
            PyErr_SetObject(error.ptr(), exc.ptr());
        }
    });

    m.def(
        "transition", [](double z, double tau, const std::string& blend) {
            return transition(z, tau, penalty(1.0, 1.0, blend).blend);
        },
        py::arg("z"), py::arg("tau"), py::arg("blend") = "cubic", "Smooth step from 1 (z <= 0) to 0 (z >= tau).");
    m.def(
        "blend_weight",
        [](double d, double s, double mu, double nu, const std::string& blend) {
            return blend_weight(d, s, penalty(mu, nu, blend));
        },
        py::arg("d"), py::arg("s"), py::arg("mu") = 0.6, py::arg("nu") = 1.0, py::arg("blend") = "cubic");
    m.def(
        "spf_filter",
        [](const Eigen::VectorXd& nominal, double margin, const Eigen::VectorXd& normal, double mu, double nu,
           const std::string& blend) {
            const FilterResult r = spf_filter(as_point(nominal), SensorReading{margin, as_point(normal), true},
                                              penalty(mu, nu, blend));
            return py::make_tuple(Eigen::VectorXd(r.velocity), r.diagnostics.w);
        },
        py::arg("nominal"), py::arg("margin"), py::arg("normal"), py::arg("mu") = 0.6, py::arg("nu") = 1.0,
        py::arg("blend") = "cubic", "Filtered velocity and blend weight for one reading.");
    m.def(
        "spf_filter_multi",
        [](const Eigen::VectorXd& nominal, const std::vector<double>& margins, const std::vector<Eigen::VectorXd>& normals,
           double mu, double nu, const std::string& blend) {
            if (margins.size() != normals.size()) throw Error(ErrorCode::InvalidArgument, "margins/normals size mismatch");
            std::vector<SensorReading> readings;
            for (std::size_t i = 0; i < margins.size(); ++i) readings.push_back({margins[i], as_point(normals[i]), true});
            const MultiFilterResult r = spf_filter_multi(as_point(nominal), readings, penalty(mu, nu, blend));
            return py::make_tuple(Eigen::VectorXd(r.velocity), r.weights, r.saturated);
        },
        py::arg("nominal"), py::arg("margins"), py::arg("normals"), py::arg("mu") = 0.6, py::arg("nu") = 1.0,
        py::arg("blend") = "cubic");

    py::class_<Document>(m, "Document")
        .def_static("from_file", &Document::from_file, py::arg("path"), py::arg("overrides") = std::vector<std::string>{})
        .def_static("from_dict", &Document::from_dict, py::arg("doc"), py::arg("overrides") = std::vector<std::string>{})
        .def("to_dict", &Document::as_dict)
        .def_property_readonly("dimension", &Document::dimension)
        .def_property_readonly("initials", &Document::initials)
        .def("feasibility", &Document::feasibility)
        .def("margin", &Document::margin_at, py::arg("x"))
        .def("field", &Document::field_at, py::arg("x"), "Closed-loop velocity and filter diagnostics at x.")
        .def("simulate", &Document::simulate_one, py::arg("x0"))
        .def("run", &Document::run, py::arg("jobs") = 0u, "Simulate every initial state of the document.")
        .def("analyze", &Document::analyze)
        .def("vector_field", &Document::vector_field, py::arg("nx") = 50, py::arg("ny") = 50)
        .def("contours", &Document::contours, py::arg("level") = 0.0, py::arg("resolution") = 200)
        .def("scan", &Document::scan, py::arg("x"));
}
