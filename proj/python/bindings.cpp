// Python bindings for the optimizer, emulator, screening and sweeps.

#include <fstream>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "optimice/analysis.hpp"
#include "optimice/cli.hpp"
#include "optimice/design.hpp"

namespace py = pybind11;
using namespace optimice;

namespace {

ParameterSpace space_from(const std::vector<std::tuple<std::string, double, double>>& dims)
{
    std::vector<Dimension> out;
    for (const auto& [name, lo, hi] : dims)
        out.push_back({name, lo, hi});
    return ParameterSpace(out);
}

Objective objective_from(const py::object& f, const std::optional<std::vector<std::tuple<std::string, double, double>>>& space)
{
    if (py::isinstance<py::str>(f)) {
        const auto name = f.cast<std::string>();
        if (!space)
            return Objective::builtin(name);
        ParameterSpace box = space_from(*space);
        return Objective::builtin(name, name == "rosenbrock" ? box.dim() : 0).with_space(box);
    }
    if (!space)
        throw ConfigError("a callable objective needs a space");
    auto fn = f.cast<std::function<double(const Point&)>>();
    return Objective::from_function("python", std::move(fn), space_from(*space));
}

py::dict trace_dict(const OptimizationTrace& t)
{
    py::list provenance;
    std::vector<std::size_t> iteration, k;
    std::vector<double> y, incumbent, regret, beta;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(t.records.size()), static_cast<Eigen::Index>(t.dim_names.size()));
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        const auto& r = t.records[i];
        iteration.push_back(r.iteration);
        k.push_back(r.k);
        provenance.append(to_string(r.provenance));
        x.row(static_cast<Eigen::Index>(i)) = r.x.transpose();
        y.push_back(r.y);
        incumbent.push_back(r.incumbent_y);
        regret.push_back(r.simple_regret);
        beta.push_back(r.beta);
    }
    py::dict d;
    d["names"] = t.dim_names;
    d["iteration"] = iteration;
    d["k"] = k;
    d["provenance"] = provenance;
    d["x"] = x;
    d["y"] = y;
    d["incumbent_y"] = incumbent;
    d["simple_regret"] = regret;
    d["beta"] = beta;
    d["f_star"] = t.f_star ? py::cast(*t.f_star) : py::none();
    std::ostringstream csv;
    write_trace_csv(csv, t);
    d["csv"] = csv.str();
    return d;
}

}  // namespace

PYBIND11_MODULE(_optimice, m)
{
    m.doc() = "Batch Bayesian optimization with MICE, Morris screening and emulator sweeps";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<EvaluationError>(m, "EvaluationError", PyExc_RuntimeError);

    m.def("branin", &branin, py::arg("x"));
    m.def("rosenbrock", &rosenbrock, py::arg("x"));
    m.def("beta_schedule", &beta_schedule, py::arg("t"), py::arg("candidate_count"), py::arg("delta") = 0.1);
    m.def(
        "lhd", [](std::size_t n, std::size_t d, std::uint64_t seed) {
            RngStream rng(seed, "python/lhd");
            return lhd_sample(n, d, rng);
        },
        py::arg("n"), py::arg("d"), py::arg("seed") = 0);

    py::class_<GpModel>(m, "Emulator")
        .def_static(
            "fit",
            [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::string& kernel, double smoothness,
               std::uint64_t seed) {
                Dataset data(static_cast<std::size_t>(x.cols()));
                for (Eigen::Index i = 0; i < x.rows(); ++i)
                    data.append(x.row(i).transpose(), y[i]);
                FitOptions o;
                o.family = kernel_family_from_string(kernel);
                o.smoothness = smoothness;
                RngStream rng(seed, "python/fit");
                return fit(data, o, rng);
            },
            py::arg("x"), py::arg("y"), py::arg("kernel") = "matern", py::arg("smoothness") = 2.5,
            py::arg("seed") = 0, "Maximum-likelihood fit on unit-cube inputs.")
        .def(
            "predict",
            [](const GpModel& g, const Eigen::MatrixXd& x) {
                Eigen::VectorXd mean, var;
                g.predict_many(x, mean, var);
                return py::make_tuple(mean, var);
            },
            py::arg("x"), "Mean and variance for each row.")
        .def(
            "with_fantasy", [](const GpModel& g, const Eigen::VectorXd& x) { return g.with_fantasy(x); },
            py::arg("x"))
        .def_property_readonly("length_scales", [](const GpModel& g) { return g.kernel().length_scales; })
        .def_property_readonly("process_variance", &GpModel::output_variance)
        .def_property_readonly("jitter", &GpModel::jitter);

    m.def(
        "optimize",
        [](const py::object& objective, std::optional<std::vector<std::tuple<std::string, double, double>>> space,
           std::size_t iterations, std::size_t batch_size, std::size_t initial_design_size, std::string scheme,
           std::uint64_t seed) {
            Objective f = objective_from(objective, space);
            OptimizerConfig c;
            c.iterations = iterations;
            c.batch_size = batch_size;
            c.initial_design_size = initial_design_size;
            c.scheme = scheme_from_string(scheme);
            c.seed = seed;
            if (!py::isinstance<py::str>(objective))
                c.parallelism = 1;
            OptimizationTrace t;
            {
                py::gil_scoped_release release;
                t = run(f.space(), f, c);
            }
            return trace_dict(t);
        },
        py::arg("objective"), py::arg("space") = py::none(), py::arg("iterations") = 10, py::arg("batch_size") = 4,
        py::arg("initial_design_size") = 0, py::arg("scheme") = "OptimMICE", py::arg("seed") = 0,
        "Run the batch optimizer on a builtin name or a Python callable.");

    m.def(
        "screen",
        [](const py::object& objective, std::optional<std::vector<std::tuple<std::string, double, double>>> space,
           std::size_t r, std::uint64_t seed) {
            Objective f = objective_from(objective, space);
            MorrisOptions o;
            o.r = r;
            RngStream rng(seed, "morris");
            MorrisResult res;
            {
                py::gil_scoped_release release;
                res = screen(f, f.space(), o, rng);
            }
            py::dict d;
            d["names"] = res.names;
            d["mu"] = res.mu;
            d["mu_star"] = res.mu_star;
            d["sigma"] = res.sigma;
            std::vector<std::string> classes;
            for (auto c : res.classes)
                classes.push_back(to_string(c));
            d["classes"] = classes;
            d["evaluations"] = res.evaluations;
            return d;
        },
        py::arg("objective"), py::arg("space") = py::none(), py::arg("r") = 4, py::arg("seed") = 0,
        "Morris elementary-effects screening.");

    m.def(
        "sweep",
        [](const std::filesystem::path& model_path, std::optional<std::vector<double>> center, std::size_t n) {
            std::ifstream in(model_path);
            if (!in)
                throw ConfigError("cannot read model '" + model_path.string() + "'");
            SavedEmulator saved = load_emulator(in);
            Point c;
            if (center)
                c = Eigen::Map<const Eigen::VectorXd>(center->data(), static_cast<Eigen::Index>(center->size()));
            else if (saved.incumbent)
                c = *saved.incumbent;
            else
                throw ConfigError("model stores no incumbent; pass center");
            py::list out;
            for (const auto& curve : local_panel(saved.model, saved.space, c, n)) {
                py::dict d;
                d["name"] = saved.space[curve.dim].name;
                d["x"] = curve.abscissa;
                d["mean"] = curve.mean;
                d["sd"] = curve.sd;
                out.append(d);
            }
            return out;
        },
        py::arg("model"), py::arg("center") = py::none(), py::arg("n") = 125,
        "One-at-a-time sweeps over a model file written by the optimize command.");

    m.def("prediction_count", &prediction_count);
    m.def("evaluation_count", &evaluation_count);
}
