#include "mni/decomposition.hpp"
#include "mni/error.hpp"
#include "mni/experiments.hpp"
#include "mni/geometry.hpp"
#include "mni/norms.hpp"
#include "mni/rng.hpp"
#include "mni/slope_fit.hpp"
#include "mni/solvers.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mni;

namespace {

py::dict solution_dict(const MniSolution& s) {
    py::dict d;
    d["weights"] = s.weights;
    d["norm_value"] = s.norm_value;
    d["l2_value"] = s.l2_value;
    d["feasibility_residual"] = s.feasibility_residual;
    d["duality_gap"] = s.duality_gap;
    d["iterations"] = s.iterations;
    d["status"] = to_string(s.status);
    d["certificate"] = s.certificate;
    return d;
}

py::dict estimate_dict(const Estimate& e) {
    py::dict d;
    d["mean"] = e.mean;
    d["std_error"] = e.std_error;
    d["samples"] = e.samples;
    d["failures"] = e.failures;
    return d;
}

SolverOptions solver_options(double tol) {
    SolverOptions o;
    o.tol_feasibility = tol;
    o.tol_kkt = tol;
    return o;
}

Design wrap(const Eigen::MatrixXd& X) { return Design{X, {}, {}}; }

DesignSpec design_spec(std::size_t n, std::size_t d, const std::string& distribution, const std::string& scaling,
                       double gamma) {
    DesignSpec s;
    s.n = n;
    s.d = d;
    s.distribution = distribution_from_string(distribution);
    s.scaling = scaling_from_string(scaling);
    s.gamma = gamma;
    s.validate();
    return s;
}

py::object parse_json(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Minimum-norm interpolation solvers and Monte Carlo estimators";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<IllPosedError>(m, "IllPosedError", PyExc_ValueError);
    py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_NotImplementedError);
    py::register_exception<EstimatorError>(m, "EstimatorError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def(
        "solve",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double p, double tol) {
            return solution_dict(
                solve_min_norm({std::cref(X), y, NormSpec::lp(p, std::size_t(X.cols()))}, solver_options(tol)));
        },
        py::arg("X"), py::arg("y"), py::arg("p"), py::arg("tol") = 1e-8,
        "Minimum l_p norm w with X w = y.");

    m.def(
        "solve_min_l2_in_ball",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& v, double p, double radius, double tol) {
            return solution_dict(
                solve_min_l2_in_ball(wrap(X), v, NormSpec::lp(p, std::size_t(X.cols())), radius, solver_options(tol)));
        },
        py::arg("X"), py::arg("v"), py::arg("p"), py::arg("radius"), py::arg("tol") = 1e-8,
        "Least l2 norm w with X w = v and ||w||_p <= radius.");

    m.def(
        "norm", [](const Eigen::VectorXd& w, double p) { return eval_norm(NormSpec::lp(p, std::size_t(w.size())), w); },
        py::arg("w"), py::arg("p"));
    m.def(
        "dual_norm",
        [](const Eigen::VectorXd& v, double p) { return eval_dual_norm(NormSpec::lp(p, std::size_t(v.size())), v); },
        py::arg("v"), py::arg("p"));

    m.def("philox4x32", &philox4x32, py::arg("counter"), py::arg("key"));
    m.def(
        "sample_design",
        [](std::size_t n, std::size_t d, std::uint64_t seed, std::uint64_t replicate, const std::string& distribution,
           const std::string& scaling, double gamma) {
            return sample_design(design_spec(n, d, distribution, scaling, gamma),
                                 StreamKey(seed, StreamRole::design, replicate))
                .matrix;
        },
        py::arg("n"), py::arg("d"), py::arg("seed") = 0, py::arg("replicate") = 0,
        py::arg("distribution") = "gaussian", py::arg("scaling") = "raw", py::arg("gamma") = 1.0);

    m.def(
        "estimate_M",
        [](const Eigen::MatrixXd& X, double p, std::size_t samples, std::uint64_t seed, std::size_t workers) {
            McOptions o;
            o.workers = workers;
            return estimate_dict(estimate_M(wrap(X), NormSpec::lp(p, std::size_t(X.cols())), samples,
                                            StreamKey(seed, StreamRole::auxiliary), o));
        },
        py::arg("X"), py::arg("p"), py::arg("samples"), py::arg("seed") = 0, py::arg("workers") = 1);
    m.def(
        "estimate_M_star",
        [](const Eigen::MatrixXd& X, double p, std::size_t samples, std::uint64_t seed) {
            return estimate_dict(estimate_M_star(wrap(X), NormSpec::lp(p, std::size_t(X.cols())), samples,
                                                 StreamKey(seed, StreamRole::auxiliary)));
        },
        py::arg("X"), py::arg("p"), py::arg("samples"), py::arg("seed") = 0);

    m.def("lambda_k", &lambda_k, py::arg("d"), py::arg("k"), py::arg("p"));
    m.def(
        "predicted_delta_bound",
        [](std::size_t d, std::size_t k, double p, const std::string& regime) {
            return predicted_delta_bound(d, k, p, regime_from_string(regime));
        },
        py::arg("d"), py::arg("k"), py::arg("p"), py::arg("regime") = "gaussian");

    m.def(
        "estimate_decomposition",
        [](std::size_t n, std::size_t d, double p, std::size_t outer, std::size_t inner, std::uint64_t seed,
           const std::vector<std::size_t>& truth_support, const std::vector<double>& truth_values,
           const std::string& distribution, const std::string& scaling, double noise_variance, std::size_t workers) {
            const NormSpec norm = NormSpec::lp(p, d);
            NoiseSpec noise;
            noise.variance = noise_variance;
            McOptions o;
            o.workers = workers;
            const DecompositionReport r = estimate_decomposition(
                design_spec(n, d, distribution, scaling, 1.0), norm,
                GroundTruth::sparse(d, truth_support, truth_values, norm), noise, outer, inner,
                StreamKey(seed, StreamRole::design), o);
            py::dict out;
            out["E1"] = estimate_dict(r.E1);
            out["E2"] = estimate_dict(r.E2);
            out["T1"] = estimate_dict(r.T1);
            out["T2"] = estimate_dict(r.T2);
            out["MSE"] = estimate_dict(r.MSE);
            out["failures"] = r.failures;
            out["consistency_residual"] = r.consistency_residual;
            out["propagated_stderr"] = r.propagated_stderr;
            return out;
        },
        py::arg("n"), py::arg("d"), py::arg("p"), py::arg("outer"), py::arg("inner"), py::arg("seed") = 0,
        py::arg("truth_support") = std::vector<std::size_t>{0}, py::arg("truth_values") = std::vector<double>{1.0},
        py::arg("distribution") = "gaussian", py::arg("scaling") = "raw", py::arg("noise_variance") = 1.0,
        py::arg("workers") = 1);

    m.def(
        "anderson_gap",
        [](const Eigen::VectorXd& x, double p, std::size_t samples, std::uint64_t seed) {
            const AndersonGap g =
                anderson_gap(NormSpec::lp(p, std::size_t(x.size())), x, samples, StreamKey(seed, StreamRole::auxiliary));
            py::dict d;
            d["gap"] = g.gap;
            d["gap_stderr"] = g.gap_stderr;
            d["ratio_to_xnorm2"] = g.ratio_to_xnorm2;
            return d;
        },
        py::arg("x"), py::arg("p"), py::arg("samples"), py::arg("seed") = 0);

    m.def(
        "fit_loglog_slope",
        [](const std::vector<double>& x, const std::vector<double>& y, std::optional<std::vector<double>> w) {
            if (x.size() != y.size() || (w && w->size() != x.size()))
                throw DimensionError("x, y and weights must have equal lengths");
            std::vector<SlopeRow> rows;
            for (std::size_t i = 0; i < x.size(); ++i)
                rows.push_back({x[i], y[i], w ? std::optional<double>((*w)[i]) : std::nullopt});
            const SlopeFit f = fit_loglog_slope(rows);
            py::dict d;
            d["slope"] = f.slope;
            d["intercept"] = f.intercept;
            d["r_squared"] = f.r_squared;
            return d;
        },
        py::arg("x"), py::arg("y"), py::arg("weights") = py::none());

    m.def(
        "run_experiment",
        [](const std::string& config_json) {
            const ExperimentConfig cfg = ExperimentConfig::from_json(nlohmann::json::parse(config_json));
            RateReport rep;
            {
                py::gil_scoped_release release;
                rep = run_experiment(cfg);
            }
            return parse_json(rep.summary);
        },
        py::arg("config_json"), "Runs a config given as JSON text and returns the summary.");
    m.def(
        "report", [](const std::string& dir) { return parse_json(report_directory(dir)); }, py::arg("dir"));
}
