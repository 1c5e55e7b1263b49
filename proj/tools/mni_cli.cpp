#include "mni/csv_io.hpp"
#include "mni/error.hpp"
#include "mni/experiments.hpp"
#include "mni/solvers.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <iostream>

namespace {

using nlohmann::json;

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

int cmd_run(const std::string& config_path, std::optional<std::size_t> workers) {
    mni::ExperimentConfig cfg = mni::ExperimentConfig::load(config_path);
    if (workers)
        cfg.workers = *workers;
    const mni::RateReport rep = mni::run_experiment(cfg);
    json brief = {{"scenario", mni::to_string(rep.scenario)},
                  {"output_dir", cfg.output_dir},
                  {"rows", rep.rows.rows.size()},
                  {"slope", rep.summary["slope"]},
                  {"predicted_slope", rep.summary["predicted_slope"]},
                  {"verdict", rep.summary["verdict"]},
                  {"wall_time_seconds", rep.wall_time_seconds}};
    std::cout << brief.dump(2) << "\n";
    for (const auto& w : rep.regime_warnings)
        std::cerr << "warning: " << w << "\n";
    if (rep.aborted) {
        std::cerr << "aborted: " << rep.abort_reason << "\n";
        return 3;
    }
    return 0;
}

int cmd_solve(const std::string& design_path, const std::string& targets_path, double p, double tol) {
    const Eigen::MatrixXd X = mni::read_numeric_csv(design_path);
    const Eigen::VectorXd y = mni::read_vector_csv(targets_path);
    mni::SolverOptions opts;
    opts.tol_feasibility = tol;
    opts.tol_kkt = tol;
    const mni::NormSpec norm = mni::NormSpec::lp(p, static_cast<std::size_t>(X.cols()));
    const mni::MniSolution s = mni::solve_min_norm({std::cref(X), y, norm}, opts);
    json out = {{"weights", std::vector<double>(s.weights.data(), s.weights.data() + s.weights.size())},
                {"p", p},
                {"norm_value", s.norm_value},
                {"l2_value", s.l2_value},
                {"feasibility_residual", s.feasibility_residual},
                {"duality_gap", number_or_null(s.duality_gap)},
                {"iterations", s.iterations},
                {"status", mni::to_string(s.status)}};
    std::cout << out.dump(2) << "\n";
    return s.ok() ? 0 : 4;
}

int cmd_report(const std::string& dir) {
    const json r = mni::report_directory(dir);
    std::cout << r.dump(2) << "\n";
    const bool consistent = r.value("digest_matches_summary", true) && r.value("verdict_matches_summary", true);
    if (!consistent) {
        std::cerr << "rows.csv does not match summary.json\n";
        return 5;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimum-norm interpolation experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::size_t> workers;
    auto* run = app.add_subcommand("run", "run a scenario from a JSON config");
    run->add_option("--config", config_path, "path to the config file")->required()->check(CLI::ExistingFile);
    run->add_option("--workers", workers, "override the worker count");

    std::string design_path, targets_path;
    double p = 2.0, tol = 1e-8;
    auto* solve = app.add_subcommand("solve", "minimum l_p norm interpolator of one system");
    solve->add_option("--design", design_path, "design matrix CSV (n rows, d columns)")
        ->required()
        ->check(CLI::ExistingFile);
    solve->add_option("--targets", targets_path, "targets CSV (n values)")->required()->check(CLI::ExistingFile);
    solve->add_option("--p", p, "norm exponent in (1, 2]")->required();
    solve->add_option("--tol", tol, "feasibility and optimality tolerance")->capture_default_str();

    std::string report_dir;
    auto* report = app.add_subcommand("report", "re-derive the verdict of a finished run");
    report->add_option("--dir", report_dir, "run output directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(config_path, workers);
        if (*solve)
            return cmd_solve(design_path, targets_path, p, tol);
        return cmd_report(report_dir);
    } catch (const mni::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mni::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
