#pragma once

// Config-driven scenario runner. Each run writes rows.csv and summary.json
// into the configured output directory.

#include "mni/csv_io.hpp"
#include "mni/decomposition.hpp"
#include "mni/rng.hpp"
#include "mni/slope_fit.hpp"
#include "mni/solvers.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mni {

enum class Scenario {
    t2_rate,
    t1_rate,
    linf_profile,
    variance_decay,
    anderson_scan,
    dyadic_diagnostic,
    complexity_scan,
    inductive_bias_scan,
};

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

/// Scenarios whose verdict is a fitted log-log slope.
bool is_rate_scenario(Scenario s);

struct VerdictConfig {
    /// Allowed |slope - predicted|; scenario default when empty.
    std::optional<double> tolerance;
    /// Multiplicative envelope for the profile scenarios; scenario default when empty.
    std::optional<double> envelope_factor;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::t2_rate;
    double p = 1.5;
    std::vector<std::size_t> d_grid;
    std::vector<std::size_t> n_grid;
    /// n and d of this spec are taken from the grids.
    DesignSpec design;
    NoiseSpec noise;
    std::vector<std::size_t> truth_support{0};
    std::vector<double> truth_values{1.0};
    std::size_t outer = 20;
    std::size_t inner = 20;
    std::size_t multistarts = 64;
    SolverOptions solver;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::size_t workers = 1;
    VerdictConfig verdict;
    /// Adds the reverse Efron-Stein comparison to t2_rate rows.
    bool reverse_efron_stein = false;
    ReverseEfronSteinConfig reverse_efron_stein_constants;

    /// Rejects unknown fields; missing fields take the defaults above.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    /// Full config with defaults materialized.
    nlohmann::json to_json() const;
    void validate() const;

    double resolved_tolerance() const;
    double resolved_envelope() const;
};

struct Verdict {
    bool pass = false;
    std::string rule;
    std::optional<double> slope_error;
    std::optional<double> worst_ratio;
};

struct RateReport {
    Scenario scenario = Scenario::t2_rate;
    CsvTable rows;
    std::optional<SlopeFit> fit;
    std::optional<double> predicted_slope;
    Verdict verdict;
    bool aborted = false;
    std::string abort_reason;
    std::vector<std::string> regime_warnings;
    double wall_time_seconds = 0.0;
    std::string rows_digest;
    nlohmann::json summary;
};

/// Runs the scenario, writes rows.csv and summary.json, returns the report.
/// An aborted run still writes its partial rows, flagged in the status column.
RateReport run_experiment(const ExperimentConfig& config);

/// Recomputes fit and verdict from a rows table alone.
struct DerivedVerdict {
    Scenario scenario = Scenario::t2_rate;
    std::optional<SlopeFit> fit;
    std::optional<double> predicted_slope;
    Verdict verdict;
};

DerivedVerdict derive_verdict(const CsvTable& rows);

/// Reads rows.csv (and summary.json when present) from dir and re-derives the verdict.
/// The returned json includes whether it agrees with the stored summary and digest.
nlohmann::json report_directory(const std::string& dir);

std::string sha256_hex(const std::string& data);

} // namespace mni
