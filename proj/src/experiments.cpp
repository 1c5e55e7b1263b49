#include "mni/experiments.hpp"

#include "mni/error.hpp"
#include "mni/geometry.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace mni {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Cells = std::map<std::string, std::string>;

struct ScenarioOutput {
    std::vector<Cells> rows;
    std::vector<std::string> extra_columns;
    json extras = json::object();
    bool aborted = false;
    std::string abort_reason;
    std::vector<std::string> regime_warnings;
};

void put(Cells& c, const std::string& name, double v) { c[name] = format_double(v); }
void put(Cells& c, const std::string& name, std::size_t v) { c[name] = std::to_string(v); }
void put(Cells& c, const std::string& name, const std::string& v) { c[name] = v; }

Cells base_row(const ExperimentConfig& cfg, double grid_value, double estimate, double se, std::size_t replicates) {
    Cells c;
    put(c, "scenario", to_string(cfg.scenario));
    put(c, "grid_value", grid_value);
    put(c, "estimate", estimate);
    put(c, "stderr", se);
    put(c, "replicates", replicates);
    put(c, "seed", std::to_string(cfg.seed));
    put(c, "status", std::string("ok"));
    return c;
}

McOptions mc_options(const ExperimentConfig& cfg) {
    McOptions o;
    o.workers = cfg.workers;
    o.solver = cfg.solver;
    return o;
}

DesignSpec design_for(const ExperimentConfig& cfg, std::size_t n, std::size_t d) {
    DesignSpec s = cfg.design;
    s.n = n;
    s.d = d;
    return s;
}

GroundTruth truth_for(const ExperimentConfig& cfg, std::size_t d, const NormSpec& norm) {
    return GroundTruth::sparse(d, cfg.truth_support, cfg.truth_values, norm);
}

Regime regime_for(const DesignSpec& spec) {
    return spec.distribution == Distribution::gaussian ? Regime::gaussian : Regime::subgaussian;
}

bool in_regime(std::size_t n, std::size_t d) { return double(d) >= 16.0 * double(n) * std::log(double(d)); }

void note_regime(ScenarioOutput& out, std::size_t n, std::size_t d) {
    if (!in_regime(n, d))
        out.regime_warnings.push_back("n=" + std::to_string(n) + ", d=" + std::to_string(d) +
                                      " violates d >= 16 n log d");
}

void check_failures(std::size_t failures, std::size_t total, double budget) {
    if (double(failures) > budget * double(total))
        throw EstimatorError("solver failures " + std::to_string(failures) + " of " + std::to_string(total) +
                             " exceed the budget");
}

// Grid values visited by scenarios that vary a single dimension.
std::vector<std::size_t> varied_grid(const ExperimentConfig& cfg) {
    return cfg.scenario == Scenario::t1_rate ? cfg.n_grid : cfg.d_grid;
}

template <typename PointFn>
void for_each_point(ScenarioOutput& out, const ExperimentConfig& cfg, PointFn&& fn) {
    const auto grid = varied_grid(cfg);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        try {
            fn(g, grid[g]);
        } catch (const EstimatorError& e) {
            Cells c = base_row(cfg, double(grid[g]), kNaN, kNaN, 0);
            put(c, "status", std::string("aborted"));
            out.rows.push_back(std::move(c));
            out.aborted = true;
            out.abort_reason = e.what();
            return;
        }
    }
}

ScenarioOutput run_rate_decomposition(const ExperimentConfig& cfg) {
    ScenarioOutput out;
    out.extra_columns = {"n", "d", "E1", "E1_stderr", "E2", "E2_stderr", "T1", "T1_stderr", "T2", "T2_stderr",
                         "MSE", "MSE_stderr", "consistency_residual", "propagated_stderr", "failures", "in_regime"};
    if (cfg.reverse_efron_stein)
        out.extra_columns.insert(out.extra_columns.end(),
                                 {"M_n", "psi", "psi_radius", "es_rhs_bound", "es_slack", "es_satisfied"});
    const bool vary_n = cfg.scenario == Scenario::t1_rate;
    const McOptions mc = mc_options(cfg);
    const StreamKey key(cfg.seed, StreamRole::design);
    json es_summary = json::array();
    for_each_point(out, cfg, [&](std::size_t, std::size_t value) {
        const std::size_t n = vary_n ? value : cfg.n_grid.front();
        const std::size_t d = vary_n ? cfg.d_grid.front() : value;
        note_regime(out, n, d);
        const DesignSpec spec = design_for(cfg, n, d);
        const NormSpec norm = NormSpec::lp(cfg.p, d);
        const GroundTruth truth = truth_for(cfg, d, norm);
        const DecompositionReport rep =
            estimate_decomposition(spec, norm, truth, cfg.noise, cfg.outer, cfg.inner, key, mc);
        const Estimate& target = vary_n ? rep.T1 : rep.T2;
        Cells c = base_row(cfg, double(value), target.mean, target.std_error, rep.outer_samples);
        put(c, "n", n);
        put(c, "d", d);
        const std::pair<const char*, const Estimate*> terms[] = {
            {"E1", &rep.E1}, {"E2", &rep.E2}, {"T1", &rep.T1}, {"T2", &rep.T2}, {"MSE", &rep.MSE}};
        for (const auto& [name, est] : terms) {
            put(c, name, est->mean);
            put(c, std::string(name) + "_stderr", est->std_error);
        }
        put(c, "consistency_residual", rep.consistency_residual);
        put(c, "propagated_stderr", rep.propagated_stderr);
        put(c, "failures", rep.failures);
        put(c, "in_regime", std::size_t(in_regime(n, d)));
        if (cfg.reverse_efron_stein) {
            const ReverseEfronSteinResult es = reverse_efron_stein_from_report(
                rep, spec, norm, cfg.noise, cfg.outer, key, mc, cfg.reverse_efron_stein_constants);
            put(c, "M_n", es.M_n);
            put(c, "psi", es.psi);
            put(c, "psi_radius", es.radius);
            put(c, "es_rhs_bound", es.rhs_bound);
            put(c, "es_slack", es.slack);
            put(c, "es_satisfied", std::size_t(es.satisfied));
            es_summary.push_back({{"grid_value", value}, {"satisfied", es.satisfied}});
        }
        out.rows.push_back(std::move(c));
    });
    if (cfg.reverse_efron_stein)
        out.extras["reverse_efron_stein"] = es_summary;
    return out;
}

ScenarioOutput run_linf_profile(const ExperimentConfig& cfg) {
    ScenarioOutput out;
    out.extra_columns = {"n", "d", "linf_mean", "failures"};
    const std::size_t n = cfg.n_grid.front();
    for_each_point(out, cfg, [&](std::size_t, std::size_t d) {
        note_regime(out, n, d);
        const DesignSpec spec = design_for(cfg, n, d);
        const NormSpec norm = NormSpec::lp(cfg.p, d);
        std::vector<double> outer_means(cfg.outer, kNaN);
        std::vector<std::size_t> failures(cfg.outer, 0);
        parallel_for(cfg.outer, cfg.workers, [&](std::size_t o) {
            const Design X = sample_design(spec, StreamKey(cfg.seed, StreamRole::design, o));
            const MinNormSolver solver(X.matrix, norm, cfg.solver);
            std::vector<double> vals;
            for (std::size_t j = 0; j < cfg.inner; ++j) {
                const Eigen::VectorXd xi =
                    sample_noise(cfg.noise, n, StreamKey(cfg.seed, StreamRole::noise).nested(o, j));
                const MniSolution s = solver.solve(xi);
                if (!s.ok()) {
                    ++failures[o];
                    continue;
                }
                vals.push_back(s.weights.lpNorm<Eigen::Infinity>());
            }
            if (!vals.empty())
                outer_means[o] = pairwise_sum(vals) / double(vals.size());
        });
        std::size_t failed = 0;
        std::vector<double> means;
        for (std::size_t o = 0; o < cfg.outer; ++o) {
            failed += failures[o];
            if (!std::isnan(outer_means[o]))
                means.push_back(outer_means[o]);
        }
        check_failures(failed, cfg.outer * cfg.inner, mc_options(cfg).max_failure_rate);
        const Estimate e = summarize(means);
        const double scale = std::sqrt(double(d));
        Cells c = base_row(cfg, double(d), e.mean * scale, e.std_error * scale, means.size());
        put(c, "n", n);
        put(c, "d", d);
        put(c, "linf_mean", e.mean);
        put(c, "failures", failed);
        out.rows.push_back(std::move(c));
    });
    return out;
}

ScenarioOutput run_variance_decay(const ExperimentConfig& cfg) {
    ScenarioOutput out;
    out.extra_columns = {"n", "d", "norm_mean", "norm_variance", "failures", "in_regime"};
    const std::size_t n = cfg.n_grid.front();
    const Eigen::VectorXd xi = sample_noise(cfg.noise, n, StreamKey(cfg.seed, StreamRole::fixed_noise));
    out.extras["fixed_noise"] = std::vector<double>(xi.data(), xi.data() + xi.size());
    for_each_point(out, cfg, [&](std::size_t, std::size_t d) {
        note_regime(out, n, d);
        const DesignSpec spec = design_for(cfg, n, d);
        const NormSpec norm = NormSpec::lp(cfg.p, d);
        std::vector<double> values(cfg.outer, kNaN);
        parallel_for(cfg.outer, cfg.workers, [&](std::size_t o) {
            const Design X = sample_design(spec, StreamKey(cfg.seed, StreamRole::design, o));
            const MniSolution s = MinNormSolver(X.matrix, norm, cfg.solver).solve(xi);
            if (s.ok())
                values[o] = s.norm_value;
        });
        std::vector<double> v;
        for (double x : values)
            if (!std::isnan(x))
                v.push_back(x);
        const std::size_t failed = cfg.outer - v.size();
        check_failures(failed, cfg.outer, mc_options(cfg).max_failure_rate);
        if (v.size() < 3)
            throw EstimatorError("variance_decay needs at least 3 successful designs");
        const std::size_t m = v.size();
        const double mean = pairwise_sum(v) / double(m);
        const double var = sample_variance(v);
        const double ratio = var / (mean * mean);
        // delete-one jackknife for the ratio
        std::vector<double> sq(m);
        for (std::size_t i = 0; i < m; ++i)
            sq[i] = v[i] * v[i];
        const double s1 = pairwise_sum(v), s2 = pairwise_sum(sq);
        std::vector<double> loo(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double k = double(m - 1);
            const double mu = (s1 - v[i]) / k;
            const double vv = (s2 - sq[i] - k * mu * mu) / (k - 1.0);
            loo[i] = vv / (mu * mu);
        }
        const double loo_mean = pairwise_sum(loo) / double(m);
        std::vector<double> dev(m);
        for (std::size_t i = 0; i < m; ++i)
            dev[i] = (loo[i] - loo_mean) * (loo[i] - loo_mean);
        const double se = std::sqrt(double(m - 1) / double(m) * pairwise_sum(dev));
        Cells c = base_row(cfg, double(d), ratio, se, m);
        put(c, "n", n);
        put(c, "d", d);
        put(c, "norm_mean", mean);
        put(c, "norm_variance", var);
        put(c, "failures", failed);
        put(c, "in_regime", std::size_t(in_regime(n, d)));
        out.rows.push_back(std::move(c));
    });
    return out;
}

Eigen::VectorXd truth_vector_or_e1(const ExperimentConfig& cfg, std::size_t d) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(Eigen::Index(d));
    if (cfg.truth_support.empty()) {
        x[0] = 1.0;
        return x;
    }
    for (std::size_t i = 0; i < cfg.truth_support.size(); ++i)
        x[Eigen::Index(cfg.truth_support[i])] = cfg.truth_values[i];
    return x;
}

ScenarioOutput run_anderson_scan(const ExperimentConfig& cfg) {
    ScenarioOutput out;
    out.extra_columns = {"d", "gap", "gap_stderr", "x_norm"};
    for_each_point(out, cfg, [&](std::size_t, std::size_t d) {
        const NormSpec norm = NormSpec::lp(cfg.p, d);
        const Eigen::VectorXd x = truth_vector_or_e1(cfg, d);
        const std::size_t m = cfg.outer * cfg.inner;
        const AndersonGap g = anderson_gap(norm, x, m, StreamKey(cfg.seed, StreamRole::auxiliary));
        const double xn = eval_norm(norm, x);
        Cells c = base_row(cfg, double(d), g.ratio_to_xnorm2, xn > 0 ? g.gap_stderr / (xn * xn) : 0.0, m);
        put(c, "d", d);
        put(c, "gap", g.gap);
        put(c, "gap_stderr", g.gap_stderr);
        put(c, "x_norm", xn);
        out.rows.push_back(std::move(c));
    });
    return out;
}

ScenarioOutput run_dyadic(const ExperimentConfig& cfg) {
    ScenarioOutput out;
    out.extra_columns = {"n", "d", "delta_mean", "direction_l2_mean", "predicted_bound", "ratio_to_bound",
                         "range_tag", "range_boundary"};
    const std::size_t n = cfg.n_grid.front(), d = cfg.d_grid.front();
    note_regime(out, n, d);
    const DesignSpec spec = design_for(cfg, n, d);
    const NormSpec norm = NormSpec::lp(cfg.p, d);
    const Regime regime = regime_for(spec);

    std::vector<std::vector<DyadicProfile>> profiles(cfg.outer);
    std::vector<std::size_t> failures(cfg.outer, 0);
    try {
        parallel_for(cfg.outer, cfg.workers, [&](std::size_t o) {
            const Design X = sample_design(spec, StreamKey(cfg.seed, StreamRole::design, o));
            const MinNormSolver solver(X.matrix, norm, cfg.solver);
            for (std::size_t j = 0; j < cfg.inner; ++j) {
                const Eigen::VectorXd xi =
                    sample_noise(cfg.noise, n, StreamKey(cfg.seed, StreamRole::noise).nested(o, j));
                const MniSolution s = solver.solve(xi);
                if (!s.ok()) {
                    ++failures[o];
                    continue;
                }
                profiles[o].push_back(dyadic_profile(s.weights, cfg.p, n, regime));
            }
        });
        std::size_t failed = 0;
        for (auto f : failures)
            failed += f;
        check_failures(failed, cfg.outer * cfg.inner, mc_options(cfg).max_failure_rate);
    } catch (const EstimatorError& e) {
        Cells c = base_row(cfg, kNaN, kNaN, kNaN, 0);
        put(c, "status", std::string("aborted"));
        out.rows.push_back(std::move(c));
        out.aborted = true;
        out.abort_reason = e.what();
        return out;
    }

    const DyadicProfile* reference = nullptr;
    for (const auto& per_outer : profiles)
        if (!per_outer.empty()) {
            reference = &per_outer.front();
            break;
        }
    if (!reference)
        throw EstimatorError("dyadic_diagnostic: every solve failed");
    for (std::size_t b = 0; b < reference->blocks.size(); ++b) {
        const DyadicBlock& ref = reference->blocks[b];
        // outer-level means, so the standard error reflects design variability
        std::vector<double> weighted, delta, dir;
        for (const auto& per_outer : profiles) {
            if (per_outer.empty())
                continue;
            std::vector<double> w_o, d_o, r_o;
            for (const auto& prof : per_outer) {
                w_o.push_back(prof.blocks[b].weighted_l2);
                d_o.push_back(prof.blocks[b].delta);
                r_o.push_back(prof.blocks[b].direction_l2);
            }
            weighted.push_back(pairwise_sum(w_o) / double(w_o.size()));
            delta.push_back(pairwise_sum(d_o) / double(d_o.size()));
            dir.push_back(pairwise_sum(r_o) / double(r_o.size()));
        }
        const Estimate e = summarize(weighted);
        Cells c = base_row(cfg, double(ref.k), e.mean, e.std_error, weighted.size());
        put(c, "n", n);
        put(c, "d", d);
        put(c, "delta_mean", pairwise_sum(delta) / double(delta.size()));
        put(c, "direction_l2_mean", pairwise_sum(dir) / double(dir.size()));
        put(c, "predicted_bound", ref.predicted_bound);
        put(c, "ratio_to_bound", e.mean / ref.predicted_bound);
        put(c, "range_tag", to_string(ref.range_tag));
        put(c, "range_boundary", reference->range_boundary);
        out.rows.push_back(std::move(c));
    }
    out.extras["regime"] = to_string(regime);
    return out;
}

ScenarioOutput run_complexity_scan(const ExperimentConfig& cfg) {
    ScenarioOutput out;
    out.extra_columns = {"n",
                         "d",
                         "M",
                         "M_stderr",
                         "Mstar",
                         "Mstar_stderr",
                         "Ms",
                         "Mstar_s",
                         "inradius_inv",
                         "gaussian_complexity",
                         "rademacher_complexity",
                         "R_MMstar",
                         "R_MMstar_stderr",
                         "R_bMstar",
                         "R_bMstar_stderr",
                         "failures"};
    const McOptions mc = mc_options(cfg);
    std::size_t index = 0;
    for (std::size_t n : cfg.n_grid) {
        for (std::size_t d : cfg.d_grid) {
            if (n > d)
                continue;
            const std::size_t idx = index++;
            try {
                const Design X = sample_design(design_for(cfg, n, d), StreamKey(cfg.seed, StreamRole::design, idx));
                const NormSpec norm = NormSpec::lp(cfg.p, d);
                const ComplexityReport r = complexity_ratios(X, norm, cfg.outer, cfg.multistarts,
                                                             StreamKey(cfg.seed, StreamRole::auxiliary, idx), mc);
                Cells c = base_row(cfg, double(d), r.R_MMstar_spherical, r.R_MMstar_spherical_stderr, r.samples_used);
                put(c, "n", n);
                put(c, "d", d);
                put(c, "M", r.M_mean);
                put(c, "M_stderr", r.M_stderr);
                put(c, "Mstar", r.Mstar_mean);
                put(c, "Mstar_stderr", r.Mstar_stderr);
                put(c, "Ms", r.Ms_mean);
                put(c, "Mstar_s", r.Mstar_s_mean);
                put(c, "inradius_inv", r.inradius_inv);
                put(c, "gaussian_complexity", r.gaussian_complexity);
                put(c, "rademacher_complexity", r.rademacher_complexity);
                put(c, "R_MMstar", r.R_MMstar);
                put(c, "R_MMstar_stderr", r.R_MMstar_stderr);
                put(c, "R_bMstar", r.R_bMstar);
                put(c, "R_bMstar_stderr", r.R_bMstar_stderr);
                put(c, "failures", r.failures);
                out.rows.push_back(std::move(c));
            } catch (const EstimatorError& e) {
                Cells c = base_row(cfg, double(d), kNaN, kNaN, 0);
                put(c, "n", n);
                put(c, "d", d);
                put(c, "status", std::string("aborted"));
                out.rows.push_back(std::move(c));
                out.aborted = true;
                out.abort_reason = e.what();
                return out;
            }
        }
    }
    if (out.rows.empty())
        throw ConfigError("complexity_scan has no (n, d) pair with n <= d");
    return out;
}

ScenarioOutput run_inductive_bias(const ExperimentConfig& cfg) {
    ScenarioOutput out;
    out.extra_columns = {"n", "d", "d_over_n", "noise_norm_mean", "noise_norm_stderr", "signal_norm", "in_regime"};
    if (cfg.truth_support.empty())
        throw ConfigError("inductive_bias_scan needs a nonzero truth");
    const std::size_t n = cfg.n_grid.front();
    const McOptions mc = mc_options(cfg);
    for_each_point(out, cfg, [&](std::size_t g, std::size_t d) {
        note_regime(out, n, d);
        const NormSpec norm = NormSpec::lp(cfg.p, d);
        const GroundTruth truth = truth_for(cfg, d, norm);
        const Design X = sample_design(design_for(cfg, n, d), StreamKey(cfg.seed, StreamRole::design, g));
        const InductiveBias ib = check_inductive_bias(X, norm, truth.w_star, cfg.outer * cfg.inner,
                                                      StreamKey(cfg.seed, StreamRole::noise, g), mc);
        const double se = ib.noise_norm_mean > 0 ? ib.ratio * ib.noise_norm_stderr / ib.noise_norm_mean : 0.0;
        Cells c = base_row(cfg, double(d), ib.ratio, se, cfg.outer * cfg.inner);
        put(c, "n", n);
        put(c, "d", d);
        put(c, "d_over_n", double(d) / double(n));
        put(c, "noise_norm_mean", ib.noise_norm_mean);
        put(c, "noise_norm_stderr", ib.noise_norm_stderr);
        put(c, "signal_norm", ib.signal_norm);
        put(c, "in_regime", std::size_t(in_regime(n, d)));
        out.rows.push_back(std::move(c));
    });
    return out;
}

std::optional<double> predicted_slope_for(Scenario s, double p) {
    switch (s) {
    case Scenario::t2_rate:
    case Scenario::variance_decay:
        return -1.0;
    case Scenario::t1_rate:
        return -p;
    case Scenario::linf_profile:
    case Scenario::anderson_scan:
        return 0.0;
    case Scenario::dyadic_diagnostic:
        return 0.5;
    default:
        return std::nullopt;
    }
}

CsvTable assemble_table(const ExperimentConfig& cfg, const ScenarioOutput& out) {
    CsvTable t;
    t.header = {"scenario", "grid_value", "estimate", "stderr", "replicates", "seed", "status"};
    t.header.insert(t.header.end(), out.extra_columns.begin(), out.extra_columns.end());
    t.header.insert(t.header.end(), {"p", "predicted_slope", "tolerance", "envelope_factor"});
    const auto predicted = predicted_slope_for(cfg.scenario, cfg.p);
    for (Cells c : out.rows) {
        put(c, "p", cfg.p);
        put(c, "predicted_slope", predicted ? *predicted : kNaN);
        put(c, "tolerance", cfg.resolved_tolerance());
        put(c, "envelope_factor", cfg.resolved_envelope());
        std::vector<std::string> cells;
        for (const auto& col : t.header) {
            const auto it = c.find(col);
            cells.push_back(it == c.end() ? "nan" : it->second);
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json verdict_json(const Verdict& v) {
    return {{"pass", v.pass},
            {"rule", v.rule},
            {"slope_error", optional_number(v.slope_error)},
            {"worst_ratio", optional_number(v.worst_ratio)}};
}

void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot write " + path.string());
    f << data;
    if (!f)
        throw IoError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

DerivedVerdict derive_verdict(const CsvTable& rows) {
    if (rows.rows.empty())
        throw IoError("rows table is empty");
    DerivedVerdict dv;
    dv.scenario = scenario_from_string(rows.text(0, "scenario"));
    const double predicted = rows.number(0, "predicted_slope");
    if (!std::isnan(predicted))
        dv.predicted_slope = predicted;
    const double tolerance = rows.number(0, "tolerance");
    const double envelope = rows.number(0, "envelope_factor");

    bool aborted = false;
    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < rows.rows.size(); ++i) {
        if (rows.text(i, "status") == "ok")
            ok.push_back(i);
        else
            aborted = true;
    }
    auto est = [&](std::size_t i) { return rows.number(i, "estimate"); };
    auto se = [&](std::size_t i) { return rows.number(i, "stderr"); };
    auto gv = [&](std::size_t i) { return rows.number(i, "grid_value"); };

    if (ok.size() >= 3) {
        std::vector<SlopeRow> sr;
        for (std::size_t i : ok)
            sr.push_back({gv(i), est(i), log_weight(est(i), se(i))});
        try {
            dv.fit = fit_loglog_slope(sr);
        } catch (const EstimatorError&) {
            dv.fit.reset();
        }
    }

    Verdict& v = dv.verdict;
    if (aborted) {
        v.pass = false;
        v.rule = "run aborted before completing the grid";
        return dv;
    }
    std::ostringstream rule;
    switch (dv.scenario) {
    case Scenario::t2_rate:
    case Scenario::t1_rate:
    case Scenario::variance_decay:
        rule << "|slope - " << predicted << "| <= " << tolerance;
        if (dv.fit) {
            v.slope_error = std::abs(dv.fit->slope - predicted);
            v.pass = *v.slope_error <= tolerance;
        } else {
            rule << " (slope not fittable)";
        }
        break;
    case Scenario::linf_profile: {
        rule << "growth per 4x increase in d <= " << envelope;
        std::vector<std::size_t> order = ok;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return gv(a) < gv(b); });
        double worst = 0.0;
        for (std::size_t k = 1; k < order.size(); ++k) {
            const double span = std::log(gv(order[k]) / gv(order[k - 1]));
            const double growth = std::pow(est(order[k]) / est(order[k - 1]), std::log(4.0) / span);
            worst = std::max(worst, growth);
        }
        v.worst_ratio = worst;
        v.pass = order.size() >= 2 && worst <= envelope;
        break;
    }
    case Scenario::anderson_scan: {
        rule << "gap >= -3 stderr everywhere and max/min ratio <= " << envelope;
        bool nonneg = true;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i : ok) {
            nonneg = nonneg && rows.number(i, "gap") >= -3.0 * rows.number(i, "gap_stderr");
            lo = std::min(lo, est(i));
            hi = std::max(hi, est(i));
        }
        v.worst_ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        v.pass = nonneg && *v.worst_ratio <= envelope;
        break;
    }
    case Scenario::dyadic_diagnostic: {
        rule << "estimate <= " << envelope << " x predicted_bound for every k";
        double worst = 0.0;
        for (std::size_t i : ok)
            worst = std::max(worst, est(i) / rows.number(i, "predicted_bound"));
        v.worst_ratio = worst;
        v.pass = worst <= envelope;
        break;
    }
    case Scenario::complexity_scan: {
        rule << "spherical R_MM* >= 1 - 3 stderr for every (n, d)";
        double worst = std::numeric_limits<double>::infinity();
        bool pass = true;
        for (std::size_t i : ok) {
            worst = std::min(worst, est(i));
            pass = pass && est(i) >= 1.0 - 3.0 * se(i);
        }
        v.worst_ratio = worst;
        v.pass = pass;
        break;
    }
    case Scenario::inductive_bias_scan: {
        rule << "noise-to-signal norm ratio > 1 for every d";
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i : ok)
            worst = std::min(worst, est(i));
        v.worst_ratio = worst;
        v.pass = worst > 1.0;
        break;
    }
    }
    v.rule = rule.str();
    return dv;
}

RateReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string());

    ScenarioOutput out;
    switch (config.scenario) {
    case Scenario::t2_rate:
    case Scenario::t1_rate:
        out = run_rate_decomposition(config);
        break;
    case Scenario::linf_profile:
        out = run_linf_profile(config);
        break;
    case Scenario::variance_decay:
        out = run_variance_decay(config);
        break;
    case Scenario::anderson_scan:
        out = run_anderson_scan(config);
        break;
    case Scenario::dyadic_diagnostic:
        out = run_dyadic(config);
        break;
    case Scenario::complexity_scan:
        out = run_complexity_scan(config);
        break;
    case Scenario::inductive_bias_scan:
        out = run_inductive_bias(config);
        break;
    }

    RateReport rep;
    rep.scenario = config.scenario;
    rep.rows = assemble_table(config, out);
    rep.aborted = out.aborted;
    rep.abort_reason = out.abort_reason;
    rep.regime_warnings = out.regime_warnings;
    const std::string csv = format_table_csv(rep.rows);
    write_file(dir / "rows.csv", csv);
    rep.rows_digest = sha256_hex(csv);

    const DerivedVerdict dv = derive_verdict(rep.rows);
    rep.fit = dv.fit;
    rep.predicted_slope = dv.predicted_slope;
    rep.verdict = dv.verdict;
    rep.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json s;
    s["config"] = config.to_json();
    s["rows_digest"] = rep.rows_digest;
    s["slope"] = rep.fit ? json(rep.fit->slope) : json(nullptr);
    s["intercept"] = rep.fit ? json(rep.fit->intercept) : json(nullptr);
    s["r_squared"] = rep.fit ? json(rep.fit->r_squared) : json(nullptr);
    s["predicted_slope"] = optional_number(rep.predicted_slope);
    s["verdict"] = verdict_json(rep.verdict);
    s["wall_time_seconds"] = rep.wall_time_seconds;
    s["regime"] = {{"condition", "d >= 16 n log d"},
                   {"satisfied", rep.regime_warnings.empty()},
                   {"violations", rep.regime_warnings}};
    s["aborted"] = rep.aborted;
    if (rep.aborted)
        s["abort_reason"] = rep.abort_reason;
    if (!out.extras.empty())
        s["extras"] = out.extras;
    rep.summary = s;
    write_file(dir / "summary.json", s.dump(2) + "\n");
    return rep;
}

json report_directory(const std::string& dir) {
    const std::filesystem::path root(dir);
    const std::filesystem::path rows_path = root / "rows.csv";
    const CsvTable rows = read_table_csv(rows_path.string());
    const DerivedVerdict dv = derive_verdict(rows);
    const std::string digest = sha256_hex(read_file(rows_path));

    json r;
    r["scenario"] = to_string(dv.scenario);
    r["rows"] = rows.rows.size();
    r["rows_digest"] = digest;
    r["slope"] = dv.fit ? json(dv.fit->slope) : json(nullptr);
    r["intercept"] = dv.fit ? json(dv.fit->intercept) : json(nullptr);
    r["r_squared"] = dv.fit ? json(dv.fit->r_squared) : json(nullptr);
    r["predicted_slope"] = optional_number(dv.predicted_slope);
    r["verdict"] = verdict_json(dv.verdict);

    const std::filesystem::path summary_path = root / "summary.json";
    if (std::filesystem::exists(summary_path)) {
        json stored;
        try {
            stored = json::parse(read_file(summary_path));
        } catch (const json::parse_error& e) {
            throw IoError("summary.json is not valid JSON: " + std::string(e.what()));
        }
        r["digest_matches_summary"] = stored.value("rows_digest", std::string()) == digest;
        r["verdict_matches_summary"] =
            stored.contains("verdict") && stored["verdict"].value("pass", !dv.verdict.pass) == dv.verdict.pass;
    }
    return r;
}

} // namespace mni
