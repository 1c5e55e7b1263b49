#include "mni/geometry.hpp"

#include "mni/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mni {

namespace {

StreamKey sample_key(const StreamKey& key, std::size_t i) {
    return key.nested(key.replicate_index, i);
}

void require_design_norm(const Design& design, const NormSpec& norm) {
    if (norm.dimension() != static_cast<std::size_t>(design.matrix.cols()))
        throw DimensionError("norm dimension does not match the number of design columns");
}

struct GaugeSamples {
    std::vector<double> values;     // ||xi||_{F_n}
    std::vector<double> normalized; // ||xi||_{F_n} / ||xi||_2
    std::size_t failures = 0;
};

GaugeSamples sample_gauges(const Design& design, const NormSpec& norm, std::size_t m, const StreamKey& key,
                           const McOptions& opts) {
    if (m < 2)
        throw ConfigError("Monte Carlo estimators need at least 2 samples");
    require_design_norm(design, norm);
    const MinNormSolver solver(design.matrix, norm, opts.solver);
    const auto n = static_cast<std::size_t>(design.matrix.rows());
    std::vector<double> values(m), normalized(m);
    std::vector<char> ok(m, 0);
    parallel_for(m, opts.workers, [&](std::size_t i) {
        const Eigen::VectorXd xi = sample_gaussian_vector(n, sample_key(key, i));
        const MniSolution s = solver.solve(xi);
        ok[i] = s.ok();
        values[i] = s.norm_value;
        normalized[i] = s.norm_value / xi.norm();
    });
    GaugeSamples out;
    for (std::size_t i = 0; i < m; ++i) {
        if (ok[i]) {
            out.values.push_back(values[i]);
            out.normalized.push_back(normalized[i]);
        } else {
            ++out.failures;
        }
    }
    if (double(out.failures) > opts.max_failure_rate * double(m))
        throw EstimatorError("solver failure rate " + std::to_string(out.failures) + "/" + std::to_string(m) +
                             " exceeds the budget");
    return out;
}

std::vector<double> support_samples(const Design& design, const NormSpec& norm, std::size_t m, const StreamKey& key,
                                     bool rademacher, bool spherical) {
    if (m < 2)
        throw ConfigError("Monte Carlo estimators need at least 2 samples");
    require_design_norm(design, norm);
    const auto n = static_cast<std::size_t>(design.matrix.rows());
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Eigen::VectorXd xi =
            rademacher ? sample_sign_vector(n, sample_key(key, i)) : sample_gaussian_vector(n, sample_key(key, i));
        const double h = eval_dual_norm(norm, design.matrix.transpose() * xi);
        out[i] = spherical ? h / xi.norm() : h;
    }
    return out;
}

double product_stderr(double a, double sa, double b, double sb) {
    return std::sqrt(b * b * sa * sa + a * a * sb * sb);
}

double log_ratio_or_one(double num, double den) {
    const double r = num / den;
    return r > std::exp(1.0) ? std::log(r) : 1.0;
}

} // namespace

Estimate estimate_M(const Design& design, const NormSpec& norm, std::size_t m_samples, const StreamKey& key,
                    const McOptions& opts) {
    GaugeSamples g = sample_gauges(design, norm, m_samples, key, opts);
    Estimate e = summarize(g.values);
    e.failures = g.failures;
    return e;
}

Estimate estimate_M_star(const Design& design, const NormSpec& norm, std::size_t m_samples, const StreamKey& key) {
    return summarize(support_samples(design, norm, m_samples, key, false, false));
}

Estimate estimate_rademacher_M_star(const Design& design, const NormSpec& norm, std::size_t m_samples,
                                    const StreamKey& key) {
    return summarize(support_samples(design, norm, m_samples, key, true, false));
}

InradiusEstimate estimate_inradius(const Design& design, const NormSpec& norm, std::size_t multistarts,
                                   const StreamKey& key) {
    if (multistarts < 1)
        throw ConfigError("estimate_inradius needs at least one start");
    require_design_norm(design, norm);
    const Eigen::MatrixXd& X = design.matrix;
    const auto n = static_cast<std::size_t>(X.rows());
    auto value_at = [&](const Eigen::VectorXd& u) { return eval_dual_norm(norm, X.transpose() * u); };

    InradiusEstimate best;
    best.value = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < multistarts; ++s) {
        Eigen::VectorXd u = sample_gaussian_vector(n, sample_key(key, s)).normalized();
        double f = value_at(u);
        double step = 1.0;
        for (int it = 0; it < 500 && n > 1; ++it) {
            const Eigen::VectorXd z = X.transpose() * u;
            // gradient of ||z||_dual is the unit witness in the primal norm
            const Eigen::VectorXd grad = X * dual_witness(norm, z);
            const Eigen::VectorXd tangent = grad - grad.dot(u) * u;
            const double tnorm = tangent.norm();
            if (tnorm <= 1e-12 * std::max(1.0, grad.norm()))
                break;
            bool improved = false;
            step = std::min(step * 2.0, 1.0);
            for (int ls = 0; ls < 50; ++ls) {
                const Eigen::VectorXd candidate = (u - step * tangent / tnorm).normalized();
                const double fc = value_at(candidate);
                if (fc < f - 1e-4 * step * tnorm) {
                    u = candidate;
                    f = fc;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!improved)
                break;
        }
        if (f < best.value) {
            best.value = f;
            best.direction = u;
        }
    }
    return best;
}

ComplexityReport complexity_ratios(const Design& design, const NormSpec& norm, std::size_t m_samples,
                                   std::size_t multistarts, const StreamKey& key, const McOptions& opts) {
    const double n = static_cast<double>(design.matrix.rows());
    const StreamKey gauss_key = key;
    GaugeSamples g = sample_gauges(design, norm, m_samples, gauss_key, opts);
    const Estimate M = summarize(g.values);
    const Estimate Ms = summarize(g.normalized);
    const Estimate Mstar = summarize(support_samples(design, norm, m_samples, gauss_key, false, false));
    const Estimate Mstar_s = summarize(support_samples(design, norm, m_samples, gauss_key, false, true));
    const Estimate rad = summarize(
        support_samples(design, norm, m_samples, gauss_key.with_role(StreamRole::signs), true, false));
    const InradiusEstimate inr =
        estimate_inradius(design, norm, multistarts, gauss_key.with_role(StreamRole::multistart));

    ComplexityReport r;
    r.M_mean = M.mean;
    r.M_stderr = M.std_error;
    r.Mstar_mean = Mstar.mean;
    r.Mstar_stderr = Mstar.std_error;
    r.Ms_mean = Ms.mean;
    r.Ms_stderr = Ms.std_error;
    r.Mstar_s_mean = Mstar_s.mean;
    r.Mstar_s_stderr = Mstar_s.std_error;
    r.inradius_inv = 1.0 / inr.value;
    r.gaussian_complexity = Mstar.mean / n;
    r.rademacher_complexity = rad.mean / n;
    r.R_MMstar = M.mean * Mstar.mean / n;
    r.R_MMstar_stderr = product_stderr(M.mean, M.std_error, Mstar.mean, Mstar.std_error) / n;
    r.R_MMstar_spherical = Ms.mean * Mstar_s.mean;
    r.R_MMstar_spherical_stderr = product_stderr(Ms.mean, Ms.std_error, Mstar_s.mean, Mstar_s.std_error);
    r.R_bMstar = r.inradius_inv * Mstar_s.mean;
    r.R_bMstar_stderr = r.inradius_inv * Mstar_s.std_error;
    r.samples_used = g.values.size();
    r.failures = g.failures;
    return r;
}

double lambda_k(std::size_t d, std::size_t k, double p) {
    if (d < 1 || k < 1 || k > d)
        throw ConfigError("lambda_k requires 1 <= k <= d");
    if (!(p > 1.0 && p <= 2.0))
        throw ConfigError("lambda_k requires p in (1, 2]");
    const double dd = double(d), kk = double(k);
    const double exponent = 1.0 / p - 0.5;
    if (kk < std::log(dd))
        return std::pow(dd, exponent);
    return std::pow(dd * std::log(std::exp(1.0) * dd / kk) / kk, exponent);
}

std::string to_string(Regime r) { return r == Regime::gaussian ? "gaussian" : "subgaussian"; }

Regime regime_from_string(const std::string& s) {
    if (s == "gaussian") return Regime::gaussian;
    if (s == "subgaussian") return Regime::subgaussian;
    throw ConfigError("unknown regime '" + s + "'");
}

double predicted_delta_bound(std::size_t d, std::size_t k, double p, Regime regime) {
    if (d < 1 || k < 1 || k > d)
        throw ConfigError("predicted_delta_bound requires 1 <= k <= d");
    if (!(p > 1.0 && p <= 2.0))
        throw ConfigError("predicted_delta_bound requires p in (1, 2]");
    const double dd = double(d), kk = double(k);
    const double e = std::exp(1.0);
    double inner = std::log(e * dd / kk);
    if (regime == Regime::gaussian)
        inner /= std::log(std::log(e * e * dd));
    return std::sqrt(kk / dd) * std::pow(inner, 1.0 / (2.0 * (p - 1.0)));
}

Eigen::VectorXd top_k(const Eigen::VectorXd& w, std::size_t k) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(w.size()));
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = static_cast<Eigen::Index>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(w[a]) > std::abs(w[b]); });
    Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i)
        out[order[i]] = w[order[i]];
    return out;
}

std::string to_string(RangeTag t) {
    switch (t) {
    case RangeTag::R1: return "R1";
    case RangeTag::R2: return "R2";
    case RangeTag::head: return "head";
    }
    return "?";
}

Eigen::VectorXd DyadicProfile::reassemble() const {
    Eigen::VectorXd w = head;
    for (const DyadicBlock& b : blocks)
        w += b.delta * b.direction;
    return w;
}

DyadicProfile dyadic_profile(const Eigen::VectorXd& w, double p, std::size_t n_context, Regime regime) {
    if (w.size() == 0 || w.cwiseAbs().maxCoeff() == 0.0)
        throw ConfigError("dyadic_profile of the zero vector");
    if (n_context < 1)
        throw ConfigError("dyadic_profile needs n >= 1");
    const auto d = static_cast<std::size_t>(w.size());
    const double dd = double(d);

    std::vector<Eigen::Index> order(d);
    for (std::size_t i = 0; i < d; ++i)
        order[i] = static_cast<Eigen::Index>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(w[a]) > std::abs(w[b]); });

    DyadicProfile prof;
    const auto limit = static_cast<std::size_t>(std::floor(dd / std::max(std::log(dd), 1.0)));
    prof.k_max = 1;
    while (prof.k_max * 2 <= std::max<std::size_t>(limit, 1))
        prof.k_max *= 2;
    prof.range_boundary = static_cast<std::size_t>(std::floor(double(n_context) / log_ratio_or_one(dd, double(n_context))));

    std::size_t start = 0;
    for (std::size_t k = 1; k <= prof.k_max; k *= 2) {
        DyadicBlock b;
        b.k = k;
        Eigen::VectorXd block = Eigen::VectorXd::Zero(w.size());
        for (std::size_t r = start; r < k; ++r)
            block[order[r]] = w[order[r]];
        start = k;
        b.delta = lr_norm(block, p);
        b.direction = b.delta > 0.0 ? Eigen::VectorXd(block / b.delta) : block;
        b.direction_l2 = b.direction.norm();
        b.weighted_l2 = block.norm();
        b.range_tag = k <= prof.range_boundary ? RangeTag::R2 : RangeTag::R1;
        b.predicted_bound = predicted_delta_bound(d, k, p, regime);
        prof.blocks.push_back(std::move(b));
    }
    prof.head = Eigen::VectorXd::Zero(w.size());
    for (std::size_t r = start; r < d; ++r)
        prof.head[order[r]] = w[order[r]];
    const double head_norm = lr_norm(prof.head, p);
    prof.head_p_mass = std::pow(head_norm, p);
    return prof;
}

RStarEstimate estimate_r_star(const Design& design, const NormSpec& norm, std::size_t m_samples,
                              const StreamKey& key, const McOptions& opts, double factor) {
    if (!(factor > 0.0 && factor <= 1.0))
        throw ConfigError("r_star factor must lie in (0, 1]");
    if (m_samples < 2)
        throw ConfigError("Monte Carlo estimators need at least 2 samples");
    require_design_norm(design, norm);
    const MinNormSolver solver(design.matrix, norm, opts.solver);
    const auto n = static_cast<std::size_t>(design.matrix.rows());

    std::vector<Eigen::VectorXd> xis(m_samples);
    std::vector<double> norms(m_samples);
    double r_inactive = 0.0;
    for (std::size_t i = 0; i < m_samples; ++i) {
        xis[i] = sample_gaussian_vector(n, sample_key(key, i));
        const MniSolution s = solver.solve(xis[i]);
        if (!s.ok())
            throw EstimatorError("minimum-norm solve failed while estimating r_star");
        norms[i] = s.norm_value;
        r_inactive = std::max(r_inactive, s.l2_value / s.norm_value);
    }
    RStarEstimate out;
    out.M_mean = pairwise_sum(norms) / double(m_samples);
    const double target = out.M_mean / factor;

    std::vector<double> gauges(m_samples);
    auto mean_gauge = [&](double r) {
        parallel_for(m_samples, opts.workers,
                     [&](std::size_t i) { gauges[i] = solver.gauge_projected_truncated(xis[i], r); });
        return pairwise_sum(gauges) / double(m_samples);
    };

    // Truncation is inactive at r_inactive, so the condition holds there.
    double hi = r_inactive;
    double lo = 0.5 * hi;
    double g_lo = mean_gauge(lo);
    int halvings = 0;
    while (g_lo <= target) {
        hi = lo;
        lo *= 0.5;
        g_lo = mean_gauge(lo);
        if (++halvings > 60)
            throw EstimatorError("r_star bisection failed to bracket the crossing");
    }
    double g_hi = mean_gauge(hi);
    while (hi / lo > 1.0 + 1e-4) {
        const double mid = std::sqrt(lo * hi);
        const double g = mean_gauge(mid);
        if (g <= target) {
            hi = mid;
            g_hi = g;
        } else {
            lo = mid;
        }
    }
    out.r_star = hi;
    out.truncated_mean = g_hi;
    return out;
}

InductiveBias check_inductive_bias(const Design& design, const NormSpec& norm, const Eigen::VectorXd& w_star,
                                   std::size_t m_samples, const StreamKey& key, const McOptions& opts) {
    require_design_norm(design, norm);
    if (w_star.size() != design.matrix.cols())
        throw DimensionError("w_star length does not match the design");
    const Estimate noise = estimate_M(design, norm, m_samples, key, opts);
    const MinNormSolver solver(design.matrix, norm, opts.solver);
    const MniSolution signal = solver.solve(design.matrix * w_star);
    if (!signal.ok())
        throw EstimatorError("minimum-norm solve of the signal failed");
    InductiveBias out;
    out.noise_norm_mean = noise.mean;
    out.noise_norm_stderr = noise.std_error;
    out.signal_norm = signal.norm_value;
    out.ratio = noise.mean / signal.norm_value;
    return out;
}

} // namespace mni
