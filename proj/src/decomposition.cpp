#include "mni/decomposition.hpp"

#include "mni/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mni {

namespace {

void require_norm_bounds(const GroundTruth& t) {
    if (t.p_norm < 0.5 || t.p_norm > 2.0 || t.l2_norm < 0.5 || t.l2_norm > 2.0)
        throw ConfigError("ground truth norms must lie in [0.5, 2] (got p-norm " + std::to_string(t.p_norm) +
                          ", l2 " + std::to_string(t.l2_norm) + ")");
}

DesignSource source_from_spec(const DesignSpec& spec, const StreamKey& key) {
    spec.validate();
    return [spec, key](std::uint64_t outer) {
        return sample_design(spec, StreamKey(key.seed, StreamRole::design, outer)).matrix;
    };
}

// Sequential Welford accumulator over vectors; deterministic in insertion order.
struct VectorMoments {
    Eigen::VectorXd mean;
    Eigen::VectorXd m2;
    std::size_t count = 0;

    explicit VectorMoments(Eigen::Index dim) : mean(Eigen::VectorXd::Zero(dim)), m2(Eigen::VectorXd::Zero(dim)) {}

    void add(const Eigen::VectorXd& x) {
        ++count;
        const Eigen::VectorXd delta = x - mean;
        mean += delta / double(count);
        m2.array() += delta.array() * (x - mean).array();
    }

    Eigen::VectorXd variance() const {
        return count > 1 ? Eigen::VectorXd(m2 / double(count - 1)) : Eigen::VectorXd::Zero(mean.size());
    }
};

struct OuterResult {
    double E1 = 0.0, E2 = 0.0, T2 = 0.0, MSE = 0.0;
    std::size_t failures = 0;
    bool valid = false;
};

OuterResult decompose_one(const Eigen::MatrixXd& X, const NormSpec& norm, const GroundTruth& truth,
                          const NoiseSpec& noise, std::size_t outer, std::size_t inner_m, const StreamKey& key,
                          const SolverOptions& solver_opts) {
    OuterResult r;
    const MinNormSolver solver(X, norm, solver_opts);
    const auto n = static_cast<std::size_t>(X.rows());
    const Eigen::VectorXd clean = X * truth.w_star;
    const double star_sq = truth.w_star.squaredNorm();

    VectorMoments moments(X.cols());
    std::vector<double> coefficients;
    std::vector<double> sq_errors;
    coefficients.reserve(inner_m);
    sq_errors.reserve(inner_m);
    for (std::size_t j = 0; j < inner_m; ++j) {
        const Eigen::VectorXd xi = sample_noise(noise, n, StreamKey(key.seed, StreamRole::noise).nested(outer, j));
        const MniSolution s = solver.solve(clean + xi);
        if (!s.ok()) {
            ++r.failures;
            continue;
        }
        moments.add(s.weights);
        sq_errors.push_back((s.weights - truth.w_star).squaredNorm());
        if (!truth.is_zero())
            coefficients.push_back(s.weights.dot(truth.w_star) / star_sq);
    }
    const std::size_t m = moments.count;
    if (m < 2)
        return r;

    const double total_var = moments.variance().sum();
    r.T2 = total_var;
    r.MSE = pairwise_sum(sq_errors) / double(m);
    // The plug-in conditional mean carries Var/m of extra energy; remove it
    // component-wise so that E1 + E2 + T2 reproduces the direct MSE average.
    if (truth.is_zero()) {
        r.E1 = 0.0;
        r.E2 = moments.mean.squaredNorm() - total_var / double(m);
    } else {
        const Projection proj = project_onto_signal(moments.mean, truth.w_star);
        const double coef_var = sample_variance(coefficients);
        const double parallel_var = coef_var * star_sq;
        r.E1 = (proj.coefficient - 1.0) * (proj.coefficient - 1.0) * star_sq - parallel_var / double(m);
        r.E2 = proj.orthogonal.squaredNorm() - (total_var - parallel_var) / double(m);
    }
    r.valid = true;
    return r;
}

} // namespace

GroundTruth GroundTruth::make(const Eigen::VectorXd& w_star, const NormSpec& norm) {
    if (static_cast<std::size_t>(w_star.size()) != norm.dimension())
        throw DimensionError("w_star length does not match the norm dimension");
    GroundTruth t;
    t.w_star = w_star;
    t.sparsity = static_cast<std::size_t>((w_star.array() != 0.0).count());
    t.p_norm = eval_norm(norm, w_star);
    t.l2_norm = w_star.norm();
    require_norm_bounds(t);
    return t;
}

GroundTruth GroundTruth::sparse(std::size_t d, const std::vector<std::size_t>& support,
                                const std::vector<double>& values, const NormSpec& norm) {
    if (support.size() != values.size())
        throw ConfigError("truth support and values differ in length");
    if (support.empty())
        return zero(d);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i] >= d)
            throw ConfigError("truth support index " + std::to_string(support[i]) + " out of range");
        w[static_cast<Eigen::Index>(support[i])] = values[i];
    }
    return make(w, norm);
}

GroundTruth GroundTruth::zero(std::size_t d) {
    GroundTruth t;
    t.w_star = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    return t;
}

Projection project_onto_signal(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star) {
    if (w.size() != w_star.size())
        throw DimensionError("projection operands differ in length");
    const double denom = w_star.squaredNorm();
    if (denom == 0.0)
        throw ConfigError("cannot project onto the zero signal");
    Projection p;
    p.coefficient = w.dot(w_star) / denom;
    p.parallel = p.coefficient * w_star;
    p.orthogonal = w - p.parallel;
    // one correction step keeps <orthogonal, w_star> at rounding level
    p.orthogonal -= (p.orthogonal.dot(w_star) / denom) * w_star;
    return p;
}

DecompositionReport estimate_decomposition(const DesignSpec& design_spec, const NormSpec& norm,
                                           const GroundTruth& truth, const NoiseSpec& noise, std::size_t outer_m,
                                           std::size_t inner_m, const StreamKey& key, const McOptions& opts) {
    return estimate_decomposition(source_from_spec(design_spec, key), norm, truth, noise, outer_m, inner_m, key,
                                  opts);
}

DecompositionReport estimate_decomposition(const DesignSource& designs, const NormSpec& norm,
                                           const GroundTruth& truth, const NoiseSpec& noise, std::size_t outer_m,
                                           std::size_t inner_m, const StreamKey& key, const McOptions& opts) {
    if (outer_m < 2 || inner_m < 2)
        throw ConfigError("decomposition needs outer_m >= 2 and inner_m >= 2");
    noise.validate();
    if (static_cast<std::size_t>(truth.w_star.size()) != norm.dimension())
        throw DimensionError("truth dimension does not match the norm");

    std::vector<OuterResult> results(outer_m);
    parallel_for(outer_m, opts.workers, [&](std::size_t o) {
        const Eigen::MatrixXd X = designs(o);
        results[o] = decompose_one(X, norm, truth, noise, o, inner_m, key, opts.solver);
    });

    DecompositionReport rep;
    rep.inner_samples = inner_m;
    std::vector<double> e1, e2, t1, t2, mse;
    for (const OuterResult& r : results) {
        rep.failures += r.failures;
        if (!r.valid)
            continue;
        e1.push_back(r.E1);
        e2.push_back(r.E2);
        t1.push_back(r.E1 + r.E2);
        t2.push_back(r.T2);
        mse.push_back(r.MSE);
    }
    const double total = double(outer_m * inner_m);
    if (double(rep.failures) > opts.max_failure_rate * total || e1.size() < 2)
        throw EstimatorError("decomposition solver failures " + std::to_string(rep.failures) + " of " +
                             std::to_string(outer_m * inner_m) + " exceed the budget");
    rep.outer_samples = e1.size();
    rep.E1 = summarize(e1);
    rep.E2 = summarize(e2);
    rep.T1 = summarize(t1);
    rep.T2 = summarize(t2);
    rep.MSE = summarize(mse);
    rep.consistency_residual = std::abs(rep.MSE.mean - (rep.E1.mean + rep.E2.mean + rep.T2.mean));
    rep.propagated_stderr = std::sqrt(rep.MSE.std_error * rep.MSE.std_error + rep.T1.std_error * rep.T1.std_error +
                                      rep.T2.std_error * rep.T2.std_error);
    return rep;
}

HermiteCoefficients estimate_hermite_map(const NoiseMap& map, std::size_t n, std::size_t d, std::size_t inner_m,
                                         const StreamKey& key, const Eigen::MatrixXd& design, std::size_t workers) {
    if (inner_m < 2)
        throw ConfigError("Hermite estimation needs inner_m >= 2");
    const bool track_residual = design.size() > 0;
    if (track_residual && (static_cast<std::size_t>(design.rows()) != n || static_cast<std::size_t>(design.cols()) != d))
        throw DimensionError("design shape does not match (n, d)");

    const auto nn = static_cast<Eigen::Index>(n);
    const auto dd = static_cast<Eigen::Index>(d);
    std::vector<VectorMoments> alpha_moments(n, VectorMoments(dd));
    std::vector<VectorMoments> image_moments(n, VectorMoments(nn));
    HermiteCoefficients out;

    // Samples are computed in parallel chunks and folded in index order.
    const std::size_t chunk = 256;
    std::vector<Eigen::MatrixXd> contributions;
    std::vector<char> ok;
    for (std::size_t start = 0; start < inner_m; start += chunk) {
        const std::size_t count = std::min(chunk, inner_m - start);
        contributions.assign(count, Eigen::MatrixXd());
        ok.assign(count, 1);
        parallel_for(count, workers, [&](std::size_t c) {
            const Eigen::VectorXd xi = sample_gaussian_vector(n, key.nested(key.replicate_index, start + c));
            Eigen::MatrixXd contrib(dd, nn);
            for (Eigen::Index i = 0; i < nn; ++i) {
                Eigen::VectorXd plus = xi, minus = xi;
                plus[i] = std::abs(xi[i]);
                minus[i] = -std::abs(xi[i]);
                const Eigen::VectorXd wp = map(plus);
                const Eigen::VectorXd wm = map(minus);
                if (wp.size() != dd || wm.size() != dd || !wp.allFinite() || !wm.allFinite()) {
                    ok[c] = 0;
                    return;
                }
                contrib.col(i) = 0.5 * std::abs(xi[i]) * (wp - wm);
            }
            contributions[c] = std::move(contrib);
        });
        for (std::size_t c = 0; c < count; ++c) {
            if (!ok[c]) {
                ++out.failures;
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto col = static_cast<Eigen::Index>(i);
                alpha_moments[i].add(contributions[c].col(col));
                if (track_residual)
                    image_moments[i].add(design * contributions[c].col(col));
            }
        }
    }
    if (double(out.failures) > 0.01 * double(inner_m))
        throw EstimatorError("Hermite estimation: too many failed map evaluations");

    out.inner_samples = inner_m - out.failures;
    out.alpha.resize(dd, nn);
    out.stderr_per_coordinate.resize(dd, nn);
    out.interpolation_stderr = Eigen::VectorXd::Zero(nn);
    const double m = double(out.inner_samples);
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        out.alpha.col(col) = alpha_moments[i].mean;
        out.stderr_per_coordinate.col(col) = (alpha_moments[i].variance() / m).cwiseSqrt();
        if (track_residual)
            out.interpolation_stderr[col] = std::sqrt(image_moments[i].variance().sum() / m);
    }
    return out;
}

HermiteCoefficients estimate_hermite(const Design& design, const NormSpec& norm, const GroundTruth& truth,
                                     std::size_t inner_m, const StreamKey& key, const McOptions& opts) {
    const Eigen::MatrixXd& X = design.matrix;
    if (static_cast<std::size_t>(truth.w_star.size()) != norm.dimension())
        throw DimensionError("truth dimension does not match the norm");
    const MinNormSolver solver(X, norm, opts.solver);
    const Eigen::VectorXd clean = X * truth.w_star;
    NoiseMap map = [&](const Eigen::VectorXd& xi) -> Eigen::VectorXd {
        const MniSolution s = solver.solve(clean + xi);
        if (!s.ok())
            return Eigen::VectorXd::Constant(X.cols(), std::numeric_limits<double>::quiet_NaN());
        return s.weights;
    };
    return estimate_hermite_map(map, static_cast<std::size_t>(X.rows()), static_cast<std::size_t>(X.cols()), inner_m,
                                key, X, opts.workers);
}

namespace {

PsiEstimate psi_from_source(const DesignSource& designs, const Eigen::VectorXd& v, const NormSpec& norm, double r,
                            std::size_t outer_m, const McOptions& opts) {
    if (!(r > 0.0))
        throw ConfigError("Psi radius must be positive");
    if (outer_m < 1)
        throw ConfigError("Psi needs at least one design draw");
    std::vector<double> values(outer_m);
    parallel_for(outer_m, opts.workers, [&](std::size_t o) {
        const MinNormSolver solver(designs(o), norm, opts.solver);
        const MniSolution s = solver.solve_min_l2_in_ball(v, r);
        values[o] = s.status == SolveStatus::infeasible ? std::numeric_limits<double>::infinity() : s.l2_value;
    });
    PsiEstimate out;
    out.samples = outer_m;
    out.infeasible = static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double x) { return std::isinf(x); }));
    if (2 * out.infeasible > outer_m)
        throw EstimatorError("Psi median undefined: " + std::to_string(out.infeasible) + " of " +
                             std::to_string(outer_m) + " designs cannot interpolate inside the ball");
    out.median = quantile(values, 0.5);
    out.lower_quartile = quantile(values, 0.25);
    out.upper_quartile = quantile(values, 0.75);
    return out;
}

ReverseEfronSteinResult reverse_es_impl(const DecompositionReport& report, const DesignSource& designs,
                                        const NormSpec& norm, const NoiseSpec& noise, std::size_t outer_m,
                                        const StreamKey& key, const McOptions& opts, ReverseEfronSteinConfig cfg) {
    const CurvatureConstants cc = curvature_constants(norm);
    // M_n over the joint law of (X, xi), one noise draw per design
    std::vector<double> gauges(outer_m);
    std::vector<char> ok(outer_m, 0);
    std::size_t n = 0;
    {
        const Eigen::MatrixXd X0 = designs(0);
        n = static_cast<std::size_t>(X0.rows());
    }
    parallel_for(outer_m, opts.workers, [&](std::size_t o) {
        const MinNormSolver solver(designs(o), norm, opts.solver);
        const Eigen::VectorXd xi = sample_noise(noise, n, StreamKey(key.seed, StreamRole::auxiliary, o));
        const MniSolution s = solver.solve(xi);
        ok[o] = s.ok();
        gauges[o] = s.norm_value;
    });
    std::vector<double> good;
    for (std::size_t o = 0; o < outer_m; ++o)
        if (ok[o])
            good.push_back(gauges[o]);
    if (good.size() < 2)
        throw EstimatorError("M_n estimate failed for the reverse Efron-Stein check");

    ReverseEfronSteinResult res;
    res.decomposition = report;
    res.lhs_T2 = report.T2.mean;
    res.lhs_T2_stderr = report.T2.std_error;
    res.M_n = pairwise_sum(good) / double(good.size());
    res.radius = cfg.constant_C * cc.kconvexity_upper * res.M_n / (cc.uc2_t * std::sqrt(double(n)));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    v[0] = noise.scale();
    const PsiEstimate psi = psi_from_source(designs, v, norm, res.radius, outer_m, opts);
    res.psi = psi.median;
    res.rhs_bound = double(n) * psi.median * psi.median;
    res.slack = res.lhs_T2 - cfg.tolerance_factor * res.rhs_bound;
    res.satisfied = res.slack >= 0.0;
    return res;
}

} // namespace

PsiEstimate estimate_psi(const DesignSpec& design_spec, const Eigen::VectorXd& v, const NormSpec& norm, double r,
                         std::size_t outer_m, const StreamKey& key, const McOptions& opts) {
    if (static_cast<std::size_t>(v.size()) != design_spec.n)
        throw DimensionError("Psi target length does not match n");
    return psi_from_source(source_from_spec(design_spec, key), v, norm, r, outer_m, opts);
}

ReverseEfronSteinResult reverse_efron_stein_check(const DesignSpec& design_spec, const NormSpec& norm,
                                                  const GroundTruth& truth, const NoiseSpec& noise,
                                                  std::size_t outer_m, std::size_t inner_m, const StreamKey& key,
                                                  const McOptions& opts, ReverseEfronSteinConfig cfg) {
    const DecompositionReport rep =
        estimate_decomposition(design_spec, norm, truth, noise, outer_m, inner_m, key, opts);
    return reverse_es_impl(rep, source_from_spec(design_spec, key), norm, noise, outer_m, key, opts, cfg);
}

PsiEstimate estimate_psi(const DesignSource& designs, const Eigen::VectorXd& v, const NormSpec& norm, double r,
                         std::size_t outer_m, const McOptions& opts) {
    return psi_from_source(designs, v, norm, r, outer_m, opts);
}

ReverseEfronSteinResult reverse_efron_stein_check(const DesignSource& designs, const NormSpec& norm,
                                                  const GroundTruth& truth, const NoiseSpec& noise,
                                                  std::size_t outer_m, std::size_t inner_m, const StreamKey& key,
                                                  const McOptions& opts, ReverseEfronSteinConfig cfg) {
    const DecompositionReport rep = estimate_decomposition(designs, norm, truth, noise, outer_m, inner_m, key, opts);
    return reverse_es_impl(rep, designs, norm, noise, outer_m, key, opts, cfg);
}

ReverseEfronSteinResult reverse_efron_stein_from_report(const DecompositionReport& report,
                                                        const DesignSpec& design_spec, const NormSpec& norm,
                                                        const NoiseSpec& noise, std::size_t outer_m,
                                                        const StreamKey& key, const McOptions& opts,
                                                        ReverseEfronSteinConfig cfg) {
    return reverse_es_impl(report, source_from_spec(design_spec, key), norm, noise, outer_m, key, opts, cfg);
}

AndersonGap anderson_gap(const NormSpec& norm, const Eigen::VectorXd& x, std::size_t m_samples,
                         const StreamKey& key) {
    if (static_cast<std::size_t>(x.size()) != norm.dimension())
        throw DimensionError("x length does not match the norm dimension");
    if (m_samples < 2)
        throw ConfigError("anderson_gap needs at least 2 samples");
    std::vector<double> diffs(m_samples);
    for (std::size_t i = 0; i < m_samples; ++i) {
        const Eigen::VectorXd xi = sample_gaussian_vector(norm.dimension(), key.nested(key.replicate_index, i));
        const Eigen::VectorXd moved = xi + x;
        const double shifted = eval_norm(norm, moved);
        const double base = eval_norm(norm, xi);
        diffs[i] = (shifted - base) * (shifted + base);
    }
    const Estimate e = summarize(diffs);
    AndersonGap g;
    g.gap = e.mean;
    g.gap_stderr = e.std_error;
    const double xn = eval_norm(norm, x);
    g.ratio_to_xnorm2 = xn > 0.0 ? e.mean / (xn * xn) : 0.0;
    return g;
}

} // namespace mni
