#pragma once

// Monte Carlo estimators of the complexity functionals of the projected unit
// ball F_n = X B_p^d, and the dyadic block diagnostics of interpolators.
//
// Sample i of an estimator called with key k draws its randomizer from
// k.nested(k.replicate_index, i), so results never depend on worker count.

#include "mni/norms.hpp"
#include "mni/rng.hpp"
#include "mni/solvers.hpp"
#include "mni/stats.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace mni {

struct McOptions {
    std::size_t workers = 1;
    SolverOptions solver;
    /// Fraction of failed solves tolerated before an estimator gives up.
    double max_failure_rate = 0.01;
};

/// Gaussian mean of the gauge: E ||xi||_{F_n}, the minimum norm of an interpolator of xi.
Estimate estimate_M(const Design& design, const NormSpec& norm, std::size_t m_samples, const StreamKey& key,
                    const McOptions& opts = {});

/// Gaussian mean of the support function: E ||X^T xi||_dual.
Estimate estimate_M_star(const Design& design, const NormSpec& norm, std::size_t m_samples, const StreamKey& key);

/// E ||X^T eps||_dual over Rademacher sign vectors eps.
Estimate estimate_rademacher_M_star(const Design& design, const NormSpec& norm, std::size_t m_samples,
                                    const StreamKey& key);

struct InradiusEstimate {
    /// Best-found min over the unit sphere of ||X^T u||_dual: an upper bound on 1/b(F_n).
    double value = 0.0;
    Eigen::VectorXd direction;
    bool certified = false;
};

InradiusEstimate estimate_inradius(const Design& design, const NormSpec& norm, std::size_t multistarts,
                                   const StreamKey& key);

struct ComplexityReport {
    // Gaussian normalization
    double M_mean = 0.0, M_stderr = 0.0;
    double Mstar_mean = 0.0, Mstar_stderr = 0.0;
    // Spherical normalization: means over uniform directions xi / ||xi||_2
    double Ms_mean = 0.0, Ms_stderr = 0.0;
    double Mstar_s_mean = 0.0, Mstar_s_stderr = 0.0;
    /// b(F_n), reciprocal of the best-found inner l2 radius (not certified).
    double inradius_inv = 0.0;
    double gaussian_complexity = 0.0;   ///< M* / n
    double rademacher_complexity = 0.0; ///< E||X^T eps||_dual / n
    double R_MMstar = 0.0;              ///< M * M* / n (Gaussian normalization)
    double R_MMstar_stderr = 0.0;
    double R_MMstar_spherical = 0.0; ///< Ms * Ms*
    double R_MMstar_spherical_stderr = 0.0;
    double R_bMstar = 0.0; ///< b * Ms* (spherical normalization)
    double R_bMstar_stderr = 0.0;
    std::size_t samples_used = 0;
    std::size_t failures = 0;
};

ComplexityReport complexity_ratios(const Design& design, const NormSpec& norm, std::size_t m_samples,
                                   std::size_t multistarts, const StreamKey& key, const McOptions& opts = {});

/// Covering scale of the normalized l_p ball at entropy level k.
double lambda_k(std::size_t d, std::size_t k, double p);

enum class Regime { gaussian, subgaussian };
std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

/// (k/d)^{1/2} (log(ed/k) / loglog(e^2 d))^{1/(2(p-1))}; the subgaussian form drops the loglog.
double predicted_delta_bound(std::size_t d, std::size_t k, double p, Regime regime);

/// Keep the k largest entries in absolute value (ties broken by lower index).
Eigen::VectorXd top_k(const Eigen::VectorXd& w, std::size_t k);

enum class RangeTag { R1, R2, head };
std::string to_string(RangeTag t);

struct DyadicBlock {
    std::size_t k = 0;
    Eigen::VectorXd direction; ///< unit l_p norm (zero when the block is empty)
    double delta = 0.0;        ///< ||block||_p
    double direction_l2 = 0.0; ///< ||direction||_2
    double weighted_l2 = 0.0;  ///< delta * ||direction||_2 = ||block||_2
    RangeTag range_tag = RangeTag::R2;
    double predicted_bound = 0.0;
};

struct DyadicProfile {
    std::vector<DyadicBlock> blocks;
    /// Entries ranked beyond the largest dyadic k.
    Eigen::VectorXd head;
    double head_p_mass = 0.0; ///< ||head||_p^p
    std::size_t range_boundary = 0; ///< floor(n / log(d/n))
    std::size_t k_max = 0;

    Eigen::VectorXd reassemble() const;
};

DyadicProfile dyadic_profile(const Eigen::VectorXd& w, double p, std::size_t n_context,
                             Regime regime = Regime::gaussian);

/// Smallest r with  mean gauge of (F ∩ r B_2) <= M / factor,  factor in (0, 1].
struct RStarEstimate {
    double r_star = 0.0;
    double M_mean = 0.0;
    double truncated_mean = 0.0;
};

RStarEstimate estimate_r_star(const Design& design, const NormSpec& norm, std::size_t m_samples,
                              const StreamKey& key, const McOptions& opts = {}, double factor = 0.5);

struct InductiveBias {
    double noise_norm_mean = 0.0;
    double noise_norm_stderr = 0.0;
    double signal_norm = 0.0;
    double ratio = 0.0;
};

InductiveBias check_inductive_bias(const Design& design, const NormSpec& norm, const Eigen::VectorXd& w_star,
                                   std::size_t m_samples, const StreamKey& key, const McOptions& opts = {});

} // namespace mni
