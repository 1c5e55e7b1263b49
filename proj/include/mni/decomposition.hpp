#pragma once

// Nested Monte Carlo estimation of the MSE decomposition
//     MSE = E1 + E2 + T2,   T1 = E1 + E2,
// where, with m(X) = E[w_hat | X] the conditional mean of the interpolator,
//     E1 = E || P_{w*} m(X) - w* ||^2    (signal shrinkage)
//     E2 = E || P_{w*}^perp m(X) ||^2     (energy spilled orthogonally)
//     T2 = E Var[w_hat | X]               (noise error)
// plus the degree-1 Hermite linearization of the interpolation map, the
// median functional Psi_n, and the reverse Efron-Stein and Anderson checks.

#include "mni/geometry.hpp"
#include "mni/norms.hpp"
#include "mni/rng.hpp"
#include "mni/solvers.hpp"
#include "mni/stats.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace mni {

struct GroundTruth {
    Eigen::VectorXd w_star;
    std::size_t sparsity = 0;
    double p_norm = 0.0;
    double l2_norm = 0.0;

    /// Validates that both norms of w_star lie in [0.5, 2].
    static GroundTruth make(const Eigen::VectorXd& w_star, const NormSpec& norm);
    /// Sparse vector from (index, value) pairs, validated as in make().
    static GroundTruth sparse(std::size_t d, const std::vector<std::size_t>& support,
                              const std::vector<double>& values, const NormSpec& norm);
    /// The zero signal (pure-noise interpolation); exempt from the norm bounds.
    static GroundTruth zero(std::size_t d);

    bool is_zero() const { return sparsity == 0; }
};

struct Projection {
    double coefficient = 0.0;
    Eigen::VectorXd parallel;
    Eigen::VectorXd orthogonal;
};

Projection project_onto_signal(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star);

struct DecompositionReport {
    Estimate E1, E2, T1, T2, MSE;
    std::size_t outer_samples = 0;
    std::size_t inner_samples = 0;
    std::size_t failures = 0;
    double consistency_residual = 0.0; ///< |MSE - (E1 + E2 + T2)|
    double propagated_stderr = 0.0;    ///< sqrt(se_MSE^2 + se_T1^2 + se_T2^2)
};

/// Design of outer replicate `outer`.
using DesignSource = std::function<Eigen::MatrixXd(std::uint64_t outer)>;

DecompositionReport estimate_decomposition(const DesignSpec& design_spec, const NormSpec& norm,
                                           const GroundTruth& truth, const NoiseSpec& noise, std::size_t outer_m,
                                           std::size_t inner_m, const StreamKey& key, const McOptions& opts = {});

/// Same estimator with injected designs (tests, fixed-design studies).
DecompositionReport estimate_decomposition(const DesignSource& designs, const NormSpec& norm,
                                           const GroundTruth& truth, const NoiseSpec& noise, std::size_t outer_m,
                                           std::size_t inner_m, const StreamKey& key, const McOptions& opts = {});

struct HermiteCoefficients {
    /// Column i is alpha_i in R^d.
    Eigen::MatrixXd alpha;
    /// Standard error of every entry of alpha.
    Eigen::MatrixXd stderr_per_coordinate;
    /// Standard error of ||X alpha_i - e_i||_2 under the sampling law, per i.
    Eigen::VectorXd interpolation_stderr;
    std::size_t inner_samples = 0;
    std::size_t failures = 0;
};

/// Map xi -> w(xi) whose Hermite-1 coefficients are estimated.
using NoiseMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// alpha_i = E[ (|xi_i|/2) (M(xi_+^i) - M(xi_-^i)) ],  xi_±^i = xi with coordinate i set to ±|xi_i|.
/// `design` (optional, may be empty) is used for the interpolation residual bookkeeping.
HermiteCoefficients estimate_hermite_map(const NoiseMap& map, std::size_t n, std::size_t d, std::size_t inner_m,
                                         const StreamKey& key, const Eigen::MatrixXd& design = {},
                                         std::size_t workers = 1);

/// Hermite coefficients of xi -> MNI(X, X w* + xi).
HermiteCoefficients estimate_hermite(const Design& design, const NormSpec& norm, const GroundTruth& truth,
                                     std::size_t inner_m, const StreamKey& key, const McOptions& opts = {});

struct PsiEstimate {
    double median = 0.0;
    double lower_quartile = 0.0;
    double upper_quartile = 0.0;
    std::size_t infeasible = 0;
    std::size_t samples = 0;
};

/// Median over designs of the smallest l2 norm of an interpolator of v inside r·B.
PsiEstimate estimate_psi(const DesignSpec& design_spec, const Eigen::VectorXd& v, const NormSpec& norm, double r,
                         std::size_t outer_m, const StreamKey& key, const McOptions& opts = {});
PsiEstimate estimate_psi(const DesignSource& designs, const Eigen::VectorXd& v, const NormSpec& norm, double r,
                         std::size_t outer_m, const McOptions& opts = {});

struct ReverseEfronSteinConfig {
    double constant_C = 1.0;
    double tolerance_factor = 1e-2;
};

struct ReverseEfronSteinResult {
    double lhs_T2 = 0.0;
    double lhs_T2_stderr = 0.0;
    double rhs_bound = 0.0;
    double psi = 0.0;
    double radius = 0.0;
    double M_n = 0.0;
    double slack = 0.0; ///< lhs_T2 - tolerance_factor * rhs_bound
    bool satisfied = false;
    DecompositionReport decomposition;
};

/// Compare T2 with n Psi_n(sigma e1, C K sigma M_n / (t sqrt n))^2.
ReverseEfronSteinResult reverse_efron_stein_check(const DesignSpec& design_spec, const NormSpec& norm,
                                                  const GroundTruth& truth, const NoiseSpec& noise,
                                                  std::size_t outer_m, std::size_t inner_m, const StreamKey& key,
                                                  const McOptions& opts = {}, ReverseEfronSteinConfig cfg = {});

ReverseEfronSteinResult reverse_efron_stein_check(const DesignSource& designs, const NormSpec& norm,
                                                  const GroundTruth& truth, const NoiseSpec& noise,
                                                  std::size_t outer_m, std::size_t inner_m, const StreamKey& key,
                                                  const McOptions& opts = {}, ReverseEfronSteinConfig cfg = {});

/// Same comparison reusing an existing decomposition report for the lhs.
ReverseEfronSteinResult reverse_efron_stein_from_report(const DecompositionReport& report,
                                                        const DesignSpec& design_spec, const NormSpec& norm,
                                                        const NoiseSpec& noise, std::size_t outer_m,
                                                        const StreamKey& key, const McOptions& opts = {},
                                                        ReverseEfronSteinConfig cfg = {});

struct AndersonGap {
    double gap = 0.0;
    double gap_stderr = 0.0;
    double ratio_to_xnorm2 = 0.0;
};

/// E||xi + x||^2 - E||xi||^2 over xi ~ N(0, I_d), common random numbers.
AndersonGap anderson_gap(const NormSpec& norm, const Eigen::VectorXd& x, std::size_t m_samples,
                         const StreamKey& key);

} // namespace mni
