#pragma once

// Minimum-norm interpolation  min ||w|| s.t. Xw = y  for l_p norms, plus the
// two auxiliary programs built on the same dual machinery:
//   * the l2-smallest interpolator inside an l_p ball,
//   * the gauge of the projection of (l_p ball) ∩ (r · l2 ball).

#include "mni/norms.hpp"
#include "mni/rng.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>

namespace mni {

struct SolverOptions {
    double tol_feasibility = 1e-8;
    double tol_kkt = 1e-8;
    int max_iterations = 200;
    /// Number of intermediate exponents between 2 and the target; 0 selects
    /// max(8, ceil(4 / (p - 1))).
    int homotopy_steps = 0;

    void validate() const;
    int resolved_homotopy_steps(double p) const;
};

enum class SolveStatus { converged, max_iter, infeasible };

std::string to_string(SolveStatus s);

struct MniSolution {
    Eigen::VectorXd weights;
    double norm_value = 0.0;
    double l2_value = 0.0;
    /// ||Xw - y||_2 / max(||y||_2, 1)
    double feasibility_residual = 0.0;
    double duality_gap = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::converged;
    /// For infeasible ball problems: the smallest achievable norm of any interpolator.
    double certificate = 0.0;

    bool ok() const { return status == SolveStatus::converged; }
};

struct InterpolationProblem {
    std::reference_wrapper<const Eigen::MatrixXd> design;
    Eigen::VectorXd targets;
    NormSpec norm;

    void validate() const;
};

/// Reusable solver for one design matrix. The orthogonal factorization of the
/// design is computed once; every solve is then independent and const.
class MinNormSolver {
public:
    MinNormSolver(const Eigen::MatrixXd& design, const NormSpec& norm, SolverOptions opts = {});
    ~MinNormSolver();
    MinNormSolver(MinNormSolver&&) noexcept;
    MinNormSolver& operator=(MinNormSolver&&) noexcept;

    /// argmin ||w||_p subject to Xw = y.
    MniSolution solve(const Eigen::VectorXd& targets) const;

    /// argmin ||w||_2 subject to Xw = v and ||w||_p <= radius.
    MniSolution solve_min_l2_in_ball(const Eigen::VectorXd& targets, double radius) const;

    /// min over {Xw = xi} of max(||w||_p, ||w||_2 / radius).
    double gauge_projected_truncated(const Eigen::VectorXd& targets, double radius) const;

    const Eigen::MatrixXd& design() const;
    const NormSpec& norm() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

MniSolution solve_min_norm(const InterpolationProblem& problem, const SolverOptions& opts = {});

MniSolution solve_min_l2_in_ball(const Design& design, const Eigen::VectorXd& v, const NormSpec& norm,
                                 double radius, const SolverOptions& opts = {});

double gauge_projected_truncated(const Design& design, const Eigen::VectorXd& xi, const NormSpec& norm,
                                 double radius, const SolverOptions& opts = {});

/// Grid search over the affine feasible set followed by coordinate-descent
/// polishing. Only for null spaces of dimension <= 3; a test oracle.
MniSolution brute_force_oracle(const InterpolationProblem& problem, int resolution);

} // namespace mni
