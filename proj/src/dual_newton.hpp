#pragma once

// Damped Newton ascent on the concave dual of
//     min  sum_i h(w_i)   s.t.  Xw = y,
//     h(w) = (1 - theta)/2 w^2 + theta/p |w|^p,
// whose dual is  max_lambda <y, lambda> - sum_i h*((X^T lambda)_i).
// theta = 1 is the l_p minimum-norm program, theta = 0 the l2 one, and the
// values in between trace the l2 / l_p Pareto frontier of the affine set.

#include <Eigen/Dense>

namespace mni::detail {

class SeparablePenalty {
public:
    SeparablePenalty(double p, double theta);

    double p() const { return p_; }
    double theta() const { return theta_; }

    /// w = (h*)'(z), dw = (h*)''(z), conj = h*(z).
    void map(double z, double& w, double& dw, double& conj) const;

private:
    double p_;
    double q_;
    double theta_;
    bool quadratic_;
};

struct DualNewtonSettings {
    double tol_residual = 1e-8;
    /// Relative duality-gap bound, only checked when theta == 1.
    double tol_gap = 1e-8;
    int max_iterations = 200;
};

struct DualNewtonResult {
    Eigen::VectorXd lambda;
    Eigen::VectorXd weights;
    double residual = 0.0; ///< ||y - Xw||_2
    double gap = 0.0;      ///< norm value minus Hoelder lower bound (theta == 1)
    int iterations = 0;
    bool converged = false;
};

DualNewtonResult dual_newton(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SeparablePenalty& penalty,
                             Eigen::VectorXd lambda, const DualNewtonSettings& settings);

} // namespace mni::detail
