#include "mni/solvers.hpp"

#include "dual_newton.hpp"
#include "mni/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mni {

void SolverOptions::validate() const {
    if (!(tol_feasibility > 0.0) || !(tol_kkt > 0.0))
        throw ConfigError("solver tolerances must be positive");
    if (max_iterations < 1)
        throw ConfigError("max_iterations must be >= 1");
    if (homotopy_steps < 0)
        throw ConfigError("homotopy_steps must be >= 1 (or 0 for the default)");
}

int SolverOptions::resolved_homotopy_steps(double p) const {
    if (homotopy_steps > 0)
        return homotopy_steps;
    if (p >= 2.0)
        return 8;
    return std::max(8, static_cast<int>(std::ceil(4.0 / (p - 1.0))));
}

std::string to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible: return "infeasible";
    }
    return "?";
}

void InterpolationProblem::validate() const {
    const Eigen::MatrixXd& X = design.get();
    if (static_cast<Eigen::Index>(targets.size()) != X.rows())
        throw DimensionError("targets length does not match the number of design rows");
    if (norm.dimension() != static_cast<std::size_t>(X.cols()))
        throw DimensionError("norm dimension does not match the number of design columns");
    norm.require_solver_target();
}

namespace {

// Bisection on the frontier parameter stops once the ball constraint is met
// to this relative accuracy.
constexpr double kBallTolerance = 1e-6;
constexpr int kBisectionIterations = 60;

} // namespace

struct MinNormSolver::Impl {
    Eigen::MatrixXd X;
    NormSpec norm;
    SolverOptions opts;
    double p;
    // X^T P = Q R  (column-pivoted Householder QR of the transposed design)
    Eigen::MatrixXd q_thin;
    Eigen::MatrixXd r_top;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm;

    Impl(const Eigen::MatrixXd& design, const NormSpec& nrm, SolverOptions o)
        : X(design), norm(nrm), opts(o), p(nrm.exponent()) {
        opts.validate();
        norm.require_solver_target();
        if (norm.dimension() != static_cast<std::size_t>(X.cols()))
            throw DimensionError("norm dimension does not match the number of design columns");
        const Eigen::Index n = X.rows();
        const Eigen::Index d = X.cols();
        if (n < 1 || d < 1)
            throw DimensionError("empty design");
        if (n > d)
            throw IllPosedError("design has more rows than columns; interpolation is overdetermined");
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X.transpose());
        if (qr.rank() < n)
            throw IllPosedError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " < n = " +
                                std::to_string(n) + ")");
        q_thin = qr.householderQ() * Eigen::MatrixXd::Identity(d, n);
        r_top = qr.matrixR().topRows(n).triangularView<Eigen::Upper>();
        perm = qr.colsPermutation();
    }

    /// Least-l2-norm interpolator and its dual vector (X X^T)^{-1} y.
    void least_norm(const Eigen::VectorXd& y, Eigen::VectorXd& w, Eigen::VectorXd& lambda) const {
        const Eigen::VectorXd py = perm.transpose() * y;
        const Eigen::VectorXd u = r_top.transpose().triangularView<Eigen::Lower>().solve(py);
        w.noalias() = q_thin * u;
        const Eigen::VectorXd r_inv_u = r_top.triangularView<Eigen::Upper>().solve(u);
        lambda = perm * r_inv_u;
    }

    double relative_residual(const Eigen::VectorXd& w, const Eigen::VectorXd& y) const {
        return (X * w - y).norm() / std::max(y.norm(), 1.0);
    }

    MniSolution finish(Eigen::VectorXd w, const Eigen::VectorXd& y, double gap, int iterations,
                       SolveStatus status) const {
        MniSolution s;
        s.weights = std::move(w);
        s.norm_value = lr_norm(s.weights, p);
        s.l2_value = s.weights.norm();
        s.feasibility_residual = relative_residual(s.weights, y);
        s.duality_gap = gap;
        s.iterations = iterations;
        s.status = status;
        return s;
    }

    struct NormalizedSolve {
        detail::DualNewtonResult result;
        int iterations = 0;
        bool converged = false;
    };

    /// l_p minimum-norm solve for unit-norm targets, homotopy in the exponent.
    NormalizedSolve solve_unit(const Eigen::VectorXd& y_unit) const {
        NormalizedSolve out;
        Eigen::VectorXd w, lambda;
        least_norm(y_unit, w, lambda);
        if (p == 2.0) {
            out.result.lambda = lambda;
            out.result.weights = w;
            out.result.residual = (X * w - y_unit).norm();
            out.result.gap = 0.0;
            out.converged = true;
            return out;
        }
        const double q_target = conjugate_exponent(p);
        const int stages = opts.resolved_homotopy_steps(p);
        int budget = opts.max_iterations;
        for (int k = 1; k <= stages + 1; ++k) {
            const bool final_stage = k == stages + 1;
            const double q_k = final_stage ? q_target : 2.0 + (q_target - 2.0) * double(k) / double(stages + 1);
            const double p_k = final_stage ? p : conjugate_exponent(q_k);
            rescale_dual(y_unit, q_k, lambda);
            detail::DualNewtonSettings settings;
            if (final_stage) {
                settings.tol_residual = opts.tol_feasibility;
                settings.tol_gap = opts.tol_kkt;
                settings.max_iterations = std::max(budget, 1);
            } else {
                settings.tol_residual = 1e-2;
                settings.tol_gap = std::numeric_limits<double>::infinity();
                settings.max_iterations = std::min(3, std::max(budget, 0));
            }
            detail::DualNewtonResult r = dual_newton(X, y_unit, detail::SeparablePenalty(p_k, 1.0), lambda, settings);
            budget -= r.iterations;
            out.iterations += r.iterations;
            lambda = r.lambda;
            if (final_stage) {
                out.converged = r.converged;
                out.result = std::move(r);
            }
        }
        return out;
    }

    /// Scale lambda so that X phi_q(c X^T lambda) best matches y: phi_q is
    /// (q-1)-homogeneous, so a single scalar fixes the overall magnitude.
    void rescale_dual(const Eigen::VectorXd& y, double q, Eigen::VectorXd& lambda) const {
        const Eigen::VectorXd z = X.transpose() * lambda;
        const double peak = z.cwiseAbs().maxCoeff();
        if (!(peak > 0.0))
            return;
        Eigen::VectorXd phi(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i)
            phi[i] = z[i] == 0.0 ? 0.0 : std::copysign(std::exp((q - 1.0) * std::log(std::abs(z[i]) / peak)), z[i]);
        const Eigen::VectorXd u = X * phi;
        const double num = y.dot(u);
        const double den = u.squaredNorm();
        if (!(num > 0.0) || !(den > 0.0))
            return;
        // X phi(c z) = (c peak)^(q-1) u; choose c with (c peak)^(q-1) = num/den
        const double c = std::exp(std::log(num / den) / (q - 1.0)) / peak;
        lambda *= c;
    }

    /// Frontier point for parameter theta in (0, 1) on unit-norm targets.
    detail::DualNewtonResult frontier_point(const Eigen::VectorXd& y_unit, double theta, const Eigen::VectorXd& warm) const {
        detail::DualNewtonSettings settings;
        settings.tol_residual = opts.tol_feasibility;
        settings.tol_gap = opts.tol_kkt;
        settings.max_iterations = opts.max_iterations;
        return dual_newton(X, y_unit, detail::SeparablePenalty(p, theta), warm, settings);
    }

    MniSolution solve(const Eigen::VectorXd& y) const {
        if (y.size() != X.rows())
            throw DimensionError("targets length does not match the number of design rows");
        const double scale = y.norm();
        if (scale == 0.0)
            return finish(Eigen::VectorXd::Zero(X.cols()), y, 0.0, 0, SolveStatus::converged);
        const Eigen::VectorXd y_unit = y / scale;
        NormalizedSolve s = solve_unit(y_unit);
        MniSolution out = finish(s.result.weights * scale, y, s.result.gap * scale, s.iterations,
                                 s.converged ? SolveStatus::converged : SolveStatus::max_iter);
        if (out.status == SolveStatus::converged &&
            (out.feasibility_residual > opts.tol_feasibility ||
             out.duality_gap > opts.tol_kkt * std::max(out.norm_value, scale)))
            out.status = SolveStatus::max_iter;
        return out;
    }

    MniSolution solve_min_l2_in_ball(const Eigen::VectorXd& v, double radius) const {
        if (!(radius > 0.0))
            throw ConfigError("ball radius must be positive");
        if (v.size() != X.rows())
            throw DimensionError("targets length does not match the number of design rows");
        const double scale = v.norm();
        if (scale == 0.0)
            return finish(Eigen::VectorXd::Zero(X.cols()), v, 0.0, 0, SolveStatus::converged);
        const Eigen::VectorXd v_unit = v / scale;
        const double r_unit = radius / scale;

        Eigen::VectorXd w0, lambda0;
        least_norm(v_unit, w0, lambda0);
        if (lr_norm(w0, p) <= r_unit * (1.0 + kBallTolerance))
            return finish(w0 * scale, v, 0.0, 0, SolveStatus::converged);

        NormalizedSolve tip = solve_unit(v_unit);
        const double min_norm = lr_norm(tip.result.weights, p);
        int iterations = tip.iterations;
        if (min_norm > r_unit * (1.0 + 1e-9)) {
            MniSolution out = finish(tip.result.weights * scale, v, 0.0, iterations, SolveStatus::infeasible);
            out.certificate = min_norm * scale;
            return out;
        }
        if (min_norm >= r_unit * (1.0 - kBallTolerance))
            return finish(tip.result.weights * scale, v, tip.result.gap * scale, iterations,
                          tip.converged ? SolveStatus::converged : SolveStatus::max_iter);

        // ||w(theta)||_p decreases along the frontier; find where it meets r.
        double lo = 0.0, hi = 1.0;
        Eigen::VectorXd best = tip.result.weights;
        Eigen::VectorXd warm = tip.result.lambda;
        bool best_converged = tip.converged;
        for (int it = 0; it < kBisectionIterations; ++it) {
            const double theta = 0.5 * (lo + hi);
            detail::DualNewtonResult r = frontier_point(v_unit, theta, warm);
            iterations += r.iterations;
            const double a = lr_norm(r.weights, p);
            if (a <= r_unit) {
                hi = theta;
                best = r.weights;
                best_converged = r.converged;
                warm = r.lambda;
                if (a >= r_unit * (1.0 - kBallTolerance))
                    break;
            } else {
                lo = theta;
            }
        }
        return finish(best * scale, v, 0.0, iterations,
                      best_converged ? SolveStatus::converged : SolveStatus::max_iter);
    }

    double gauge(const Eigen::VectorXd& xi, double radius) const {
        if (!(radius > 0.0))
            throw ConfigError("truncation radius must be positive");
        if (xi.size() != X.rows())
            throw DimensionError("targets length does not match the number of design rows");
        const double scale = xi.norm();
        if (scale == 0.0)
            return 0.0;
        const Eigen::VectorXd xi_unit = xi / scale;

        Eigen::VectorXd w0, lambda0;
        least_norm(xi_unit, w0, lambda0);
        const double a0 = lr_norm(w0, p), b0 = w0.norm() / radius;
        if (a0 <= b0)
            return b0 * scale;
        NormalizedSolve tip = solve_unit(xi_unit);
        if (!tip.converged)
            throw EstimatorError("minimum-norm solve did not converge inside the gauge computation");
        const double a1 = lr_norm(tip.result.weights, p), b1 = tip.result.weights.norm() / radius;
        if (a1 >= b1)
            return a1 * scale;

        // f(theta) = ||w||_p - ||w||_2 / r decreases from f(0) > 0 to f(1) < 0
        double lo = 0.0, hi = 1.0;
        double value = std::min(std::max(a0, b0), std::max(a1, b1));
        Eigen::VectorXd warm = tip.result.lambda;
        for (int it = 0; it < kBisectionIterations; ++it) {
            const double theta = 0.5 * (lo + hi);
            detail::DualNewtonResult r = frontier_point(xi_unit, theta, warm);
            const double a = lr_norm(r.weights, p), b = r.weights.norm() / radius;
            value = std::min(value, std::max(a, b));
            if (a > b) {
                lo = theta;
            } else {
                hi = theta;
                warm = r.lambda;
            }
            if (std::abs(a - b) <= 1e-10 * std::max(a, b))
                break;
        }
        return value * scale;
    }
};

MinNormSolver::MinNormSolver(const Eigen::MatrixXd& design, const NormSpec& norm, SolverOptions opts)
    : impl_(std::make_unique<Impl>(design, norm, opts)) {}
MinNormSolver::~MinNormSolver() = default;
MinNormSolver::MinNormSolver(MinNormSolver&&) noexcept = default;
MinNormSolver& MinNormSolver::operator=(MinNormSolver&&) noexcept = default;

MniSolution MinNormSolver::solve(const Eigen::VectorXd& targets) const { return impl_->solve(targets); }

MniSolution MinNormSolver::solve_min_l2_in_ball(const Eigen::VectorXd& targets, double radius) const {
    return impl_->solve_min_l2_in_ball(targets, radius);
}

double MinNormSolver::gauge_projected_truncated(const Eigen::VectorXd& targets, double radius) const {
    return impl_->gauge(targets, radius);
}

const Eigen::MatrixXd& MinNormSolver::design() const { return impl_->X; }
const NormSpec& MinNormSolver::norm() const { return impl_->norm; }

MniSolution solve_min_norm(const InterpolationProblem& problem, const SolverOptions& opts) {
    problem.validate();
    return MinNormSolver(problem.design.get(), problem.norm, opts).solve(problem.targets);
}

MniSolution solve_min_l2_in_ball(const Design& design, const Eigen::VectorXd& v, const NormSpec& norm,
                                 double radius, const SolverOptions& opts) {
    return MinNormSolver(design.matrix, norm, opts).solve_min_l2_in_ball(v, radius);
}

double gauge_projected_truncated(const Design& design, const Eigen::VectorXd& xi, const NormSpec& norm,
                                 double radius, const SolverOptions& opts) {
    return MinNormSolver(design.matrix, norm, opts).gauge_projected_truncated(xi, radius);
}

} // namespace mni
