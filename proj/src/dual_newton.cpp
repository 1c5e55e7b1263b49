#include "dual_newton.hpp"

#include "mni/norms.hpp"

#include <cmath>
#include <limits>

namespace mni::detail {

SeparablePenalty::SeparablePenalty(double p, double theta)
    : p_(p), q_(conjugate_exponent(p)), theta_(theta), quadratic_(p == 2.0 || theta == 0.0) {}

void SeparablePenalty::map(double z, double& w, double& dw, double& conj) const {
    const double a = std::abs(z);
    if (quadratic_) {
        w = z;
        dw = 1.0;
        conj = 0.5 * z * z;
        return;
    }
    if (a == 0.0) {
        w = 0.0;
        dw = theta_ == 1.0 && q_ == 2.0 ? 1.0 : 0.0;
        conj = 0.0;
        return;
    }
    if (theta_ == 1.0) {
        const double la = std::log(a);
        const double pw = std::exp((q_ - 2.0) * la); // a^(q-2)
        w = std::copysign(pw * a, z);
        dw = (q_ - 1.0) * pw;
        conj = pw * a * a / q_;
        return;
    }
    // Root of (1 - theta) u + theta u^(p-1) = a on u > 0. The left end of the
    // bracket lies below the root and Newton on this concave increasing
    // function then increases monotonically to it.
    const double lin = 1.0 - theta_;
    const double lower = std::min(0.5 * a / lin, std::pow(0.5 * a / theta_, q_ - 1.0));
    double u = lower;
    for (int it = 0; it < 100; ++it) {
        const double upm1 = std::pow(u, p_ - 1.0);
        const double g = lin * u + theta_ * upm1 - a;
        const double gp = lin + theta_ * (p_ - 1.0) * upm1 / u;
        const double step = g / gp;
        u -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * u)
            break;
    }
    const double upm1 = std::pow(u, p_ - 1.0);
    w = std::copysign(u, z);
    dw = 1.0 / (lin + theta_ * (p_ - 1.0) * upm1 / u);
    conj = a * u - 0.5 * lin * u * u - theta_ / p_ * upm1 * u;
}

namespace {

struct DualState {
    Eigen::VectorXd z;
    Eigen::VectorXd w;
    Eigen::VectorXd dw;
    Eigen::VectorXd grad; // y - Xw
    double objective = 0.0;
    double residual = 0.0;
    bool finite = true;
};

void evaluate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SeparablePenalty& penalty,
              const Eigen::VectorXd& lambda, DualState& s) {
    s.z.noalias() = X.transpose() * lambda;
    const Eigen::Index d = s.z.size();
    s.w.resize(d);
    s.dw.resize(d);
    double conj_sum = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        double c;
        penalty.map(s.z[i], s.w[i], s.dw[i], c);
        conj_sum += c;
    }
    s.grad = y;
    s.grad.noalias() -= X * s.w;
    s.objective = y.dot(lambda) - conj_sum;
    s.residual = s.grad.norm();
    s.finite = std::isfinite(s.objective) && std::isfinite(s.residual);
}

double holder_gap(const Eigen::VectorXd& y, const Eigen::VectorXd& lambda, const DualState& s, double p) {
    const double norm_value = lr_norm(s.w, p);
    const double dual_norm = lr_norm(s.z, conjugate_exponent(p));
    if (dual_norm == 0.0)
        return norm_value;
    return norm_value - y.dot(lambda) / dual_norm;
}

} // namespace

DualNewtonResult dual_newton(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SeparablePenalty& penalty,
                             Eigen::VectorXd lambda, const DualNewtonSettings& settings) {
    const Eigen::Index n = X.rows();
    const bool check_gap = penalty.theta() == 1.0;
    const double y_scale = std::max(y.norm(), 1.0);

    DualNewtonResult out;
    DualState cur, trial;
    evaluate(X, y, penalty, lambda, cur);

    Eigen::MatrixXd hessian(n, n);
    Eigen::MatrixXd scaled(n, X.cols());
    Eigen::LLT<Eigen::MatrixXd> llt;

    // Newton steps taken after the tolerances are met, while they still
    // shrink the residual toward rounding level.
    int polish_left = 2;
    bool polishing = false;
    for (int it = 0;; ++it) {
        out.iterations = it;
        const double gap = check_gap ? holder_gap(y, lambda, cur, penalty.p()) : 0.0;
        const bool feasible = cur.residual <= settings.tol_residual * y_scale;
        const bool gap_ok = !check_gap || gap <= settings.tol_gap * std::max(lr_norm(cur.w, penalty.p()), 1.0);
        out.gap = gap;
        if (feasible && gap_ok && cur.finite) {
            out.converged = true;
            if (polish_left == 0 || cur.residual <= 1e-14 * y_scale)
                break;
            --polish_left;
            polishing = true;
        } else if (polishing || it >= settings.max_iterations || !cur.finite) {
            out.converged = false;
            break;
        }

        // H = X diag(dw) X^T + eps I
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            scaled.col(j) = X.col(j) * std::sqrt(cur.dw[j]);
        hessian.setZero();
        hessian.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
        const double eps = 1e-12 * std::max(hessian.trace() / double(n), std::numeric_limits<double>::min());
        hessian.diagonal().array() += eps;
        llt.compute(hessian);
        Eigen::VectorXd direction;
        if (llt.info() == Eigen::Success) {
            direction = llt.solve(cur.grad);
        } else {
            Eigen::MatrixXd full = hessian.selfadjointView<Eigen::Lower>();
            direction = full.ldlt().solve(cur.grad);
        }

        // Backtracking: Armijo on the dual objective (constant 1e-4), or, once
        // objective differences drown in rounding, a sufficient decrease of
        // the residual.
        const double slope = cur.grad.dot(direction);
        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < (polishing ? 1 : 60); ++ls) {
            const Eigen::VectorXd candidate = lambda + step * direction;
            evaluate(X, y, penalty, candidate, trial);
            const bool improved = polishing ? trial.residual <= 0.5 * cur.residual
                                            : trial.objective >= cur.objective + 1e-4 * step * slope ||
                                                  trial.residual <= (1.0 - 1e-4 * step) * cur.residual;
            if (trial.finite && improved) {
                lambda = candidate;
                std::swap(cur, trial);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted && polishing)
            break;
        if (!accepted) {
            out.iterations = it + 1;
            out.converged = false;
            out.gap = check_gap ? holder_gap(y, lambda, cur, penalty.p()) : 0.0;
            break;
        }
    }
    out.residual = cur.residual;
    out.weights = std::move(cur.w);
    out.lambda = std::move(lambda);
    return out;
}

} // namespace mni::detail
