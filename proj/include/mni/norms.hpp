#pragma once

// Norms on R^d used by the interpolators: l_p for p in (1, 2], the Euclidean
// norm, their duals, and l_1 for direct evaluation only.

#include "mni/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace mni {

enum class NormKind {
    lp,        ///< ||.||_p with p in (1, 2]
    euclidean, ///< ||.||_2
    lq_dual,   ///< ||.||_q, q >= 2, produced by NormSpec::dual() only
    l1,        ///< evaluation only, never a solver target
};

class NormSpec {
public:
    static NormSpec lp(double p, std::size_t dimension);
    static NormSpec euclidean(std::size_t dimension);
    static NormSpec l1(std::size_t dimension);

    NormKind kind() const { return kind_; }
    std::size_t dimension() const { return dimension_; }
    /// Exponent of the norm itself (p for lp, 2 for euclidean, q for lq_dual, 1 for l1).
    double exponent() const { return exponent_; }
    /// Exponent of the dual norm; +inf for l1.
    double dual_exponent() const;
    /// The dual norm as a spec: lp(p) <-> lq_dual(q).
    NormSpec dual() const;

    /// True for the norms the interpolation solvers accept (lp and euclidean).
    bool is_solver_target() const { return kind_ == NormKind::lp || kind_ == NormKind::euclidean; }
    void require_solver_target() const;

    std::string describe() const;

private:
    NormSpec(NormKind kind, double exponent, std::size_t dimension)
        : kind_(kind), exponent_(exponent), dimension_(dimension) {}

    NormKind kind_;
    double exponent_;
    std::size_t dimension_;
};

/// Conjugate exponent q with 1/p + 1/q = 1.
double conjugate_exponent(double p);

/// (sum |w_i|^r)^(1/r), computed with max-rescaling so that large r neither
/// overflows nor underflows. r = +inf gives the max norm.
double lr_norm(std::span<const double> w, double r);
double lr_norm(const Eigen::VectorXd& w, double r);

double eval_norm(const NormSpec& spec, const Eigen::VectorXd& w);
double eval_dual_norm(const NormSpec& spec, const Eigen::VectorXd& v);

/// Unit-norm w with <w, v> = ||v||_dual (Hoelder equality case).
Eigen::VectorXd dual_witness(const NormSpec& spec, const Eigen::VectorXd& v);

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

inline constexpr double kCurvatureSlack = 1e-12;

/// ||(f+g)/2||^2 + t ||(f-g)/2||^2 <= (||f||^2 + ||g||^2)/2
InequalityCheck check_uc2(const NormSpec& spec, const Eigen::VectorXd& f, const Eigen::VectorXd& g, double t);

/// ||(f+g)/2||^r + s ||(f-g)/2||^r >= (||f||^r + ||g||^r)/2, with r = power
InequalityCheck check_usp(const NormSpec& spec, const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                          double power, double s);

struct CotypeRatio {
    double lhs_sum = 0.0;
    double rhs_estimate = 0.0;
    double rhs_stderr = 0.0;
    double ratio = 0.0;
};

/// sum ||f_i||^2 against a Monte Carlo estimate of E_eps ||sum eps_i f_i||^2.
/// `vectors` holds one f_i per column.
CotypeRatio cotype2_ratio(const NormSpec& spec, const Eigen::MatrixXd& vectors,
                          std::size_t num_sign_samples, const StreamKey& key);

struct CurvatureConstants {
    double uc2_t = 0.0;
    double usp_p = 0.0;
    double usp_s = 0.0;
    /// Known only for the Euclidean norm; absent means "an absolute constant".
    std::optional<double> cotype2_t;
    double kconvexity_upper = 0.0;
};

CurvatureConstants curvature_constants(const NormSpec& spec);

} // namespace mni
