#include "mni/norms.hpp"

#include "mni/error.hpp"
#include "mni/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mni {

namespace {

void require_dimension(const NormSpec& spec, Eigen::Index size) {
    if (static_cast<std::size_t>(size) != spec.dimension())
        throw DimensionError("vector of length " + std::to_string(size) + " for a norm on R^" +
                             std::to_string(spec.dimension()));
}

} // namespace

double conjugate_exponent(double p) {
    if (p == 1.0)
        return std::numeric_limits<double>::infinity();
    if (std::isinf(p))
        return 1.0;
    return p / (p - 1.0);
}

NormSpec NormSpec::lp(double p, std::size_t dimension) {
    if (!(p > 1.0 && p <= 2.0))
        throw ConfigError("lp norm requires p in (1, 2], got " + std::to_string(p));
    if (dimension < 1)
        throw ConfigError("norm dimension must be >= 1");
    return {NormKind::lp, p, dimension};
}

NormSpec NormSpec::euclidean(std::size_t dimension) {
    if (dimension < 1)
        throw ConfigError("norm dimension must be >= 1");
    return {NormKind::euclidean, 2.0, dimension};
}

NormSpec NormSpec::l1(std::size_t dimension) {
    if (dimension < 1)
        throw ConfigError("norm dimension must be >= 1");
    return {NormKind::l1, 1.0, dimension};
}

double NormSpec::dual_exponent() const { return conjugate_exponent(exponent_); }

NormSpec NormSpec::dual() const {
    switch (kind_) {
    case NormKind::lp:
        return {NormKind::lq_dual, conjugate_exponent(exponent_), dimension_};
    case NormKind::lq_dual:
        return {NormKind::lp, conjugate_exponent(exponent_), dimension_};
    case NormKind::euclidean:
        return *this;
    case NormKind::l1:
        break;
    }
    throw UnsupportedError("the dual of l1 (l_inf) is not representable as a NormSpec");
}

void NormSpec::require_solver_target() const {
    if (!is_solver_target())
        throw UnsupportedError(describe() + " is not a solver target; only lp with p in (1,2] is");
}

std::string NormSpec::describe() const {
    std::ostringstream os;
    switch (kind_) {
    case NormKind::lp: os << "lp(" << exponent_ << ")"; break;
    case NormKind::euclidean: os << "euclidean"; break;
    case NormKind::lq_dual: os << "lq_dual(" << exponent_ << ")"; break;
    case NormKind::l1: os << "l1"; break;
    }
    os << " on R^" << dimension_;
    return os.str();
}

double lr_norm(std::span<const double> w, double r) {
    double peak = 0.0;
    for (double x : w)
        peak = std::max(peak, std::abs(x));
    if (peak == 0.0 || std::isinf(r))
        return peak;
    if (r == 1.0) {
        double s = 0.0;
        for (double x : w)
            s += std::abs(x);
        return s;
    }
    if (r == 2.0) {
        double s = 0.0;
        for (double x : w) {
            const double y = x / peak;
            s += y * y;
        }
        return peak * std::sqrt(s);
    }
    double s = 0.0;
    for (double x : w) {
        if (x != 0.0)
            s += std::exp(r * std::log(std::abs(x) / peak));
    }
    return peak * std::exp(std::log(s) / r);
}

double lr_norm(const Eigen::VectorXd& w, double r) {
    return lr_norm(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), r);
}

double eval_norm(const NormSpec& spec, const Eigen::VectorXd& w) {
    require_dimension(spec, w.size());
    return lr_norm(w, spec.exponent());
}

double eval_dual_norm(const NormSpec& spec, const Eigen::VectorXd& v) {
    require_dimension(spec, v.size());
    return lr_norm(v, spec.dual_exponent());
}

Eigen::VectorXd dual_witness(const NormSpec& spec, const Eigen::VectorXd& v) {
    require_dimension(spec, v.size());
    const double peak = v.cwiseAbs().maxCoeff();
    if (peak == 0.0)
        throw ConfigError("dual_witness of the zero vector");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(v.size());
    const double s = spec.dual_exponent();
    if (std::isinf(s)) {
        // l1: all mass on the first largest coordinate
        Eigen::Index k = 0;
        v.cwiseAbs().maxCoeff(&k);
        w[k] = v[k] > 0 ? 1.0 : -1.0;
        return w;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0)
            w[i] = std::copysign(std::exp((s - 1.0) * std::log(std::abs(v[i]) / peak)), v[i]);
    }
    return w / lr_norm(w, spec.exponent());
}

InequalityCheck check_uc2(const NormSpec& spec, const Eigen::VectorXd& f, const Eigen::VectorXd& g, double t) {
    require_dimension(spec, f.size());
    require_dimension(spec, g.size());
    const double mid = eval_norm(spec, 0.5 * (f + g));
    const double half_diff = eval_norm(spec, 0.5 * (f - g));
    const double nf = eval_norm(spec, f);
    const double ng = eval_norm(spec, g);
    InequalityCheck c;
    c.lhs = mid * mid + t * half_diff * half_diff;
    c.rhs = 0.5 * (nf * nf + ng * ng);
    c.holds = c.lhs <= c.rhs + kCurvatureSlack;
    return c;
}

InequalityCheck check_usp(const NormSpec& spec, const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                          double power, double s) {
    if (!(power > 1.0 && power <= 2.0))
        throw ConfigError("smoothness exponent must lie in (1, 2]");
    if (!(s > 0.0))
        throw ConfigError("smoothness constant must be positive");
    require_dimension(spec, f.size());
    require_dimension(spec, g.size());
    const double mid = eval_norm(spec, 0.5 * (f + g));
    const double half_diff = eval_norm(spec, 0.5 * (f - g));
    const double nf = eval_norm(spec, f);
    const double ng = eval_norm(spec, g);
    InequalityCheck c;
    c.lhs = std::pow(mid, power) + s * std::pow(half_diff, power);
    c.rhs = 0.5 * (std::pow(nf, power) + std::pow(ng, power));
    c.holds = c.lhs >= c.rhs - kCurvatureSlack;
    return c;
}

CotypeRatio cotype2_ratio(const NormSpec& spec, const Eigen::MatrixXd& vectors,
                          std::size_t num_sign_samples, const StreamKey& key) {
    require_dimension(spec, vectors.rows());
    if (vectors.cols() < 1)
        throw ConfigError("cotype2_ratio needs at least one vector");
    if (num_sign_samples < 1)
        throw ConfigError("cotype2_ratio needs at least one sign sample");
    CotypeRatio out;
    std::vector<double> squares(static_cast<std::size_t>(vectors.cols()));
    for (Eigen::Index i = 0; i < vectors.cols(); ++i) {
        const double nrm = eval_norm(spec, vectors.col(i));
        squares[static_cast<std::size_t>(i)] = nrm * nrm;
    }
    out.lhs_sum = pairwise_sum(squares);

    std::vector<double> samples(num_sign_samples);
    for (std::size_t s = 0; s < num_sign_samples; ++s) {
        const Eigen::VectorXd eps = sample_sign_vector(static_cast<std::size_t>(vectors.cols()), key.with_replicate(s));
        const double nrm = eval_norm(spec, vectors * eps);
        samples[s] = nrm * nrm;
    }
    const Estimate e = summarize(samples);
    out.rhs_estimate = e.mean;
    out.rhs_stderr = e.std_error;
    out.ratio = out.lhs_sum / out.rhs_estimate;
    return out;
}

CurvatureConstants curvature_constants(const NormSpec& spec) {
    spec.require_solver_target();
    const double p = spec.exponent();
    const double d = static_cast<double>(spec.dimension());
    CurvatureConstants c;
    c.uc2_t = p - 1.0;
    c.usp_p = p;
    c.usp_s = 1.0;
    if (p == 2.0) {
        c.cotype2_t = 1.0;
        c.kconvexity_upper = 1.0;
    } else {
        // K-convexity constants are >= 1; the floor only matters for d < e
        c.kconvexity_upper = std::max(1.0, std::min(1.0 / std::sqrt(p - 1.0), std::sqrt(std::log(d))));
    }
    return c;
}

} // namespace mni
