#include "mni/error.hpp"
#include "mni/geometry.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mni;

namespace {

Design identity(std::size_t n) { return Design{Eigen::MatrixXd::Identity(Eigen::Index(n), Eigen::Index(n)), {}, {}}; }

Design gaussian_design(std::size_t n, std::size_t d, std::uint64_t rep, Scaling scaling = Scaling::raw) {
    DesignSpec spec;
    spec.n = n;
    spec.d = d;
    spec.scaling = scaling;
    return sample_design(spec, StreamKey(99, StreamRole::design, rep));
}

const double kHalfNormalMean = std::sqrt(2.0 / M_PI);

} // namespace

TEST_CASE("Gaussian mean of the gauge at identity designs") {
    const StreamKey key(1, StreamRole::auxiliary);
    const Estimate m2 = estimate_M(identity(2), NormSpec::lp(2, 2), 10000, key);
    CHECK(std::abs(m2.mean - std::sqrt(M_PI / 2)) <= 3 * m2.std_error);
    const Estimate m1 = estimate_M(identity(1), NormSpec::lp(2, 1), 10000, key);
    CHECK(std::abs(m1.mean - kHalfNormalMean) <= 3 * m1.std_error);
    CHECK(m1.samples == 10000);
}

TEST_CASE("gauge equals the norm at identity designs") {
    const Design I = identity(6);
    const NormSpec norm = NormSpec::lp(1.5, 6);
    const MinNormSolver solver(I.matrix, norm);
    for (std::uint64_t i = 0; i < 20; ++i) {
        const Eigen::VectorXd xi = sample_gaussian_vector(6, StreamKey(2, StreamRole::noise, i));
        CHECK(solver.solve(xi).norm_value == doctest::Approx(oracle::lp(xi, 1.5)).epsilon(1e-8));
    }
}

TEST_CASE("support function mean") {
    const StreamKey key(3, StreamRole::auxiliary);
    const Estimate s2 = estimate_M_star(identity(2), NormSpec::lp(2, 2), 10000, key);
    CHECK(std::abs(s2.mean - std::sqrt(M_PI / 2)) <= 3 * s2.std_error);

    const Estimate s1 = estimate_M_star(identity(1), NormSpec::lp(1.5, 1), 100000, key);
    CHECK(std::abs(s1.mean - kHalfNormalMean) <= 3 * s1.std_error);
    CHECK(s1.mean <= std::cbrt(2 * kHalfNormalMean));

    const Design X = gaussian_design(5, 30, 1);
    Design X2 = X;
    X2.matrix *= 2.0;
    const NormSpec norm = NormSpec::lp(1.5, 30);
    CHECK(estimate_M_star(X2, norm, 200, key).mean == doctest::Approx(2 * estimate_M_star(X, norm, 200, key).mean));
}

TEST_CASE("self-duality at p = 2") {
    const Estimate M = estimate_M(identity(8), NormSpec::lp(2, 8), 4000, StreamKey(5, StreamRole::auxiliary));
    const Estimate S = estimate_M_star(identity(8), NormSpec::lp(2, 8), 4000, StreamKey(6, StreamRole::auxiliary));
    CHECK(std::abs(M.mean - S.mean) <= 3 * std::hypot(M.std_error, S.std_error));
    CHECK(std::abs(M.mean - oracle::chi_mean(8)) <= 3 * M.std_error);
}

TEST_CASE("estimators are deterministic for a fixed key") {
    const Design X = gaussian_design(3, 10, 3);
    const NormSpec norm = NormSpec::lp(1.5, 10);
    const StreamKey key(7, StreamRole::auxiliary);
    McOptions one, four;
    four.workers = 4;
    const Estimate a = estimate_M(X, norm, 2, key, one);
    const Estimate b = estimate_M(X, norm, 2, key, one);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    CHECK(estimate_M(X, norm, 64, key, one).mean == estimate_M(X, norm, 64, key, four).mean);
    CHECK_THROWS_AS(estimate_M(X, norm, 1, key), ConfigError);
}

TEST_CASE("inradius") {
    const auto r4 = estimate_inradius(identity(4), NormSpec::lp(1.5, 4), 16, StreamKey(8, StreamRole::multistart));
    CHECK(r4.value == doctest::Approx(std::pow(4.0, -1.0 / 6)).epsilon(1e-6));
    CHECK_FALSE(r4.certified);
    for (std::size_t d : {1, 3, 7})
        CHECK(estimate_inradius(identity(d), NormSpec::lp(2, d), 4, StreamKey(8, StreamRole::multistart)).value ==
              doctest::Approx(1.0).epsilon(1e-9));
    const Design row{(Eigen::MatrixXd(1, 2) << 1, 2).finished(), {}, {}};
    CHECK(estimate_inradius(row, NormSpec::lp(1.5, 2), 4, StreamKey(8, StreamRole::multistart)).value ==
          doctest::Approx(std::cbrt(9.0)));
}

TEST_CASE("complexity report at the identity") {
    const Design I = identity(64);
    const ComplexityReport r = complexity_ratios(I, NormSpec::lp(2, 64), 10000, 4, StreamKey(9, StreamRole::auxiliary));
    CHECK(r.R_MMstar >= 0.95);
    CHECK(r.R_MMstar <= 1.05);
    // chi-mean squared over n is the population value
    const double chi = oracle::chi_mean(64);
    CHECK(std::abs(r.R_MMstar - chi * chi / 64) <= 3 * r.R_MMstar_stderr + 1e-3);
    CHECK(r.R_MMstar == doctest::Approx(r.M_mean * r.Mstar_mean / 64).epsilon(1e-12));
    CHECK(r.R_MMstar_spherical == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("complexity report invariants on an overparameterized design") {
    const Design X = gaussian_design(16, 512, 4, Scaling::by_sqrt_d);
    const NormSpec norm = NormSpec::lp(1.5, 512);
    const ComplexityReport r = complexity_ratios(X, norm, 400, 16, StreamKey(10, StreamRole::auxiliary));
    CHECK(r.R_MMstar == doctest::Approx(r.M_mean * r.Mstar_mean / 16).epsilon(1e-12));
    CHECK(r.gaussian_complexity == doctest::Approx(r.Mstar_mean / 16));
    CHECK(r.R_MMstar_spherical >= 1.0 - 3 * r.R_MMstar_spherical_stderr);
    CHECK(r.R_bMstar >= r.R_MMstar_spherical - 3 * std::hypot(r.R_bMstar_stderr, r.R_MMstar_spherical_stderr));
    CHECK(std::isfinite(r.R_bMstar));
    CHECK(r.rademacher_complexity > 0);

    Design X3 = X;
    X3.matrix *= 3.0;
    const ComplexityReport r3 = complexity_ratios(X3, norm, 400, 16, StreamKey(10, StreamRole::auxiliary));
    CHECK(r3.R_MMstar == doctest::Approx(r.R_MMstar).epsilon(1e-8));
}

TEST_CASE("covering scales") {
    for (double p : {1.2, 1.5, 2.0})
        CHECK(lambda_k(100, 100, p) == doctest::Approx(1.0));
    CHECK(lambda_k(1024, 1, 1.5) == doctest::Approx(std::pow(2.0, 10.0 / 6)).epsilon(1e-10));
    CHECK(lambda_k(1024, 64, 1.5) == doctest::Approx(std::pow(16.0 * std::log(16.0 * M_E), 1.0 / 6)).epsilon(1e-10));
    CHECK(lambda_k(1024, 64, 1.5) == doctest::Approx(1.9804).epsilon(1e-4));
    double prev = lambda_k(4096, 9, 1.5);
    for (std::size_t k = 10; k <= 4096; k += 7) {
        const double cur = lambda_k(4096, k, 1.5);
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
    CHECK_THROWS_AS(lambda_k(10, 0, 1.5), ConfigError);
    CHECK_THROWS_AS(lambda_k(10, 11, 1.5), ConfigError);
}

TEST_CASE("predicted block bounds") {
    const double base = 0.125 * std::log(64 * M_E);
    const double loglog = std::log(std::log(M_E * M_E * 4096));
    CHECK(predicted_delta_bound(4096, 64, 1.5, Regime::gaussian) == doctest::Approx(base / loglog).epsilon(1e-12));
    CHECK(predicted_delta_bound(4096, 64, 1.5, Regime::gaussian) == doctest::Approx(0.27634).epsilon(1e-4));
    CHECK(predicted_delta_bound(4096, 64, 1.5, Regime::subgaussian) == doctest::Approx(0.64486).epsilon(1e-4));
    CHECK(predicted_delta_bound(4096, 4096, 1.25, Regime::gaussian) == doctest::Approx(std::pow(1.0 / loglog, 2.0)));
    CHECK_THROWS_AS(predicted_delta_bound(10, 11, 1.5, Regime::gaussian), ConfigError);
    CHECK(regime_from_string(to_string(Regime::subgaussian)) == Regime::subgaussian);
}

TEST_CASE("top-k selection") {
    const Eigen::VectorXd w = (Eigen::VectorXd(4) << 3, -1, 2, 0).finished();
    CHECK(top_k(w, 2) == (Eigen::VectorXd(4) << 3, 0, 2, 0).finished());
    const Eigen::VectorXd ties = (Eigen::VectorXd(4) << 1, -1, 1, 0.5).finished();
    CHECK(top_k(ties, 2) == (Eigen::VectorXd(4) << 1, -1, 0, 0).finished());
}

TEST_CASE("dyadic profile") {
    const DyadicProfile e1 = dyadic_profile(Eigen::VectorXd::Unit(64, 0), 1.5, 4);
    CHECK(e1.blocks.front().k == 1);
    CHECK(e1.blocks.front().delta == doctest::Approx(1.0));
    for (std::size_t b = 1; b < e1.blocks.size(); ++b)
        CHECK(e1.blocks[b].delta == 0.0);

    const double p = 1.5;
    const Eigen::VectorXd w = sample_gaussian_vector(1000, StreamKey(11, StreamRole::auxiliary));
    const DyadicProfile prof = dyadic_profile(w, p, 20);
    CHECK((prof.reassemble() - w).cwiseAbs().maxCoeff() <= 1e-15 * w.cwiseAbs().maxCoeff());
    double mass = 0.0;
    for (const auto& b : prof.blocks) {
        mass += std::pow(b.delta, p);
        CHECK(b.weighted_l2 == doctest::Approx(b.delta * b.direction_l2));
        if (b.delta > 0)
            CHECK(oracle::lp(b.direction, p) == doctest::Approx(1.0));
    }
    const double total = std::pow(oracle::lp(w, p), p);
    CHECK(std::abs(mass - (total - prof.head_p_mass)) <= 1e-9 * total);
    CHECK(mass <= total + 1e-9);
    // k_max is the largest power of two below d / log d = 144.8; boundary is floor(20 / log 50) = 5
    CHECK(prof.k_max == 128);
    CHECK(prof.range_boundary == 5);
    for (const auto& b : prof.blocks)
        CHECK(b.range_tag == (b.k <= 5 ? RangeTag::R2 : RangeTag::R1));
    CHECK_THROWS_AS(dyadic_profile(Eigen::VectorXd::Zero(5), p, 2), ConfigError);
}

TEST_CASE("localization radius") {
    const Design I = identity(8);
    const RStarEstimate r = estimate_r_star(I, NormSpec::lp(2, 8), 200, StreamKey(12, StreamRole::auxiliary));
    CHECK(std::isfinite(r.r_star));
    CHECK(r.r_star <= 2.0);

    const Design X = gaussian_design(4, 64, 5);
    const NormSpec norm = NormSpec::lp(1.5, 64);
    const StreamKey key(13, StreamRole::auxiliary);
    const double lo = estimate_r_star(X, norm, 100, key, {}, 0.3).r_star;
    const double hi = estimate_r_star(X, norm, 100, key, {}, 0.7).r_star;
    CHECK(lo < hi);
}

TEST_CASE("inductive bias") {
    const Design one{Eigen::MatrixXd::Ones(1, 1), {}, {}};
    const InductiveBias b =
        check_inductive_bias(one, NormSpec::lp(2, 1), Eigen::VectorXd::Ones(1), 10000, StreamKey(14, StreamRole::noise));
    CHECK(b.signal_norm == doctest::Approx(1.0));
    CHECK(std::abs(b.noise_norm_mean - kHalfNormalMean) <= 3 * b.noise_norm_stderr);
    CHECK(std::abs(b.ratio - kHalfNormalMean) <= 3 * b.noise_norm_stderr);

    const Design X = gaussian_design(8, 200, 6);
    const NormSpec norm = NormSpec::lp(1.5, 200);
    const Eigen::VectorXd w = Eigen::VectorXd::Unit(200, 0);
    const InductiveBias s = check_inductive_bias(X, norm, w, 50, StreamKey(15, StreamRole::noise));
    CHECK(s.signal_norm <= 1.0 + 1e-9);
}
