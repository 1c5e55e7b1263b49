#include "mni/error.hpp"
#include "mni/solvers.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mni;

namespace {

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
    Eigen::MatrixXd m(Eigen::Index(rows.size()), Eigen::Index(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double x : r)
            m(i, j++) = x;
        ++i;
    }
    return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(Eigen::Index(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

MniSolution solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double p, SolverOptions opts = {}) {
    return solve_min_norm({std::cref(X), y, NormSpec::lp(p, std::size_t(X.cols()))}, opts);
}

Design random_design(std::size_t n, std::size_t d, std::uint64_t rep) {
    DesignSpec spec;
    spec.n = n;
    spec.d = d;
    return sample_design(spec, StreamKey(2024, StreamRole::design, rep));
}

} // namespace

TEST_CASE("square systems have a unique interpolator") {
    for (double p : {1.1, 1.5, 2.0}) {
        const auto s = solve(Eigen::MatrixXd::Identity(2, 2), vec({3, 4}), p);
        CHECK(s.ok());
        CHECK((s.weights - vec({3, 4})).norm() < 1e-10);
    }
}

TEST_CASE("closed-form examples") {
    const auto l2 = solve(mat({{1, 1}}), vec({1}), 2.0);
    CHECK(l2.weights[0] == doctest::Approx(0.5));
    CHECK(l2.weights[1] == doctest::Approx(0.5));
    CHECK(l2.norm_value == doctest::Approx(std::sqrt(0.5)));

    const auto kkt = solve(mat({{1, 2}}), vec({1}), 1.5);
    CHECK(kkt.ok());
    CHECK(std::abs(kkt.weights[0] - 1.0 / 9) < 1e-6);
    CHECK(std::abs(kkt.weights[1] - 4.0 / 9) < 1e-6);
    CHECK(kkt.norm_value == doctest::Approx(std::pow(1.0 / 3, 2.0 / 3)).epsilon(1e-10));

    // 1-D line search over the feasible line w = (1 - 2t, t)
    const double t = oracle::golden_min([](double t) { return oracle::lp(vec({1 - 2 * t, t}), 1.5); }, -1, 1);
    CHECK(kkt.weights[1] == doctest::Approx(t).epsilon(1e-6));

    const auto sym = solve(mat({{1, 1, 1}}), vec({1}), 1.25);
    for (int i = 0; i < 3; ++i)
        CHECK(sym.weights[i] == doctest::Approx(1.0 / 3).epsilon(1e-9));
}

TEST_CASE("single-row designs match the closed form") {
    for (double p : {1.1, 1.3, 1.5, 1.8}) {
        for (std::uint64_t rep = 0; rep < 10; ++rep) {
            const Design X = random_design(1, 40, rep);
            const auto s = solve(X.matrix, vec({0.7}), p);
            const Eigen::VectorXd ref = oracle::single_row_mni(X.matrix.row(0).transpose(), 0.7, p);
            CHECK(s.ok());
            CHECK((s.weights - ref).norm() <= 1e-7 * ref.norm());
        }
    }
}

TEST_CASE("two-row systems match a one-dimensional line search") {
    for (double p : {1.2, 1.5}) {
        for (std::uint64_t rep = 0; rep < 10; ++rep) {
            const Design X = random_design(2, 3, 100 + rep);
            const Eigen::VectorXd y = vec({1.0, -0.5});
            const Eigen::VectorXd base = oracle::pinv_solve(X.matrix, y);
            const Eigen::Vector3d a = X.matrix.row(0).transpose(), b = X.matrix.row(1).transpose();
            Eigen::Vector3d null = a.cross(b).normalized();
            const double R = 10 * oracle::lp(base, p);
            const double t = oracle::golden_min([&](double t) { return oracle::lp(base + t * null, p); }, -R, R, 300);
            const double ref = oracle::lp(base + t * null, p);
            const auto s = solve(X.matrix, y, p);
            CHECK(s.norm_value == doctest::Approx(ref).epsilon(1e-9));
        }
    }
}

TEST_CASE("p = 2 agrees with the pseudoinverse") {
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        const std::size_t n = 1 + rep % 16, d = n + 3 + 7 * rep;
        const Design X = random_design(n, d, 300 + rep);
        const Eigen::VectorXd y = sample_gaussian_vector(n, StreamKey(5, StreamRole::noise, rep));
        const auto s = solve(X.matrix, y, 2.0);
        CHECK((s.weights - oracle::pinv_solve(X.matrix, y)).norm() < 1e-8);
    }
}

TEST_CASE("certificates at convergence") {
    for (double p : {1.1, 1.25, 1.5, 1.75}) {
        const Design X = random_design(16, 400, std::uint64_t(p * 1000));
        const Eigen::VectorXd y = sample_gaussian_vector(16, StreamKey(6, StreamRole::noise));
        SolverOptions opts;
        const auto s = solve(X.matrix, y, p, opts);
        REQUIRE(s.ok());
        CHECK(s.feasibility_residual <= opts.tol_feasibility);
        CHECK(s.duality_gap <= opts.tol_kkt * std::max(s.norm_value, 1.0));
        CHECK(s.norm_value == doctest::Approx(oracle::lp(s.weights, p)).epsilon(1e-12));
        CHECK(s.l2_value == doctest::Approx(s.weights.norm()).epsilon(1e-12));
    }
}

TEST_CASE("scale equivariance") {
    const Design X = random_design(8, 100, 7);
    const Eigen::VectorXd y = sample_gaussian_vector(8, StreamKey(7, StreamRole::noise));
    for (double p : {1.2, 1.5}) {
        const auto a = solve(X.matrix, y, p);
        for (double c : {-3.0, 1e-3, 250.0}) {
            const auto b = solve(X.matrix, c * y, p);
            CHECK((b.weights - c * a.weights).norm() <= 1e-8 * std::abs(c) * a.weights.norm());
        }
    }
}

TEST_CASE("l2 norm of the solution moves continuously along the homotopy") {
    const Design X = random_design(8, 64, 9);
    const Eigen::VectorXd y = sample_gaussian_vector(8, StreamKey(9, StreamRole::noise));
    std::vector<double> l2;
    for (int i = 0; i <= 20; ++i)
        l2.push_back(solve(X.matrix, y, 2.0 - 0.045 * i).l2_value);
    std::vector<double> steps;
    for (std::size_t i = 1; i < l2.size(); ++i)
        steps.push_back(std::abs(l2[i] - l2[i - 1]));
    std::vector<double> sorted = steps;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (double s : steps)
        CHECK(s <= 10.0 * median + 1e-12);
}

TEST_CASE("invalid problems") {
    CHECK_THROWS_AS(solve(mat({{1, 2}, {2, 4}}), vec({1, 1}), 1.5), IllPosedError);
    CHECK_THROWS_AS(solve(mat({{1}, {2}}), vec({1, 1}), 1.5), IllPosedError);
    CHECK_THROWS_AS(solve(mat({{1, 2}}), vec({1, 1}), 1.5), DimensionError);
    SolverOptions bad;
    bad.tol_feasibility = 0;
    CHECK_THROWS_AS(solve(mat({{1, 2}}), vec({1}), 1.5, bad), ConfigError);
    const Eigen::MatrixXd X = mat({{1, 2}});
    CHECK_THROWS_AS(solve_min_norm({std::cref(X), vec({1}), NormSpec::l1(2)}), UnsupportedError);
}

TEST_CASE("iteration cap reports max_iter with the best iterate") {
    const Design X = random_design(16, 400, 11);
    const Eigen::VectorXd y = sample_gaussian_vector(16, StreamKey(11, StreamRole::noise));
    SolverOptions opts;
    opts.max_iterations = 1;
    const auto s = solve(X.matrix, y, 1.1, opts);
    CHECK(s.status == SolveStatus::max_iter);
    CHECK(s.weights.size() == 400);
}

TEST_CASE("ball-constrained least l2 interpolation") {
    const auto id = solve_min_l2_in_ball(Design{Eigen::MatrixXd::Identity(3, 3), {}, {}}, Eigen::VectorXd::Unit(3, 0),
                                         NormSpec::lp(1.5, 3), 10.0);
    CHECK((id.weights - Eigen::VectorXd::Unit(3, 0)).norm() < 1e-10);
    CHECK(id.l2_value == doctest::Approx(1.0));

    const Design X11{mat({{1, 1}}), {}, {}};
    const auto loose = solve_min_l2_in_ball(X11, vec({1}), NormSpec::lp(1.5, 2), 10.0);
    CHECK(loose.weights[0] == doctest::Approx(0.5));
    CHECK(loose.weights[1] == doctest::Approx(0.5));

    const Design X12{mat({{1, 2}}), {}, {}};
    const auto infeasible = solve_min_l2_in_ball(X12, vec({1}), NormSpec::lp(1.5, 2), 0.47);
    CHECK(infeasible.status == SolveStatus::infeasible);
    CHECK(infeasible.certificate == doctest::Approx(std::pow(1.0 / 3, 2.0 / 3)).epsilon(1e-8));

    // active ball: oracle minimizes l2 over the feasible line restricted to the ball
    const double p = 1.5, r = 0.485;
    const auto active = solve_min_l2_in_ball(X12, vec({1}), NormSpec::lp(p, 2), r);
    REQUIRE(active.ok());
    CHECK(oracle::lp(active.weights, p) <= r * (1 + 1e-6));
    CHECK(std::abs(active.weights[0] + 2 * active.weights[1] - 1.0) < 1e-9);
    // feasible segment of the line w = (1 - 2t, t): its l2-closest point to the origin
    double lo = 0.0, hi = 0.0;
    {
        const double tp = 4.0 / 9;
        auto g = [&](double t) { return oracle::lp(vec({1 - 2 * t, t}), p) - r; };
        double a = 0.0, b = tp;
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (a + b);
            (g(m) > 0 ? a : b) = m;
        }
        lo = b;
        a = tp;
        b = 1.0;
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (a + b);
            (g(m) > 0 ? b : a) = m;
        }
        hi = a;
    }
    const double t_l2 = std::clamp(0.4, lo, hi); // unconstrained l2 optimum is t = 2/5
    const double ref = vec({1 - 2 * t_l2, t_l2}).norm();
    CHECK(active.l2_value == doctest::Approx(ref).epsilon(1e-5));
}

TEST_CASE("gauge of the truncated projected ball") {
    const Design X = random_design(6, 40, 13);
    const NormSpec norm = NormSpec::lp(1.5, 40);
    const Eigen::VectorXd xi = sample_gaussian_vector(6, StreamKey(13, StreamRole::noise));
    const double full = solve_min_norm({std::cref(X.matrix), xi, norm}).norm_value;
    CHECK(gauge_projected_truncated(X, xi, norm, 1e6) == doctest::Approx(full).epsilon(1e-7));

    const Design I{Eigen::MatrixXd::Identity(4, 4), {}, {}};
    const Eigen::VectorXd v = vec({1, -2, 0.5, 3});
    for (double r : {0.3, 1.0, 4.0})
        CHECK(gauge_projected_truncated(I, v, NormSpec::lp(2, 4), r) ==
              doctest::Approx(std::max(v.norm(), v.norm() / r)).epsilon(1e-9));

    // dense search over the feasible line of X = [[1, 2]]
    const Design X12{mat({{1, 2}}), {}, {}};
    const double r = 0.3;
    const double t = oracle::golden_min(
        [&](double t) {
            const Eigen::VectorXd w = vec({1 - 2 * t, t});
            return std::max(oracle::lp(w, 1.5), w.norm() / r);
        },
        -1, 1, 300);
    const Eigen::VectorXd wt = vec({1 - 2 * t, t});
    const double ref = std::max(oracle::lp(wt, 1.5), wt.norm() / r);
    CHECK(gauge_projected_truncated(X12, vec({1}), NormSpec::lp(1.5, 2), r) == doctest::Approx(ref).epsilon(1e-7));
}

TEST_CASE("brute-force oracle") {
    const Eigen::MatrixXd X = mat({{1, 2}});
    const auto s = brute_force_oracle({std::cref(X), vec({1}), NormSpec::lp(1.5, 2)}, 200);
    CHECK(std::abs(s.weights[0] - 1.0 / 9) < 1e-4);
    CHECK(std::abs(s.weights[1] - 4.0 / 9) < 1e-4);

    const Eigen::MatrixXd X3 = mat({{1, 1, 1}});
    const auto u = brute_force_oracle({std::cref(X3), vec({1}), NormSpec::lp(1.25, 3)}, 200);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(u.weights[i] - 1.0 / 3) < 1e-4);

    const Eigen::MatrixXd sq = mat({{2, 1}, {1, 3}});
    const auto e = brute_force_oracle({std::cref(sq), vec({1, 2}), NormSpec::lp(1.5, 2)}, 10);
    CHECK((sq * e.weights - vec({1, 2})).norm() < 1e-12);

    const Eigen::MatrixXd wide = Eigen::MatrixXd::Ones(1, 6);
    CHECK_THROWS_AS(brute_force_oracle({std::cref(wide), vec({1}), NormSpec::lp(1.5, 6)}, 10), UnsupportedError);
    CHECK_THROWS_AS(brute_force_oracle({std::cref(X), vec({1}), NormSpec::lp(1.5, 2)}, 5000), ConfigError);
}

TEST_CASE("solver objects are reusable and movable") {
    const Design X = random_design(4, 30, 17);
    MinNormSolver a(X.matrix, NormSpec::lp(1.5, 30));
    const Eigen::VectorXd y = vec({1, 2, 3, 4});
    const auto first = a.solve(y);
    MinNormSolver b = std::move(a);
    CHECK(b.solve(y).weights == first.weights);
    CHECK(b.design().cols() == 30);
}
