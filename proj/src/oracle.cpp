#include "mni/error.hpp"
#include "mni/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace mni {

namespace {

double golden_section(const std::function<double(double)>& f, double a, double b, double& best_value) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 80 && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    best_value = f(x);
    return x;
}

} // namespace

MniSolution brute_force_oracle(const InterpolationProblem& problem, int resolution) {
    problem.validate();
    const Eigen::MatrixXd& X = problem.design.get();
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (resolution < 2 || resolution > 1000)
        throw ConfigError("brute-force resolution must lie in [2, 1000]");
    if (d < n)
        throw IllPosedError("design has more rows than columns");
    const Eigen::Index k = d - n;
    if (k > 3)
        throw UnsupportedError("brute-force oracle supports null spaces of dimension <= 3");

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
    if (cod.rank() < n)
        throw IllPosedError("design matrix is rank deficient");
    const Eigen::VectorXd base = cod.solve(problem.targets);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X.transpose());
    const Eigen::MatrixXd q_full = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd null_basis = q_full.rightCols(k);

    const double p = problem.norm.exponent();
    auto objective = [&](const Eigen::VectorXd& t) {
        return lr_norm(Eigen::VectorXd(base + null_basis * t), p);
    };

    Eigen::VectorXd best_t = Eigen::VectorXd::Zero(k);
    double best = objective(best_t);
    if (k > 0) {
        // ||w - base||_2 <= ||w||_2 <= ||w||_p <= ||base||_p for the optimum w
        // Grid search, then repeated grids over a shrinking box around the
        // incumbent. The box only shrinks when the incumbent is interior.
        const double radius = best;
        Eigen::VectorXd center = Eigen::VectorXd::Zero(k);
        double half = radius;
        int points = resolution;
        Eigen::VectorXd t(k);
        double spacing = 2.0 * half / double(points - 1);
        for (int level = 0; level < 400 && half > 1e-13 * (1.0 + radius); ++level) {
            spacing = 2.0 * half / double(points - 1);
            std::vector<int> idx(static_cast<std::size_t>(k), 0);
            bool on_boundary = false;
            for (;;) {
                for (Eigen::Index j = 0; j < k; ++j)
                    t[j] = center[j] - half + spacing * idx[static_cast<std::size_t>(j)];
                const double v = objective(t);
                if (v < best) {
                    best = v;
                    best_t = t;
                    on_boundary = std::any_of(idx.begin(), idx.end(), [&](int i) { return i == 0 || i == points - 1; });
                }
                Eigen::Index j = 0;
                while (j < k && ++idx[static_cast<std::size_t>(j)] == points) {
                    idx[static_cast<std::size_t>(j)] = 0;
                    ++j;
                }
                if (j == k)
                    break;
            }
            center = best_t;
            if (!on_boundary)
                half = 3.0 * spacing;
            points = std::min(resolution, 21);
        }

        // Polish along the axes and the diagonal directions of the null space.
        std::vector<Eigen::VectorXd> directions;
        const int combos = static_cast<int>(std::pow(3, k));
        for (int code = 1; code < combos; ++code) {
            Eigen::VectorXd dir(k);
            int c = code;
            for (Eigen::Index j = 0; j < k; ++j) {
                dir[j] = double(c % 3) - 1.0;
                c /= 3;
            }
            bool canonical = false;
            for (Eigen::Index j = 0; j < k; ++j) {
                if (dir[j] != 0.0) {
                    canonical = dir[j] > 0.0;
                    break;
                }
            }
            if (canonical)
                directions.push_back(dir.normalized());
        }
        // Line searches along the fixed directions, seeded random directions
        // and the net move of the previous sweep, which follows narrow valleys.
        std::mt19937_64 gen(0x5eed);
        std::normal_distribution<double> gauss;
        Eigen::VectorXd last_move = Eigen::VectorXd::Zero(k);
        double half_width = std::max(spacing, radius / double(resolution));
        for (int sweep = 0; sweep < 4000 && half_width > 1e-13 * (1.0 + radius); ++sweep) {
            const double before = best;
            const Eigen::VectorXd start = best_t;
            std::vector<Eigen::VectorXd> sweep_dirs = directions;
            for (int r = 0; r < 8; ++r) {
                Eigen::VectorXd dir(k);
                for (Eigen::Index j = 0; j < k; ++j)
                    dir[j] = gauss(gen);
                sweep_dirs.push_back(dir.normalized());
            }
            if (last_move.norm() > 0.0)
                sweep_dirs.push_back(last_move.normalized());
            for (const Eigen::VectorXd& dir : sweep_dirs) {
                auto along = [&](double s) { return objective(Eigen::VectorXd(best_t + s * dir)); };
                double value;
                const double s = golden_section(along, -half_width, half_width, value);
                if (value < best) {
                    best = value;
                    best_t += s * dir;
                }
            }
            last_move = best_t - start;
            if (before - best <= 1e-15 * best)
                half_width *= 0.5;
            else
                half_width = std::min(2.0 * half_width, radius);
        }
    }

    MniSolution out;
    out.weights = base + null_basis * best_t;
    out.norm_value = lr_norm(out.weights, p);
    out.l2_value = out.weights.norm();
    out.feasibility_residual = (X * out.weights - problem.targets).norm() / std::max(problem.targets.norm(), 1.0);
    out.status = SolveStatus::converged;
    return out;
}

} // namespace mni
