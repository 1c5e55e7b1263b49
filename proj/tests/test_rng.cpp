#include "mni/error.hpp"
#include "mni/rng.hpp"
#include "mni/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace mni;

TEST_CASE("philox known-answer vectors") {
    using W = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("identical keys give identical designs") {
    DesignSpec spec;
    spec.n = 2;
    spec.d = 2;
    const StreamKey k(42, StreamRole::design, 3);
    CHECK(sample_design(spec, k).matrix == sample_design(spec, k).matrix);
    CHECK(sample_design(spec, k).matrix != sample_design(spec, k.with_replicate(4)).matrix);
    CHECK(sample_design(spec, k).matrix != sample_design(spec, StreamKey(43, StreamRole::design, 3)).matrix);
}

TEST_CASE("draws do not depend on evaluation order") {
    DesignSpec spec;
    spec.n = 3;
    spec.d = 5;
    std::vector<Eigen::MatrixXd> forward(16), backward(16), threaded(16);
    for (std::size_t i = 0; i < 16; ++i)
        forward[i] = sample_design(spec, StreamKey(9, StreamRole::design, i)).matrix;
    for (std::size_t i = 16; i-- > 0;)
        backward[i] = sample_design(spec, StreamKey(9, StreamRole::design, i)).matrix;
    parallel_for(16, 4, [&](std::size_t i) { threaded[i] = sample_design(spec, StreamKey(9, StreamRole::design, i)).matrix; });
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(forward[i] == backward[i]);
        CHECK(forward[i] == threaded[i]);
    }
}

TEST_CASE("nested keys are distinct for distinct pairs") {
    const StreamKey base(1, StreamRole::noise);
    std::set<std::uint64_t> seen;
    for (std::uint64_t o = 0; o < 20; ++o)
        for (std::uint64_t i = 0; i < 20; ++i)
            seen.insert(base.nested(o, i).replicate_index);
    CHECK(seen.size() == 400);
}

TEST_CASE("rademacher design takes values in {-1, +1}") {
    DesignSpec spec;
    spec.n = 4;
    spec.d = 4;
    spec.distribution = Distribution::rademacher;
    const auto X = sample_design(spec, StreamKey(5, StreamRole::design)).matrix;
    for (Eigen::Index i = 0; i < X.size(); ++i)
        CHECK(std::abs(X.data()[i]) == 1.0);
}

TEST_CASE("gaussian design has identity column covariance") {
    DesignSpec spec;
    spec.n = 200;
    spec.d = 50;
    const auto X = sample_design(spec, StreamKey(11, StreamRole::design)).matrix;
    const Eigen::MatrixXd cov = X.transpose() * X / 200.0;
    const Eigen::MatrixXd diff = cov - Eigen::MatrixXd::Identity(50, 50);
    CHECK(diff.cwiseAbs().maxCoeff() <= 5.0 / std::sqrt(200.0));
}

TEST_CASE("uniform_bounded design is centered with unit variance") {
    DesignSpec spec;
    spec.n = 400;
    spec.d = 250;
    spec.distribution = Distribution::uniform_bounded;
    spec.gamma = 2.5;
    const auto X = sample_design(spec, StreamKey(12, StreamRole::design)).matrix;
    CHECK(X.cwiseAbs().maxCoeff() <= std::sqrt(3.0) + 1e-12);
    const double n = double(X.size());
    const double mean = X.sum() / n;
    const double var = X.array().square().sum() / n - mean * mean;
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(n));
    // Var(U^2) = 4/5 for unit-variance uniform entries
    CHECK(std::abs(var - 1.0) <= 4.0 * std::sqrt(0.8 / n));
}

TEST_CASE("by_sqrt_d scaling divides by sqrt d") {
    DesignSpec raw;
    raw.n = 3;
    raw.d = 16;
    DesignSpec scaled = raw;
    scaled.scaling = Scaling::by_sqrt_d;
    const StreamKey k(3, StreamRole::design);
    CHECK((sample_design(raw, k).matrix / 4.0 - sample_design(scaled, k).matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise laws") {
    NoiseSpec g;
    const StreamKey k(7, StreamRole::noise);
    CHECK(sample_noise(g, 3, k) == sample_noise(g, 3, k));

    NoiseSpec r;
    r.kind = NoiseKind::rademacher;
    const auto s = sample_noise(r, 100000, k);
    CHECK(std::abs(s.mean()) <= 0.01);
    CHECK((s.array().abs() == 1.0).all());

    NoiseSpec g4;
    g4.variance = 4.0;
    const auto v = sample_noise(g4, 100000, k);
    const double var = (v.array() - v.mean()).square().sum() / double(v.size() - 1);
    CHECK(var >= 3.9);
    CHECK(var <= 4.1);
}

TEST_CASE("standard normal moments") {
    const auto z = sample_gaussian_vector(100000, StreamKey(21, StreamRole::auxiliary));
    const double m = double(z.size());
    CHECK(std::abs(z.mean()) <= 4.0 / std::sqrt(m));
    const double second = z.array().square().sum() / m;
    CHECK(std::abs(second - 1.0) <= 4.0 * std::sqrt(2.0 / m));
    const double fourth = z.array().pow(4).sum() / m;
    CHECK(std::abs(fourth - 3.0) <= 4.0 * std::sqrt(96.0 / m));
}

TEST_CASE("uniform draws lie in (0, 1]") {
    CounterStream s(StreamKey(1, 2, 3));
    double lo = 1.0, sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = s.uniform();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
        lo = std::min(lo, u);
        sum += u;
    }
    CHECK(std::abs(sum / 10000.0 - 0.5) <= 4.0 * std::sqrt(1.0 / 12.0 / 10000.0));
}

TEST_CASE("invalid specs are configuration errors") {
    DesignSpec bad;
    bad.n = 0;
    CHECK_THROWS_AS(sample_design(bad, StreamKey()), ConfigError);
    DesignSpec u;
    u.distribution = Distribution::uniform_bounded;
    u.gamma = 0.0;
    CHECK_THROWS_AS(u.validate(), ConfigError);
    NoiseSpec n;
    n.variance = -1.0;
    CHECK_THROWS_AS(sample_noise(n, 3, StreamKey()), ConfigError);
    CHECK_THROWS_AS(sample_noise(NoiseSpec{}, 0, StreamKey()), ConfigError);
    CHECK_THROWS_AS(distribution_from_string("cauchy"), ConfigError);
}

TEST_CASE("enum names round-trip") {
    for (auto d : {Distribution::gaussian, Distribution::rademacher, Distribution::uniform_bounded})
        CHECK(distribution_from_string(to_string(d)) == d);
    for (auto s : {Scaling::raw, Scaling::by_sqrt_d})
        CHECK(scaling_from_string(to_string(s)) == s);
    for (auto k : {NoiseKind::gaussian, NoiseKind::rademacher})
        CHECK(noise_kind_from_string(to_string(k)) == k);
}
