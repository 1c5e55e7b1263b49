#pragma once

// Counter-based random streams (Philox4x32-10) and samplers for covariate
// matrices and noise vectors. Every draw is a pure function of a StreamKey
// and a position, so replicate evaluation order never changes results.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>

namespace mni {

/// Role labels used as stream ids.
enum class StreamRole : std::uint32_t {
    design = 1,
    noise = 2,
    signs = 3,
    fixed_noise = 4,
    multistart = 5,
    auxiliary = 6,
};

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t stream_id = 0;
    std::uint64_t replicate_index = 0;

    StreamKey() = default;
    StreamKey(std::uint64_t s, std::uint32_t id, std::uint64_t rep = 0)
        : seed(s), stream_id(id), replicate_index(rep) {}
    StreamKey(std::uint64_t s, StreamRole role, std::uint64_t rep = 0)
        : seed(s), stream_id(static_cast<std::uint32_t>(role)), replicate_index(rep) {}

    /// Same seed, different role.
    StreamKey with_role(StreamRole role) const { return {seed, role, replicate_index}; }
    StreamKey with_replicate(std::uint64_t rep) const { return {seed, stream_id, rep}; }

    /// Key of the (outer, inner) cell of a nested Monte Carlo loop.
    StreamKey nested(std::uint64_t outer, std::uint64_t inner) const;

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// One Philox4x32-10 block for a 128-bit counter under a 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Sequential reader over the block sequence of a single key.
class CounterStream {
public:
    explicit CounterStream(const StreamKey& key);

    /// Uniform on (0, 1], 53 random bits.
    double uniform();
    double normal();
    /// +1 or -1 with equal probability.
    double sign();

    std::uint64_t blocks_consumed() const { return block_; }

private:
    void refill();

    StreamKey key_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> words_{};
    int next_word_ = 4;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

enum class Distribution { gaussian, rademacher, uniform_bounded };
enum class Scaling { raw, by_sqrt_d };

struct DesignSpec {
    std::size_t n = 1;
    std::size_t d = 1;
    Distribution distribution = Distribution::gaussian;
    double gamma = 1.0; ///< only used by uniform_bounded
    Scaling scaling = Scaling::raw;

    void validate() const;
};

struct Design {
    Eigen::MatrixXd matrix;
    DesignSpec spec;
    StreamKey key;
};

Design sample_design(const DesignSpec& spec, const StreamKey& key);

enum class NoiseKind { gaussian, rademacher };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double variance = 1.0; ///< gaussian only; rademacher has unit variance

    void validate() const;
    double scale() const;
};

Eigen::VectorXd sample_noise(const NoiseSpec& noise, std::size_t length, const StreamKey& key);

/// Standard Gaussian vector, the randomizer used by every Gaussian-mean estimator.
Eigen::VectorXd sample_gaussian_vector(std::size_t length, const StreamKey& key);
Eigen::VectorXd sample_sign_vector(std::size_t length, const StreamKey& key);

std::string to_string(Distribution d);
std::string to_string(Scaling s);
std::string to_string(NoiseKind k);
Distribution distribution_from_string(const std::string& s);
Scaling scaling_from_string(const std::string& s);
NoiseKind noise_kind_from_string(const std::string& s);

} // namespace mni
