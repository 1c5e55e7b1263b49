#include "mni/rng.hpp"

#include "mni/error.hpp"

#include <cmath>
#include <numbers>

namespace mni {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

StreamKey StreamKey::nested(std::uint64_t outer, std::uint64_t inner) const {
    if (outer >= (1ull << 32) || inner >= (1ull << 32))
        throw ConfigError("nested stream index exceeds 32 bits");
    return {seed, stream_id, (outer << 32) | inner};
}

CounterStream::CounterStream(const StreamKey& key) : key_(key) {}

void CounterStream::refill() {
    // The 64-bit Philox key mixes seed and role; the counter holds the block
    // index and the replicate index.
    const std::uint64_t mixed = splitmix64(key_.seed ^ splitmix64(0xA5A5A5A5ull + key_.stream_id));
    const std::array<std::uint32_t, 2> k{static_cast<std::uint32_t>(mixed),
                                         static_cast<std::uint32_t>(mixed >> 32)};
    const std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(key_.replicate_index),
        static_cast<std::uint32_t>(key_.replicate_index >> 32)};
    words_ = philox4x32(ctr, k);
    ++block_;
    next_word_ = 0;
}

double CounterStream::uniform() {
    if (next_word_ > 2)
        refill();
    const std::uint64_t hi = words_[next_word_] >> 5;     // 27 bits
    const std::uint64_t lo = words_[next_word_ + 1] >> 6; // 26 bits
    next_word_ += 2;
    // (k + 1) / 2^53 lies in (0, 1]
    return (static_cast<double>((hi << 26) | lo) + 1.0) * 0x1.0p-53;
}

double CounterStream::normal() {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_normal_ = true;
    return radius * std::cos(angle);
}

double CounterStream::sign() {
    if (next_word_ > 3)
        refill();
    return (words_[next_word_++] & 1u) ? 1.0 : -1.0;
}

void DesignSpec::validate() const {
    if (n < 1 || d < 1)
        throw ConfigError("design dimensions must satisfy n >= 1 and d >= 1");
    if (distribution == Distribution::uniform_bounded && !(gamma > 0.0))
        throw ConfigError("uniform_bounded design requires gamma > 0");
}

Design sample_design(const DesignSpec& spec, const StreamKey& key) {
    spec.validate();
    Design out{Eigen::MatrixXd(spec.n, spec.d), spec, key};
    CounterStream stream(key);
    const double scale = spec.scaling == Scaling::by_sqrt_d ? 1.0 / std::sqrt(double(spec.d)) : 1.0;
    const double half_width = spec.gamma * std::sqrt(3.0);
    // row-major draw order
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < spec.d; ++j) {
            double x = 0.0;
            switch (spec.distribution) {
            case Distribution::gaussian:
                x = stream.normal();
                break;
            case Distribution::rademacher:
                x = stream.sign();
                break;
            case Distribution::uniform_bounded:
                x = (half_width * (2.0 * stream.uniform() - 1.0)) / spec.gamma;
                break;
            }
            out.matrix(i, j) = x * scale;
        }
    }
    return out;
}

void NoiseSpec::validate() const {
    if (kind == NoiseKind::gaussian && !(variance > 0.0))
        throw ConfigError("gaussian noise requires variance > 0");
}

double NoiseSpec::scale() const {
    return kind == NoiseKind::gaussian ? std::sqrt(variance) : 1.0;
}

Eigen::VectorXd sample_noise(const NoiseSpec& noise, std::size_t length, const StreamKey& key) {
    noise.validate();
    if (length < 1)
        throw ConfigError("noise length must be >= 1");
    if (noise.kind == NoiseKind::rademacher)
        return sample_sign_vector(length, key);
    Eigen::VectorXd v = sample_gaussian_vector(length, key);
    v *= std::sqrt(noise.variance);
    return v;
}

Eigen::VectorXd sample_gaussian_vector(std::size_t length, const StreamKey& key) {
    CounterStream stream(key);
    Eigen::VectorXd v(length);
    for (std::size_t i = 0; i < length; ++i)
        v[i] = stream.normal();
    return v;
}

Eigen::VectorXd sample_sign_vector(std::size_t length, const StreamKey& key) {
    CounterStream stream(key);
    Eigen::VectorXd v(length);
    for (std::size_t i = 0; i < length; ++i)
        v[i] = stream.sign();
    return v;
}

std::string to_string(Distribution d) {
    switch (d) {
    case Distribution::gaussian: return "gaussian";
    case Distribution::rademacher: return "rademacher";
    case Distribution::uniform_bounded: return "uniform_bounded";
    }
    return "?";
}

std::string to_string(Scaling s) { return s == Scaling::raw ? "raw" : "by_sqrt_d"; }

std::string to_string(NoiseKind k) { return k == NoiseKind::gaussian ? "gaussian" : "rademacher"; }

Distribution distribution_from_string(const std::string& s) {
    if (s == "gaussian") return Distribution::gaussian;
    if (s == "rademacher") return Distribution::rademacher;
    if (s == "uniform_bounded") return Distribution::uniform_bounded;
    throw ConfigError("unknown design distribution '" + s + "'");
}

Scaling scaling_from_string(const std::string& s) {
    if (s == "raw") return Scaling::raw;
    if (s == "by_sqrt_d") return Scaling::by_sqrt_d;
    throw ConfigError("unknown design scaling '" + s + "'");
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "gaussian") return NoiseKind::gaussian;
    if (s == "rademacher") return NoiseKind::rademacher;
    throw ConfigError("unknown noise kind '" + s + "'");
}

} // namespace mni
