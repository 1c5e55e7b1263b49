#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mni {

/// Mean and standard error of a Monte Carlo estimate.
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    std::size_t failures = 0;
};

/// Pairwise (cascade) summation; the result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

/// Mean and standard error (sample sd / sqrt(m)) of finite values.
Estimate summarize(std::span<const double> values);

/// Unbiased sample variance.
double sample_variance(std::span<const double> values);

/// Linear-interpolation quantile (type 7). +inf entries take part in the ordering.
double quantile(std::vector<double> values, double prob);

/// Run `body(i)` for i in [0, count) on up to `workers` threads. Each index is
/// evaluated exactly once; results must be written to per-index slots.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

} // namespace mni
