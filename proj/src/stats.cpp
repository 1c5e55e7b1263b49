#include "mni/stats.hpp"

#include "mni/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace mni {

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values)
            s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double sample_variance(std::span<const double> values) {
    const std::size_t m = values.size();
    if (m < 2)
        return 0.0;
    const double mean = pairwise_sum(values) / double(m);
    std::vector<double> sq(m);
    for (std::size_t i = 0; i < m; ++i)
        sq[i] = (values[i] - mean) * (values[i] - mean);
    return pairwise_sum(sq) / double(m - 1);
}

Estimate summarize(std::span<const double> values) {
    Estimate e;
    e.samples = values.size();
    if (values.empty())
        return e;
    e.mean = pairwise_sum(values) / double(values.size());
    e.std_error = values.size() > 1 ? std::sqrt(sample_variance(values) / double(values.size())) : 0.0;
    return e;
}

double quantile(std::vector<double> values, double prob) {
    if (values.empty())
        throw EstimatorError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = prob * double(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - double(lo);
    if (frac == 0.0 || values[lo] == values[hi])
        return values[lo];
    return values[lo] + frac * (values[hi] - values[lo]);
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= count)
                        return;
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error)
                            first_error = std::current_exception();
                        next = count;
                        return;
                    }
                }
            });
        }
    }
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace mni
