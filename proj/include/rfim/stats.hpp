#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace rfim {

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

inline double mean_of(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Unbiased sample variance; 0 for fewer than two values.
inline double variance_of(std::span<const double> v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

/// Mean and sd/√n over independent values.
inline Estimate estimate_of(std::span<const double> v)
{
    return {mean_of(v), v.size() < 2 ? 0.0 : std::sqrt(variance_of(v) / static_cast<double>(v.size()))};
}

/// Batch-means estimate for a correlated series.
inline Estimate batch_means(std::span<const double> series, std::size_t batches = 50)
{
    if (series.size() < 2 * batches) batches = series.size() / 2;
    if (batches < 2) return {mean_of(series), 0.0};
    const std::size_t len = series.size() / batches;
    std::vector<double> bm(batches);
    for (std::size_t b = 0; b < batches; ++b) bm[b] = mean_of(series.subspan(b * len, len));
    return {mean_of(series), std::sqrt(variance_of(bm) / static_cast<double>(batches))};
}

} // namespace rfim
