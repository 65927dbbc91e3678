#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace she {

/// Pairwise (tree) summation; the result depends only on the order of xs.
double pairwise_sum(std::span<const double> xs);

/// Monte-Carlo summary with a normal-approximation 95% interval.
struct EnsembleStat {
    std::int64_t n = 0;
    double mean = 0.0;
    double variance = 0.0;  ///< Unbiased sample variance.
    double ci_halfwidth = 0.0;  ///< 1.96 sqrt(variance / n).

    double standard_error() const;
};

EnsembleStat summarize(std::span<const double> xs);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Wilson score interval for k successes out of n trials at normal quantile z.
Interval wilson_interval(std::int64_t k, std::int64_t n, double z = 1.96);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least squares; stderr from the residuals (needs >= 3 points).
LinearFit ols_fit(std::span<const double> x, std::span<const double> y);

/// Weighted least squares with known per-point variances (weights 1/var);
/// the slope stderr is sqrt([(X'WX)^{-1}]_{11}).
LinearFit wls_fit(std::span<const double> x, std::span<const double> y, std::span<const double> variances);

/// Pearson correlation of paired samples.
double correlation(std::span<const double> a, std::span<const double> b);

}  // namespace she
