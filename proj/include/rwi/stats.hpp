#pragma once

// Small statistics toolbox: Wilson score intervals (the default for binomial
// tails near 0), weighted least squares for the trend regression, and a
// percentile bootstrap for splitting-run aggregates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rwi/rng.hpp"

namespace rwi {

inline constexpr double kZTwoSided95 = 1.959963984540054;   // Phi^-1(0.975)
inline constexpr double kZOneSided95 = 1.6448536269514722;  // Phi^-1(0.95)

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                double z = kZTwoSided95) {
    if (trials == 0) throw std::invalid_argument("wilson_interval: zero trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = (z / denom) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Upper bound reported when zero successes were observed: one-sided Wilson.
inline double wilson_upper_zero(std::uint64_t trials, double z = kZOneSided95) {
    return wilson_interval(0, trials, z).high;
}

struct WlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_var = 0.0;
};

// Weighted least squares of y against x with weights w (ideally 1/sigma^2).
// slope_var is the textbook 1/sum w (x - xbar_w)^2.
inline WlsFit weighted_least_squares(std::span<const double> x, std::span<const double> y,
                                     std::span<const double> w) {
    if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
        throw std::invalid_argument("weighted_least_squares: need >= 2 matched points");
    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
    }
    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx == 0.0) throw std::invalid_argument("weighted_least_squares: degenerate abscissae");
    WlsFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    fit.slope_var = 1.0 / sxx;
    return fit;
}

// Percentile bootstrap of the mean over independent run values.
inline Interval bootstrap_mean_interval(std::span<const double> values, std::uint64_t seed,
                                        int resamples = 1000, double alpha = 0.05) {
    if (values.empty()) throw std::invalid_argument("bootstrap_mean_interval: no values");
    if (values.size() == 1) return {values[0], values[0]};
    Xoshiro256pp rng(seed);
    std::vector<double> means(resamples);
    for (int b = 0; b < resamples; ++b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            sum += values[rng.next() % values.size()];
        means[b] = sum / static_cast<double>(values.size());
    }
    std::sort(means.begin(), means.end());
    const auto lo_idx = static_cast<std::size_t>(std::floor(alpha / 2.0 * (resamples - 1)));
    const auto hi_idx = static_cast<std::size_t>(std::ceil((1.0 - alpha / 2.0) * (resamples - 1)));
    return {means[lo_idx], means[hi_idx]};
}

}  // namespace rwi
