#pragma once

// Exponential integral E1 and the first-hitting-time asymptotic built on it.
// E1 uses the alternating series below argument 1 and a modified-Lentz
// continued fraction above; the two branches agree to full precision at the
// crossover.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "rwi/lattice.hpp"

namespace rwi {

inline double expint_e1(double x) {
    if (x <= 0.0) throw std::domain_error("expint_e1: argument must be > 0");
    constexpr double kEuler = 0.5772156649015329;
    if (x < 1.0) {
        // E1(x) = -gamma - log x + sum_{k>=1} (-1)^(k+1) x^k / (k k!)
        double sum = -kEuler - std::log(x);
        double term = 1.0;
        for (int k = 1; k <= 60; ++k) {
            term *= -x / k;
            const double del = -term / k;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-17) break;
        }
        return sum;
    }
    // Modified Lentz on E1(x) = e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...))).
    constexpr double kTiny = 1e-300;
    double b = x + 1.0;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 200; ++i) {
        const double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) <= 1e-16) break;
    }
    return h * std::exp(-x);
}

// First-hitting asymptotic for a planar walk with per-coordinate variance
// sigma2: P_0(H_x < n) ~ E1(|x|^2 / (2 n sigma2)) / log n. Valid for
// 0 < |x| <~ sqrt(n); the window is not enforced beyond x != 0.
inline double hitting_prob_asymptotic(LatticePoint x, std::uint64_t n, double sigma2 = 1.0) {
    if (x.x == 0 && x.y == 0)
        throw std::domain_error("hitting_prob_asymptotic: x = 0 (the walk starts there)");
    if (n < 2) throw std::domain_error("hitting_prob_asymptotic: n must be >= 2");
    if (sigma2 <= 0.0)
        throw std::domain_error("hitting_prob_asymptotic: variance must be > 0");
    const double r2 = static_cast<double>(x.x) * x.x + static_cast<double>(x.y) * x.y;
    const double arg = r2 / (2.0 * static_cast<double>(n) * sigma2);
    return expint_e1(arg) / std::log(static_cast<double>(n));
}

}  // namespace rwi
