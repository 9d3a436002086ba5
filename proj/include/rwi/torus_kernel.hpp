#pragma once

// Brownian transition density on the square torus [-N/2, N/2)^2. Two dual
// evaluations: a wrapped-Gaussian image sum (fast for small t) and a theta /
// Fourier series (fast for large t), switching at t* = N^2 / (2 pi) where the
// two series decay equally fast. Both factorize per axis, so the 2D kernel is
// a product of 1D sums. Truncation cutoffs are chosen per call so the
// discarded tails are below 1e-15 of the result.

#include <cmath>
#include <stdexcept>

namespace rwi {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct TorusSpec {
    double side = 1.0;
    int image_cutoff = 0;          // 0 = automatic per call
    double fourier_threshold = 0;  // 0 = automatic: side^2 / (2 pi)

    double t_star() const {
        return fourier_threshold > 0 ? fourier_threshold : side * side / (2.0 * M_PI);
    }

    void validate() const {
        if (side <= 0.0) throw std::invalid_argument("TorusSpec: side must be > 0");
        if (image_cutoff < 0) throw std::invalid_argument("TorusSpec: image cutoff must be >= 1");
    }
};

// Reduce a coordinate into the fundamental domain [-N/2, N/2).
inline double reduce_torus(double x, double side) {
    double r = std::fmod(x + side / 2, side);
    if (r < 0) r += side;
    return r - side / 2;
}

inline Vec2 reduce_torus(Vec2 z, double side) {
    return {reduce_torus(z.x, side), reduce_torus(z.y, side)};
}

namespace detail {

// 1D wrapped Gaussian: sum over images of exp(-(x+mN)^2 / 2t) / sqrt(2 pi t).
inline double wrapped_gaussian_1d(double t, double x, double side, int cutoff) {
    int k = cutoff;
    if (k <= 0) {
        // Discarded images satisfy (kN - N/2)^2 / (2t) >= 36 log 10.
        k = static_cast<int>(std::ceil(0.5 + std::sqrt(2.0 * t * 82.9) / side)) + 1;
    }
    const double inv2t = 1.0 / (2.0 * t);
    double sum = 0.0;
    for (int m = -k; m <= k; ++m) {
        const double d = x + m * side;
        sum += std::exp(-d * d * inv2t);
    }
    return sum / std::sqrt(2.0 * M_PI * t);
}

// 1D theta series: (1/N) (1 + 2 sum_k exp(-2 pi^2 k^2 t / N^2) cos(2 pi k x / N)).
inline double theta_series_1d(double t, double x, double side) {
    const double a = 2.0 * M_PI * M_PI * t / (side * side);
    // exp(-a k^2) < 1e-36 beyond the cutoff.
    const int kmax = static_cast<int>(std::ceil(std::sqrt(82.9 / a))) + 1;
    double sum = 1.0;
    for (int k = 1; k <= kmax; ++k)
        sum += 2.0 * std::exp(-a * k * k) * std::cos(2.0 * M_PI * k * x / side);
    return sum / side;
}

inline double kernel_1d(double t, double x, const TorusSpec& spec) {
    x = std::abs(x);  // even in exact arithmetic; make it even in floating point too
    return t <= spec.t_star() ? wrapped_gaussian_1d(t, x, spec.side, spec.image_cutoff)
                              : theta_series_1d(t, x, spec.side);
}

}  // namespace detail

// Torus heat kernel p_t(z). z may be any displacement; it is reduced first.
inline double heat_kernel(double t, Vec2 z, const TorusSpec& spec) {
    spec.validate();
    if (t <= 0.0) throw std::domain_error("heat_kernel: t must be > 0");
    z = reduce_torus(z, spec.side);
    return detail::kernel_1d(t, z.x, spec) * detail::kernel_1d(t, z.y, spec);
}

// Free planar Gaussian kernel, used as the small-t reference.
inline double free_kernel(double t, Vec2 z) {
    if (t <= 0.0) throw std::domain_error("free_kernel: t must be > 0");
    return std::exp(-(z.x * z.x + z.y * z.y) / (2.0 * t)) / (2.0 * M_PI * t);
}

}  // namespace rwi
