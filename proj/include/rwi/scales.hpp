#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace rwi {

// The two scales attached to a walk length n: tau = log n is the decay speed
// of the tail probabilities, t_tau = n / log n the site-count normalization.
struct Scales {
    std::uint64_t n = 0;
    double tau = 0.0;
    double t_tau = 0.0;
};

inline Scales scales_for(std::uint64_t n) {
    if (n < 2)
        throw std::domain_error(
            "scales_for: n < 2 gives tau <= log 2; scale undefined for the asymptotic regime");
    const double tau = std::log(static_cast<double>(n));
    return Scales{n, tau, static_cast<double>(n) / tau};
}

}  // namespace rwi
