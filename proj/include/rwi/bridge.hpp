#pragma once

// Brownian-bridge occupation density phi_eps on the torus and the pair
// intersection functional built from it.
//
//   phi_eps(y, z) = Integral_0^eps p_s(-y) p_{eps-s}(z) ds / p_eps(z - y)
//
// The integrand concentrates at both endpoints (the kernels peak as s -> 0
// and s -> eps), so each half of [0, eps] is mapped by s = (eps/2) sigma^2,
// which clusters quadrature nodes there; Gauss-Legendre then refines by node
// doubling until two successive levels agree to 1e-6 relative.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rwi/errors.hpp"
#include "rwi/torus_kernel.hpp"

namespace rwi {

namespace detail {

struct GaussLegendreRule {
    std::vector<double> nodes;    // on (0, 1)
    std::vector<double> weights;
};

// Nodes/weights on [0, 1] by Newton iteration on the Legendre polynomials.
inline GaussLegendreRule make_gauss_legendre(int n) {
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = 0.5 * (1.0 - x);
        rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
        const double w = 1.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

inline const GaussLegendreRule& gauss_legendre(int n) {
    thread_local std::map<int, GaussLegendreRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
    return it->second;
}

// One quadrature level of the numerator integral with n nodes per half.
inline double bridge_numerator(Vec2 y, Vec2 z, double eps, const TorusSpec& spec, int n) {
    const GaussLegendreRule& rule = gauss_legendre(n);
    const double half = eps / 2.0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double sigma = rule.nodes[i];
        const double jac = eps * sigma * rule.weights[i];
        const double s_lo = half * sigma * sigma;       // near s = 0
        const double s_hi = eps - half * sigma * sigma;  // near s = eps
        sum += jac * heat_kernel(s_lo, {-y.x, -y.y}, spec) * heat_kernel(eps - s_lo, z, spec);
        sum += jac * heat_kernel(s_hi, {-y.x, -y.y}, spec) * heat_kernel(eps - s_hi, z, spec);
    }
    return sum;
}

}  // namespace detail

struct QuadratureDiagnostics {
    int nodes_per_half = 0;
    double rel_change = 0.0;
    bool converged = false;
};

inline double bridge_occupation(Vec2 y, Vec2 z, double eps, const TorusSpec& spec,
                                QuadratureDiagnostics* diag = nullptr) {
    spec.validate();
    if (eps <= 0.0) throw std::domain_error("bridge_occupation: eps must be > 0");
    y = reduce_torus(y, spec.side);
    z = reduce_torus(z, spec.side);

    const double denom = heat_kernel(eps, {z.x - y.x, z.y - y.y}, spec);
    constexpr double kRelTol = 1e-6;
    constexpr int kMaxNodes = 2048;
    double prev = detail::bridge_numerator(y, z, eps, spec, 32);
    for (int n = 64; n <= kMaxNodes; n *= 2) {
        const double cur = detail::bridge_numerator(y, z, eps, spec, n);
        const double rel = std::abs(cur - prev) / std::max(std::abs(cur), 1e-300);
        if (rel <= kRelTol) {
            if (diag) *diag = {n, rel, true};
            return cur / denom;
        }
        prev = cur;
    }
    const double rel = std::abs(prev);
    if (diag) *diag = {kMaxNodes, rel, false};
    throw NumericalError(
        "bridge_occupation: quadrature did not converge to 1e-6 relative at " +
        std::to_string(kMaxNodes) + " nodes per half (y=(" + std::to_string(y.x) + "," +
        std::to_string(y.y) + "), z=(" + std::to_string(z.x) + "," + std::to_string(z.y) +
        "), eps=" + std::to_string(eps) + "); endpoint singularity suspected");
}

// ---------------------------------------------------------------------------
// Pair measures and the intersection functional
// ---------------------------------------------------------------------------

struct PairMeasure {
    struct Atom {
        Vec2 y;
        Vec2 z;
        double weight = 0.0;
    };
    std::vector<Atom> atoms;

    void validate() const {
        double sum = 0.0;
        for (const Atom& a : atoms) {
            if (a.weight < 0.0) throw std::invalid_argument("PairMeasure: negative weight");
            sum += a.weight;
        }
        if (std::abs(sum - 1.0) > 1e-10)
            throw std::invalid_argument("PairMeasure: weights must sum to 1");
    }
};

// Phi_eta(mu1, mu2) = Integral over x of
//   prod_i (1 - exp(-eta * 2 pi * Integral phi_eps(y-x, z-x) dmu_i)),
// evaluated on a uniform midpoint grid of resolution x_resolution per axis.
inline double phi_functional(const PairMeasure& mu1, const PairMeasure& mu2, double eta,
                             double eps, const TorusSpec& spec, int x_resolution) {
    spec.validate();
    mu1.validate();
    mu2.validate();
    if (eta <= 0.0) throw std::invalid_argument("phi_functional: eta must be > 0");
    if (eps <= 0.0) throw std::invalid_argument("phi_functional: eps must be > 0");
    if (x_resolution < 2) throw std::invalid_argument("phi_functional: resolution too small");

    const double side = spec.side;
    const double h = side / x_resolution;
    auto measure_integral = [&](const PairMeasure& mu, Vec2 x) {
        double acc = 0.0;
        for (const auto& atom : mu.atoms) {
            if (atom.weight == 0.0) continue;
            const Vec2 dy = reduce_torus({atom.y.x - x.x, atom.y.y - x.y}, side);
            const Vec2 dz = reduce_torus({atom.z.x - x.x, atom.z.y - x.y}, side);
            acc += atom.weight * bridge_occupation(dy, dz, eps, spec);
        }
        return 2.0 * M_PI * acc;
    };

    double total = 0.0;
    for (int i = 0; i < x_resolution; ++i) {
        for (int j = 0; j < x_resolution; ++j) {
            const Vec2 x{-side / 2 + (i + 0.5) * h, -side / 2 + (j + 0.5) * h};
            const double f1 = 1.0 - std::exp(-eta * measure_integral(mu1, x));
            const double f2 = 1.0 - std::exp(-eta * measure_integral(mu2, x));
            total += f1 * f2;
        }
    }
    return total * h * h;
}

}  // namespace rwi
