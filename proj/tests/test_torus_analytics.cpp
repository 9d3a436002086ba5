#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rwi/bridge.hpp"
#include "rwi/expint.hpp"
#include "rwi/torus_kernel.hpp"

using namespace rwi;

namespace {

std::vector<double> kernel_grid(double t, const TorusSpec& spec, int res) {
    std::vector<double> grid(static_cast<std::size_t>(res) * res);
    const double h = spec.side / res;
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j)
            grid[static_cast<std::size_t>(i) * res + j] =
                heat_kernel(t, {-spec.side / 2 + (i + 0.5) * h, -spec.side / 2 + (j + 0.5) * h},
                            spec);
    return grid;
}

}  // namespace

TEST_CASE("heat kernel relaxes to the uniform density") {
    const TorusSpec spec{4.0};
    const double t = 100.0 * spec.side * spec.side;
    for (double x : {-1.7, 0.0, 0.3, 1.9})
        for (double y : {-1.1, 0.2, 1.5})
            REQUIRE(std::abs(heat_kernel(t, {x, y}, spec) - 1.0 / 16.0) < 1e-10);
}

TEST_CASE("heat kernel is even") {
    const TorusSpec spec{5.0};
    for (double t : {0.01, 0.4, 3.0, 40.0})
        for (double x : {-2.3, -0.7, 0.41, 1.9})
            for (double y : {-1.9, 0.13, 2.2}) {
                const double a = heat_kernel(t, {x, y}, spec);
                const double b = heat_kernel(t, {-x, -y}, spec);
                REQUIRE(a == b);
            }
}

TEST_CASE("small-time kernel matches the free planar Gaussian") {
    const TorusSpec spec{4.0};
    const double t = 0.01 * spec.side * spec.side;
    const Vec2 z{0.1 * spec.side, 0.0};
    REQUIRE(heat_kernel(t, z, spec) ==
            Catch::Approx(free_kernel(t, z)).epsilon(1e-8));
}

TEST_CASE("kernel normalizes to one across four decades of t") {
    const TorusSpec spec{4.0};
    const int res = 64;
    const double h2 = (spec.side / res) * (spec.side / res);
    for (double factor : {0.01, 0.1, 1.0, 10.0}) {
        const double t = factor * spec.side * spec.side;
        double sum = 0.0;
        for (double v : kernel_grid(t, spec, res)) sum += v;
        REQUIRE(sum * h2 == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("image and Fourier branches agree at the switchover") {
    const TorusSpec spec{4.0};
    const double ts = spec.t_star();
    for (double x = -1.93; x < 2.0; x += 0.31) {
        const double a = detail::wrapped_gaussian_1d(ts, x, spec.side, 0);
        const double b = detail::theta_series_1d(ts, x, spec.side);
        REQUIRE(std::abs(a - b) <= 1e-10 * std::abs(b));
    }
}

TEST_CASE("Chapman-Kolmogorov holds on a 64x64 grid") {
    const TorusSpec spec{4.0};
    const int res = 64;
    const double h2 = (spec.side / res) * (spec.side / res);
    const double t = 0.05 * spec.side * spec.side;
    const double s = 0.3 * spec.side * spec.side;  // crosses the branch switchover
    const auto pt = kernel_grid(t, spec, res);
    const auto ps = kernel_grid(s, spec, res);
    const auto pts = kernel_grid(t + s, spec, res);

    double max_err = 0.0;
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            double conv = 0.0;
            for (int a = 0; a < res; ++a)
                for (int b = 0; b < res; ++b) {
                    const int ia = (i - a + res) % res;
                    const int jb = (j - b + res) % res;
                    conv += pt[static_cast<std::size_t>(a) * res + b] *
                            ps[static_cast<std::size_t>(ia) * res + jb];
                }
            max_err = std::max(std::abs(conv * h2 - pts[static_cast<std::size_t>(i) * res + j]),
                               max_err);
        }
    REQUIRE(max_err < 1e-6);
}

TEST_CASE("heat kernel rejects non-positive times") {
    const TorusSpec spec{4.0};
    REQUIRE_THROWS_AS(heat_kernel(0.0, {0, 0}, spec), std::domain_error);
    REQUIRE_THROWS_AS(heat_kernel(-1.0, {0, 0}, spec), std::domain_error);
}

TEST_CASE("bridge occupation is swap symmetric") {
    const TorusSpec spec{4.0};
    const Vec2 y{0.3, -0.2}, z{-0.9, 0.55};
    const double a = bridge_occupation(y, z, 0.25, spec);
    const double b = bridge_occupation(z, y, 0.25, spec);
    REQUIRE(a == Catch::Approx(b).epsilon(1e-10));
    REQUIRE(a >= 0.0);
}

TEST_CASE("bridge occupation matches a dense trapezoid reference") {
    const TorusSpec spec{4.0};
    const Vec2 y{0.3, 0.0}, z{0.0, 0.4};
    const double eps = 0.25;
    const double got = bridge_occupation(y, z, eps, spec);

    // Reference: plain trapezoid on 40000 uniform s-nodes; the integrand
    // vanishes at both endpoints for nonzero y, z.
    const int nodes = 40000;
    const double ds = eps / nodes;
    double acc = 0.0;
    for (int i = 1; i < nodes; ++i) {
        const double s = i * ds;
        acc += heat_kernel(s, {-y.x, -y.y}, spec) * heat_kernel(eps - s, z, spec);
    }
    const double reference =
        acc * ds / heat_kernel(eps, {z.x - y.x, z.y - y.y}, spec);
    REQUIRE(got == Catch::Approx(reference).epsilon(1e-5));
}

TEST_CASE("bridge occupation mass integrates to eps") {
    const TorusSpec spec{4.0};
    const Vec2 y{0.3, 0.1}, z{-0.5, 0.4};
    const double eps = 0.25;
    const int res = 256;
    const double h = spec.side / res;
    double sum = 0.0;
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            const Vec2 x{-spec.side / 2 + (i + 0.5) * h, -spec.side / 2 + (j + 0.5) * h};
            sum += bridge_occupation({y.x - x.x, y.y - x.y}, {z.x - x.x, z.y - x.y}, eps, spec);
        }
    REQUIRE(sum * h * h == Catch::Approx(eps).epsilon(1e-4));
}

TEST_CASE("bridge occupation validates eps and reports diagnostics") {
    const TorusSpec spec{4.0};
    REQUIRE_THROWS_AS(bridge_occupation({0.1, 0}, {0.2, 0}, 0.0, spec), std::domain_error);
    QuadratureDiagnostics diag;
    bridge_occupation({0.4, 0}, {0, 0.3}, 0.2, spec, &diag);
    REQUIRE(diag.converged);
    REQUIRE(diag.nodes_per_half >= 64);
    REQUIRE(diag.rel_change <= 1e-6);
}

TEST_CASE("pair measures validate their weights") {
    PairMeasure bad;
    bad.atoms.push_back({{0, 0}, {1, 1}, 0.5});
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.atoms.push_back({{0, 0}, {1, 1}, 0.5});
    REQUIRE_NOTHROW(bad.validate());
    bad.atoms[0].weight = -0.1;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("intersection functional vanishes for well-separated short bridges") {
    const TorusSpec spec{6.0};
    PairMeasure mu1, mu2;
    mu1.atoms.push_back({{2.5, 2.5}, {2.5, 2.4}, 1.0});
    mu2.atoms.push_back({{-2.5, -2.5}, {-2.5, -2.4}, 1.0});
    const double phi = phi_functional(mu1, mu2, 1.0, 0.01, spec, 24);
    REQUIRE(phi >= 0.0);
    REQUIRE(phi < 1e-6 * spec.side * spec.side);
}

TEST_CASE("intersection functional saturates to the torus area for large eta") {
    const TorusSpec spec{3.0};
    PairMeasure mu1, mu2;
    mu1.atoms.push_back({{0.5, 0.0}, {0.0, 0.5}, 1.0});
    mu2.atoms.push_back({{-0.5, 0.2}, {0.3, -0.4}, 1.0});
    const double phi = phi_functional(mu1, mu2, 1e8, 0.25, spec, 24);
    REQUIRE(phi <= spec.side * spec.side + 1e-9);
    REQUIRE(phi >= 0.99 * spec.side * spec.side);
}

TEST_CASE("intersection functional is monotone in eta and refines consistently") {
    const TorusSpec spec{4.0};
    PairMeasure mu1, mu2;
    mu1.atoms.push_back({{0.4, 0.1}, {-0.2, 0.3}, 1.0});
    mu2.atoms.push_back({{-0.6, -0.1}, {0.0, -0.5}, 1.0});
    double prev = -1.0;
    for (double eta : {0.25, 1.0, 4.0, 16.0}) {
        const double phi = phi_functional(mu1, mu2, eta, 0.25, spec, 32);
        REQUIRE(phi >= prev);
        prev = phi;
    }
    const double coarse = phi_functional(mu1, mu2, 1.0, 0.25, spec, 32);
    const double fine = phi_functional(mu1, mu2, 1.0, 0.25, spec, 64);
    REQUIRE(coarse == Catch::Approx(fine).epsilon(0.02));
}

TEST_CASE("E1 matches its defining series at the crossover argument") {
    // Series oracle at x = 1, evaluated independently to 1e-12.
    const double x = 1.0;
    double sum = -0.5772156649015329 - std::log(x);
    double term = 1.0;
    for (int k = 1; k <= 40; ++k) {
        term *= -x / k;
        sum -= term / k;
    }
    REQUIRE(expint_e1(1.0) == Catch::Approx(sum).epsilon(1e-12));
    REQUIRE(expint_e1(1.0) == Catch::Approx(0.21938393439552029).epsilon(1e-12));

    // Continuity across the series / continued-fraction switch.
    REQUIRE(expint_e1(1.0 - 1e-9) == Catch::Approx(expint_e1(1.0 + 1e-9)).epsilon(1e-7));
}

TEST_CASE("E1 equals the substituted kernel-time integral") {
    // E1(a) = Integral_0^1 u^-1 exp(-a/u) du, checked by direct quadrature.
    const double a = 0.5;
    const int nodes = 200000;
    double acc = 0.0;
    const double du = 1.0 / nodes;
    for (int i = 1; i <= nodes; ++i) {
        const double u = (i - 0.5) * du;
        acc += std::exp(-a / u) / u;
    }
    REQUIRE(acc * du == Catch::Approx(expint_e1(a)).epsilon(1e-8));
}

TEST_CASE("hitting probability asymptotic is monotone and guarded") {
    const std::uint64_t n = 100000;
    double prev = 1e9;
    for (int r : {5, 10, 20, 50, 120}) {
        const double p = hitting_prob_asymptotic({r, 0}, n);
        REQUIRE(p < prev);
        REQUIRE(p > 0.0);
        prev = p;
    }
    REQUIRE(hitting_prob_asymptotic({10, 0}, n) ==
            Catch::Approx(expint_e1(100.0 / (2.0 * n)) / std::log(double(n))).epsilon(1e-14));
    REQUIRE_THROWS_AS(hitting_prob_asymptotic({0, 0}, n), std::domain_error);
    REQUIRE_THROWS_AS(hitting_prob_asymptotic({3, 0}, 1), std::domain_error);
    REQUIRE_THROWS_AS(hitting_prob_asymptotic({3, 0}, n, 0.0), std::domain_error);
}
