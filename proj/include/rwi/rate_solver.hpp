#pragma once

// Constrained Dirichlet-energy minimization:
//
//   minimize  Integral |grad phi|^2
//   subject   Integral phi^2 = 1,
//             Integral (1 - exp(-2 pi scale phi^2))^2 >= c,
//
// on a torus grid (rate I_N) and, for the plane rate I_2, on a log-spaced
// radial grid with a far-field cutoff, cross-checked against torus values at
// increasing side N.
//
// Method: augmented Lagrangian for the inequality; the equality mass
// constraint is kept exactly by renormalizing after every accepted step. The
// inner solver is projected gradient descent with Barzilai-Borwein steps and
// Armijo backtracking. The KKT residual is the norm of the gradient component
// tangent to the mass sphere, relative to the full gradient norm.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rwi/field_grid.hpp"

namespace rwi {

enum class SolveStatus { converged, infeasible, max_iter };

inline const char* solve_status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::infeasible: return "infeasible";
        default: return "max_iter";
    }
}

struct SolveOptions {
    std::vector<int> grid_ladder = {32, 64};  // torus points per axis, refined in order
    double penalty_init = 10.0;
    double penalty_growth = 4.0;
    int max_outer = 40;
    int max_inner = 20000;
    double kkt_tol = 1e-6;
    double value_rel_tol = 1e-8;
    double constraint_tol = 1e-6;
    double feasibility_margin = 0.01;  // c within this fraction above the measured sup => infeasible
    double exponent_scale = 1.0;       // sqrt(det covariance) hook, 1 for identity laws
    const FieldGrid* warm_start = nullptr;

    // plane route (a): torus values at increasing side
    std::vector<double> plane_torus_sides = {8.0, 12.0, 16.0, 24.0, 32.0};
    double plane_points_per_unit = 8.0;
    double plane_match_rtol = 0.005;
    double route_disagree_rtol = 0.05;
    double route_disagree_abs = 1e-3;

    // plane route (b): radial grid
    int radial_points = 256;
    double radial_extent = 16.0;
    double radial_tail_tol = 1e-8;
    int radial_max_doublings = 3;
};

struct RateResult {
    double c = 0.0;
    double value = 0.0;
    std::optional<FieldGrid> minimizer;
    SolveStatus status = SolveStatus::max_iter;
    double kkt_residual = 0.0;
    std::vector<std::pair<double, double>> grid_history;  // (h, value) along refinement
    double measured_constraint_sup = 0.0;
    double cross_check_value = 0.0;  // route (a) value for plane solves
    std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Feasibility boundary. Over unit-mass profiles the constraint integral is
// bounded by c* = 2 pi scale * max_u (1 - e^-u)^2 / u: pointwise,
// (1-e^-u)^2 <= [(1-e^-u)^2/u] u applied to u = 2 pi scale phi^2, and a
// plateau profile attains the bound in the limit.
// ---------------------------------------------------------------------------

// argmax of (1 - e^-u)^2 / u by golden-section search.
inline double feasibility_plateau_u() {
    auto g = [](double u) {
        const double e = 1.0 - std::exp(-u);
        return e * e / u;
    };
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 1e-8, b = 20.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double g1 = g(x1), g2 = g(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-14; ++it) {
        if (g1 < g2) {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + gr * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - gr * (b - a);
            g1 = g(x1);
        }
    }
    return (a + b) / 2;
}

inline double feasibility_sup(double exponent_scale = 1.0) {
    const double u = feasibility_plateau_u();
    const double e = 1.0 - std::exp(-u);
    return 2.0 * M_PI * exponent_scale * e * e / u;
}

// Unit-mass plateau at the optimal level u*: a centered disc of area
// 2 pi scale / u*. Approaches the feasibility supremum as the grid refines.
inline FieldGrid plateau_grid(double side, int points, double exponent_scale = 1.0) {
    const double u = feasibility_plateau_u();
    const double area = 2.0 * M_PI * exponent_scale / u;
    const double radius2 = area / M_PI;
    FieldGrid grid = FieldGrid::torus(side, points);
    const double level = std::sqrt(u / (2.0 * M_PI * exponent_scale));
    for (int i = 0; i < points; ++i)
        for (int j = 0; j < points; ++j) {
            const double x = grid.coord(i), y = grid.coord(j);
            if (x * x + y * y <= radius2) grid.at(i, j) = level;
        }
    grid.normalize_mass();
    return grid;
}

// ---------------------------------------------------------------------------
// Generic augmented-Lagrangian driver over a problem interface:
//   size, energy, constraint, grad_energy, grad_constraint, mass_weight(i)
// with mass(x) = sum_i w_i x_i^2 and projection x /= sqrt(mass).
// ---------------------------------------------------------------------------

namespace rate_detail {

struct ALReport {
    SolveStatus status = SolveStatus::max_iter;
    double value = 0.0;
    double constraint = 0.0;
    double kkt = 0.0;
    int outer_iters = 0;
};

template <class P>
double al_value(P& prob, const std::vector<double>& x, double c, double lambda, double rho) {
    const double g = c - prob.constraint(x);
    const double lam_hat = std::max(0.0, lambda + rho * g);
    return prob.energy(x) + (lam_hat * lam_hat - lambda * lambda) / (2.0 * rho);
}

template <class P>
void al_gradient(P& prob, const std::vector<double>& x, double c, double lambda, double rho,
                 std::vector<double>& out) {
    const double g = c - prob.constraint(x);
    const double lam_hat = std::max(0.0, lambda + rho * g);
    prob.grad_energy(x, out);
    if (lam_hat != 0.0) {
        std::vector<double> gc(x.size());
        prob.grad_constraint(x, gc);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] -= lam_hat * gc[i];
    }
}

template <class P>
void project_mass(P& prob, std::vector<double>& x) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m += prob.mass_weight(i) * x[i] * x[i];
    const double f = 1.0 / std::sqrt(m);
    for (double& v : x) v *= f;
}

// Tangent component of g w.r.t. the mass sphere at x, returned in gt;
// also reports ||g|| and ||gt||.
template <class P>
void tangent_gradient(P& prob, const std::vector<double>& x, const std::vector<double>& g,
                      std::vector<double>& gt, double& norm_g, double& norm_gt) {
    double gn = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double normal = prob.mass_weight(i) * x[i];
        gn += g[i] * normal;
        nn += normal * normal;
    }
    const double coef = nn > 0.0 ? gn / nn : 0.0;
    norm_g = 0.0;
    norm_gt = 0.0;
    gt.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        gt[i] = g[i] - coef * prob.mass_weight(i) * x[i];
        norm_g += g[i] * g[i];
        norm_gt += gt[i] * gt[i];
    }
    norm_g = std::sqrt(norm_g);
    norm_gt = std::sqrt(norm_gt);
}

template <class P>
ALReport minimize(P& prob, std::vector<double>& x, double c, const SolveOptions& opt) {
    project_mass(prob, x);
    double lambda = 0.0;
    double rho = opt.penalty_init;
    double prev_violation = std::numeric_limits<double>::infinity();

    ALReport rep;
    std::vector<double> g, gt, x_try, g_prev, x_prev;
    for (int outer = 0; outer < opt.max_outer; ++outer) {
        rep.outer_iters = outer + 1;
        double f = al_value(prob, x, c, lambda, rho);
        double alpha = 1.0;
        double f_window = f;
        bool have_prev = false;
        // Non-monotone (Grippo) reference: accept against the worst of the
        // last few values, which lets raw Barzilai-Borwein steps through.
        std::vector<double> f_recent(10, f);
        std::size_t f_slot = 0;

        for (int inner = 0; inner < opt.max_inner; ++inner) {
            al_gradient(prob, x, c, lambda, rho, g);
            double norm_g = 0.0, norm_gt = 0.0;
            tangent_gradient(prob, x, g, gt, norm_g, norm_gt);
            rep.kkt = norm_g > 1e-30 ? norm_gt / norm_g : 0.0;
            if (rep.kkt < opt.kkt_tol) break;

            if (have_prev) {
                double sy = 0.0, ss = 0.0, yy = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double s = x[i] - x_prev[i];
                    const double yv = gt[i] - g_prev[i];
                    sy += s * yv;
                    ss += s * s;
                    yy += yv * yv;
                }
                if (sy > 1e-30) alpha = (inner & 1) ? ss / sy : sy / yy;  // BB1 / BB2
            }
            alpha = std::clamp(alpha, 1e-12, 1e6);

            double gt2 = 0.0;
            for (double v : gt) gt2 += v * v;
            x_prev = x;
            g_prev = gt;
            const double f_ref = *std::max_element(f_recent.begin(), f_recent.end());

            double step = alpha;
            bool accepted = false;
            for (int bt = 0; bt < 50; ++bt) {
                x_try = x_prev;
                for (std::size_t i = 0; i < x_try.size(); ++i) x_try[i] -= step * gt[i];
                project_mass(prob, x_try);
                const double f_try = al_value(prob, x_try, c, lambda, rho);
                if (f_try <= f_ref - 1e-4 * step * gt2) {
                    x = x_try;
                    f = f_try;
                    accepted = true;
                    break;
                }
                step /= 2.0;
            }
            if (!accepted) break;
            have_prev = true;
            f_recent[f_slot] = f;
            f_slot = (f_slot + 1) % f_recent.size();

            if ((inner + 1) % 50 == 0) {
                if (std::abs(f_window - f) <= opt.value_rel_tol * std::max(1.0, std::abs(f)))
                    break;
                f_window = f;
            }
        }

        const double constraint = prob.constraint(x);
        const double violation = std::max(0.0, c - constraint);
        rep.value = prob.energy(x);
        rep.constraint = constraint;
        if (violation <= opt.constraint_tol * std::max(1.0, c) && rep.kkt < opt.kkt_tol) {
            rep.status = SolveStatus::converged;
            return rep;
        }
        lambda = std::max(0.0, lambda + rho * (c - constraint));
        if (violation > 0.25 * prev_violation) rho *= opt.penalty_growth;
        prev_violation = violation;
    }
    rep.status = SolveStatus::max_iter;
    return rep;
}

// Diagonal scaling adapter: optimize in z = s .* x with s = sqrt(diag of the
// energy Hessian). Equalizes edge stiffness across non-uniform grids (the
// log-spaced radial grid above all), which raw Barzilai-Borwein needs to
// drive the KKT ratio below 1e-6.
template <class P>
struct DiagScaled {
    P& base;
    std::vector<double> s;
    mutable std::vector<double> xbuf;

    explicit DiagScaled(P& p) : base(p) {
        s.resize(p.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sqrt(p.precond_diag(i));
    }

    const std::vector<double>& to_x(const std::vector<double>& z) const {
        xbuf.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) xbuf[i] = z[i] / s[i];
        return xbuf;
    }

    std::size_t size() const { return base.size(); }
    double mass_weight(std::size_t i) const { return base.mass_weight(i) / (s[i] * s[i]); }
    double energy(const std::vector<double>& z) const { return base.energy(to_x(z)); }
    double constraint(const std::vector<double>& z) const { return base.constraint(to_x(z)); }
    void grad_energy(const std::vector<double>& z, std::vector<double>& out) const {
        base.grad_energy(to_x(z), out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] /= s[i];
    }
    void grad_constraint(const std::vector<double>& z, std::vector<double>& out) const {
        base.grad_constraint(to_x(z), out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] /= s[i];
    }
};

template <class P>
ALReport minimize(P& prob, std::vector<double>& x, double c, const SolveOptions& opt);

// Runs the minimizer in preconditioned variables, mapping x in and out.
template <class P>
ALReport minimize_scaled(P& prob, std::vector<double>& x, double c, const SolveOptions& opt) {
    DiagScaled<P> scaled(prob);
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] * scaled.s[i];
    const ALReport rep = minimize(scaled, z, c, opt);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = z[i] / scaled.s[i];
    return rep;
}

// Projected gradient ascent of the constraint functional under unit mass:
// measures the reachable constraint supremum on the given discretization.
template <class P>
double measure_constraint_sup(P& prob, std::vector<double> x, int iters = 2000) {
    project_mass(prob, x);
    std::vector<double> g, gt, x_try, x_prev, g_prev;
    double best = prob.constraint(x);
    double alpha = 1.0;
    bool have_prev = false;
    for (int it = 0; it < iters; ++it) {
        prob.grad_constraint(x, g);
        double norm_g = 0.0, norm_gt = 0.0;
        tangent_gradient(prob, x, g, gt, norm_g, norm_gt);
        if (norm_gt < 1e-14) break;
        if (have_prev) {
            double sy = 0.0, ss = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double s = x[i] - x_prev[i];
                const double yv = gt[i] - g_prev[i];
                sy += s * yv;
                ss += s * s;
            }
            if (std::abs(sy) > 1e-30) alpha = std::abs(ss / sy);
        }
        alpha = std::clamp(alpha, 1e-12, 1e6);
        x_prev = x;
        g_prev = gt;
        double step = alpha;
        bool improved = false;
        for (int bt = 0; bt < 40; ++bt) {
            x_try = x_prev;
            for (std::size_t i = 0; i < x_try.size(); ++i) x_try[i] += step * gt[i];
            project_mass(prob, x_try);
            const double c_try = prob.constraint(x_try);
            if (c_try > best) {
                x = x_try;
                best = c_try;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if (!improved) break;
        have_prev = true;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Torus problem: unknowns are the grid values of FieldGrid.
// ---------------------------------------------------------------------------

struct TorusProblem {
    double side;
    int m;
    double exponent_scale;

    std::size_t size() const { return static_cast<std::size_t>(m) * m; }
    double h() const { return side / m; }
    double mass_weight(std::size_t) const { return h() * h(); }

    int wrap(int i) const { return i >= m ? i - m : (i < 0 ? i + m : i); }
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * m + static_cast<std::size_t>(j);
    }

    double energy(const std::vector<double>& x) const {
        double s = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double v = x[idx(i, j)];
                const double dx = x[idx(wrap(i + 1), j)] - v;
                const double dy = x[idx(i, wrap(j + 1))] - v;
                s += dx * dx + dy * dy;
            }
        return s;
    }

    void grad_energy(const std::vector<double>& x, std::vector<double>& out) const {
        out.assign(size(), 0.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double v = x[idx(i, j)];
                out[idx(i, j)] = 2.0 * (4.0 * v - x[idx(wrap(i + 1), j)] - x[idx(wrap(i - 1), j)] -
                                        x[idx(i, wrap(j + 1))] - x[idx(i, wrap(j - 1))]);
            }
    }

    double constraint(const std::vector<double>& x) const {
        const double a = 2.0 * M_PI * exponent_scale;
        const double h2 = h() * h();
        double s = 0.0;
        for (double v : x) {
            const double e = 1.0 - std::exp(-a * v * v);
            s += e * e;
        }
        return s * h2;
    }

    void grad_constraint(const std::vector<double>& x, std::vector<double>& out) const {
        const double a = 2.0 * M_PI * exponent_scale;
        const double h2 = h() * h();
        out.resize(size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = x[i];
            const double e = std::exp(-a * v * v);
            out[i] = h2 * 4.0 * a * v * e * (1.0 - e);
        }
    }

    double precond_diag(std::size_t) const { return 8.0; }
};

}  // namespace rate_detail

// Periodic bilinear resampling of a torus grid to a new resolution.
inline FieldGrid resample_torus(const FieldGrid& src, int new_points) {
    FieldGrid dst = FieldGrid::torus(src.side(), new_points);
    const int ms = src.points();
    for (int i = 0; i < new_points; ++i)
        for (int j = 0; j < new_points; ++j) {
            // position of the destination cell center in source index space
            const double si = (dst.coord(i) + src.side() / 2) / src.h() - 0.5;
            const double sj = (dst.coord(j) + src.side() / 2) / src.h() - 0.5;
            const int i0 = static_cast<int>(std::floor(si));
            const int j0 = static_cast<int>(std::floor(sj));
            const double fi = si - i0, fj = sj - j0;
            auto wrapped = [&](int a) { return ((a % ms) + ms) % ms; };
            const double v00 = src.at(wrapped(i0), wrapped(j0));
            const double v10 = src.at(wrapped(i0 + 1), wrapped(j0));
            const double v01 = src.at(wrapped(i0), wrapped(j0 + 1));
            const double v11 = src.at(wrapped(i0 + 1), wrapped(j0 + 1));
            dst.at(i, j) = (1 - fi) * ((1 - fj) * v00 + fj * v01) +
                           fi * ((1 - fj) * v10 + fj * v11);
        }
    return dst;
}

namespace rate_detail {

// Centered Gaussian bump, width picked from a dyadic scan so the constraint
// starts near-active (the widest width still reaching c, else the argmax).
inline FieldGrid torus_bump_init(double side, int points, double c, double exponent_scale) {
    FieldGrid best = FieldGrid::torus(side, points);
    double best_cv = -1.0;
    bool found = false;
    FieldGrid grid = FieldGrid::torus(side, points);
    for (double w = side / 3.0; w >= grid.h(); w /= 1.5) {
        for (int i = 0; i < points; ++i)
            for (int j = 0; j < points; ++j) {
                const double x = grid.coord(i), y = grid.coord(j);
                grid.at(i, j) = std::exp(-(x * x + y * y) / (2.0 * w * w));
            }
        grid.normalize_mass();
        const double cv = grid.constraint_value(exponent_scale);
        if (cv >= c) return grid;  // widest active width
        if (cv > best_cv) {
            best_cv = cv;
            best = grid;
            found = true;
        }
    }
    if (!found) best.at(points / 2, points / 2) = 1.0;
    return best;
}

// Shift the torus minimizer so its peak sits at the grid origin.
inline void recenter_torus(FieldGrid& grid) {
    const int m = grid.points();
    int pi = 0, pj = 0;
    double peak = -1.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (std::abs(grid.at(i, j)) > peak) {
                peak = std::abs(grid.at(i, j));
                pi = i;
                pj = j;
            }
    const int di = m / 2 - pi, dj = m / 2 - pj;
    FieldGrid rolled = grid;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            rolled.at(((i + di) % m + m) % m, ((j + dj) % m + m) % m) = grid.at(i, j);
    grid = rolled;
}

}  // namespace rate_detail

// ---------------------------------------------------------------------------
// Torus rate I_N(c)
// ---------------------------------------------------------------------------

inline RateResult solve_rate_torus(double side, double c, const SolveOptions& opt = {}) {
    if (side <= 0.0) throw std::invalid_argument("solve_rate_torus: side must be > 0");
    if (c <= 0.0) throw std::invalid_argument("solve_rate_torus: c must be > 0");
    RateResult result;
    result.c = c;

    std::vector<int> ladder = opt.grid_ladder;
    if (ladder.empty()) ladder = {32, 64};

    // Feasibility probe on the coarsest grid of the ladder.
    {
        rate_detail::TorusProblem prob{side, ladder.front(), opt.exponent_scale};
        FieldGrid plateau = plateau_grid(side, ladder.front(), opt.exponent_scale);
        result.measured_constraint_sup =
            rate_detail::measure_constraint_sup(prob, plateau.values());
        if (c > result.measured_constraint_sup * (1.0 + opt.feasibility_margin)) {
            result.status = SolveStatus::infeasible;
            result.notes.push_back("c exceeds the measured constraint supremum " +
                                   std::to_string(result.measured_constraint_sup) +
                                   " on this grid");
            return result;
        }
    }

    std::optional<FieldGrid> current;
    if (opt.warm_start && opt.warm_start->domain() == GridDomain::torus &&
        opt.warm_start->side() == side)
        current = *opt.warm_start;

    rate_detail::ALReport rep;
    for (int points : ladder) {
        FieldGrid grid = current ? resample_torus(*current, points)
                                 : rate_detail::torus_bump_init(side, points, c,
                                                                opt.exponent_scale);
        grid.normalize_mass();
        rate_detail::TorusProblem prob{side, points, opt.exponent_scale};
        std::vector<double> x = grid.values();
        rep = rate_detail::minimize(prob, x, c, opt);
        grid.values() = x;
        current = grid;
        result.grid_history.emplace_back(grid.h(), rep.value);
    }

    rate_detail::recenter_torus(*current);
    result.minimizer = std::move(*current);
    result.value = rep.value;
    result.kkt_residual = rep.kkt;
    result.status = rep.status;
    if (rep.status == SolveStatus::max_iter)
        result.notes.push_back("stagnated: constraint " + std::to_string(rep.constraint) +
                               " vs c = " + std::to_string(c) + ", kkt " +
                               std::to_string(rep.kkt));
    return result;
}

// ---------------------------------------------------------------------------
// Radial problem on [0, R]: log-spaced nodes, phi(R) = 0, axis handled by the
// r-weighted quadrature (the r = 0 node has zero mass weight).
// ---------------------------------------------------------------------------

namespace rate_detail {

struct RadialProblem {
    std::vector<double> r;   // nodes r_0 = 0 < r_1 < ... < r_{M-1} = R; dof exclude last
    std::vector<double> w;   // mass weights per dof node
    double exponent_scale = 1.0;

    static RadialProblem build(int points, double extent, double exponent_scale) {
        RadialProblem p;
        p.exponent_scale = exponent_scale;
        const int m = std::max(points, 16);
        const double r_min = extent * 1e-4;
        p.r.resize(m);
        p.r[0] = 0.0;
        const double growth = std::pow(extent / r_min, 1.0 / (m - 2));
        double rv = r_min;
        for (int i = 1; i < m; ++i) {
            p.r[i] = rv;
            rv *= growth;
        }
        p.r[m - 1] = extent;
        p.w.assign(m - 1, 0.0);
        for (int i = 0; i + 1 < m; ++i) {
            const double dr = p.r[i + 1] - p.r[i];
            p.w[i] += M_PI * dr * p.r[i];  // trapezoid, factor 2 pi / 2
            if (i + 1 < m - 1) p.w[i + 1] += M_PI * dr * p.r[i + 1];
        }
        return p;
    }

    std::size_t size() const { return r.size() - 1; }
    double mass_weight(std::size_t i) const { return w[i]; }

    double energy(const std::vector<double>& x) const {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
            const double vb = (i + 1 < x.size()) ? x[i + 1] : 0.0;
            const double dv = vb - x[i];
            const double dr = r[i + 1] - r[i];
            s += 2.0 * M_PI * (dv / dr) * (dv / dr) * 0.5 * (r[i] + r[i + 1]) * dr;
        }
        return s;
    }

    void grad_energy(const std::vector<double>& x, std::vector<double>& out) const {
        out.assign(size(), 0.0);
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
            const double vb = (i + 1 < x.size()) ? x[i + 1] : 0.0;
            const double dr = r[i + 1] - r[i];
            const double coef = 2.0 * M_PI * (r[i] + r[i + 1]) / dr;  // d/dv of (dv/dr)^2 rbar dr
            const double dv = vb - x[i];
            out[i] -= coef * dv;
            if (i + 1 < x.size()) out[i + 1] += coef * dv;
        }
    }

    double constraint(const std::vector<double>& x) const {
        const double a = 2.0 * M_PI * exponent_scale;
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double e = 1.0 - std::exp(-a * x[i] * x[i]);
            s += w[i] * e * e;
        }
        return s;
    }

    void grad_constraint(const std::vector<double>& x, std::vector<double>& out) const {
        const double a = 2.0 * M_PI * exponent_scale;
        out.resize(size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = x[i];
            const double e = std::exp(-a * v * v);
            out[i] = w[i] * 4.0 * a * v * e * (1.0 - e);
        }
    }

    double mass(const std::vector<double>& x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i] * x[i];
        return s;
    }

    double precond_diag(std::size_t i) const {
        double d = 0.0;
        if (i > 0) d += 2.0 * M_PI * (r[i - 1] + r[i]) / (r[i] - r[i - 1]);
        d += 2.0 * M_PI * (r[i] + r[i + 1]) / (r[i + 1] - r[i]);
        return d;
    }

    // Energy Hessian is the tridiagonal chain matrix; the constraint Hessian
    // is diagonal. Both feed the Newton inner solver below.
    void hessian_tridiag(const std::vector<double>& x, double lam_hat, std::vector<double>& diag,
                         std::vector<double>& off) const {
        const std::size_t n = size();
        diag.assign(n, 0.0);
        off.assign(n - 1, 0.0);
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
            const double kappa = 2.0 * M_PI * 0.5 * (r[i] + r[i + 1]) / (r[i + 1] - r[i]);
            diag[i] += 2.0 * kappa;
            if (i + 1 < n) {
                diag[i + 1] += 2.0 * kappa;
                off[i] = -2.0 * kappa;
            }
        }
        const double a = 2.0 * M_PI * exponent_scale;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = x[i];
            const double e1 = std::exp(-a * v * v);
            const double e2 = e1 * e1;
            const double g2 = 4.0 * a * (e1 - e2 - 2.0 * a * v * v * e1 + 4.0 * a * v * v * e2);
            diag[i] -= lam_hat * w[i] * g2;
        }
    }

    // Mass beyond r > extent/2: the far-field cutoff is adequate when tiny.
    double tail_mass(const std::vector<double>& x) const {
        const double half = r.back() / 2;
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (r[i] > half) s += w[i] * x[i] * x[i];
        return s;
    }

    std::vector<double> bump_init(double c) const {
        std::vector<double> best(size(), 0.0);
        double best_cv = -1.0;
        std::vector<double> x(size());
        for (double wth = r.back() / 3.0; wth >= r.back() * 1e-3; wth /= 1.5) {
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] = std::exp(-r[i] * r[i] / (2.0 * wth * wth));
            double m = mass(x);
            if (m <= 0.0) continue;
            const double f = 1.0 / std::sqrt(m);
            for (double& v : x) v *= f;
            const double cv = constraint(x);
            if (cv >= c) return x;
            if (cv > best_cv) {
                best_cv = cv;
                best = x;
            }
        }
        return best;
    }

    std::vector<double> plateau_init() const {
        const double u = feasibility_plateau_u();
        const double area = 2.0 * M_PI * exponent_scale / u;
        const double radius2 = area / M_PI;
        const double level = std::sqrt(u / (2.0 * M_PI * exponent_scale));
        std::vector<double> x(size(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i)
            if (r[i] * r[i] <= radius2) x[i] = level;
        const double m = mass(x);
        if (m > 0)
            for (double& v : x) v /= std::sqrt(m);
        return x;
    }
};

// Tridiagonal solve (Thomas). diag/off are copied so the factorization does
// not clobber the caller's matrix.
inline std::vector<double> solve_tridiag(std::vector<double> diag, const std::vector<double>& off,
                                         std::vector<double> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> upper(off);
    for (std::size_t i = 1; i < n; ++i) {
        const double m = off[i - 1] / diag[i - 1];
        diag[i] -= m * off[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
    return x;
}

// Semi-smooth projected Newton for the radial problem. The AL Hessian is
// tridiagonal plus the rank-one penalty rho * gradC gradC^T (when the
// inequality multiplier is active); Sherman-Morrison reduces it to tridiagonal
// solves, and the mass constraint is handled by a bordered elimination. Falls
// back to the projected gradient direction when the Newton step fails to
// descend.
inline ALReport minimize_radial_newton(RadialProblem& prob, std::vector<double>& x, double c,
                                       const SolveOptions& opt) {
    project_mass(prob, x);
    double lambda = 0.0;
    double rho = opt.penalty_init;
    double prev_violation = std::numeric_limits<double>::infinity();
    const std::size_t n = prob.size();

    ALReport rep;
    std::vector<double> g, gt, gc, diag, off, x_try;
    for (int outer = 0; outer < opt.max_outer; ++outer) {
        rep.outer_iters = outer + 1;
        double f = al_value(prob, x, c, lambda, rho);
        for (int inner = 0; inner < 200; ++inner) {
            al_gradient(prob, x, c, lambda, rho, g);
            double norm_g = 0.0, norm_gt = 0.0;
            tangent_gradient(prob, x, g, gt, norm_g, norm_gt);
            rep.kkt = norm_g > 1e-30 ? norm_gt / norm_g : 0.0;
            if (rep.kkt < 0.1 * opt.kkt_tol) break;

            const double gval = c - prob.constraint(x);
            const double lam_hat = std::max(0.0, lambda + rho * gval);
            prob.hessian_tridiag(x, lam_hat, diag, off);
            for (std::size_t i = 0; i < n; ++i) diag[i] += 1e-12;  // guard exact singularity

            prob.grad_constraint(x, gc);
            std::vector<double> neg_g(n), normal(n);
            for (std::size_t i = 0; i < n; ++i) {
                neg_g[i] = -g[i];
                normal[i] = 2.0 * prob.mass_weight(i) * x[i];
            }

            // A = T + rho_eff u u^T with u = gradC when the multiplier is active.
            const double rho_eff = (lambda + rho * gval > 0.0) ? rho : 0.0;
            auto solve_A = [&](const std::vector<double>& b) {
                std::vector<double> tb = solve_tridiag(diag, off, b);
                if (rho_eff == 0.0) return tb;
                std::vector<double> tu = solve_tridiag(diag, off, gc);
                double ub = 0.0, uu = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    ub += gc[i] * tb[i];
                    uu += gc[i] * tu[i];
                }
                const double coef = rho_eff * ub / (1.0 + rho_eff * uu);
                for (std::size_t i = 0; i < n; ++i) tb[i] -= coef * tu[i];
                return tb;
            };

            const std::vector<double> a_vec = solve_A(neg_g);
            const std::vector<double> b_vec = solve_A(normal);
            double na = 0.0, nb = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                na += normal[i] * a_vec[i];
                nb += normal[i] * b_vec[i];
            }
            std::vector<double> d(n);
            const double mu = (std::abs(nb) > 1e-300) ? na / nb : 0.0;
            for (std::size_t i = 0; i < n; ++i) d[i] = a_vec[i] - mu * b_vec[i];

            double descent = 0.0;
            for (std::size_t i = 0; i < n; ++i) descent += d[i] * g[i];
            if (!(descent < 0.0)) {
                for (std::size_t i = 0; i < n; ++i) d[i] = -gt[i];  // gradient fallback
                descent = -norm_gt * norm_gt;
            }

            double t = 1.0;
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                x_try = x;
                for (std::size_t i = 0; i < n; ++i) x_try[i] += t * d[i];
                project_mass(prob, x_try);
                const double f_try = al_value(prob, x_try, c, lambda, rho);
                if (f_try <= f + 1e-4 * t * descent || f_try < f) {
                    x = x_try;
                    f = f_try;
                    accepted = true;
                    break;
                }
                t /= 2.0;
            }
            if (!accepted) break;
        }

        const double constraint = prob.constraint(x);
        const double violation = std::max(0.0, c - constraint);
        rep.value = prob.energy(x);
        rep.constraint = constraint;
        if (violation <= opt.constraint_tol * std::max(1.0, c) && rep.kkt < opt.kkt_tol) {
            rep.status = SolveStatus::converged;
            return rep;
        }
        lambda = std::max(0.0, lambda + rho * (c - constraint));
        if (violation > 0.25 * prev_violation) rho *= opt.penalty_growth;
        prev_violation = violation;
    }
    rep.status = SolveStatus::max_iter;
    return rep;
}

}  // namespace rate_detail

// Radial (route b) solve of the plane rate at threshold c. Far-field cutoff
// doubles until the outer-half mass is below radial_tail_tol.
inline RateResult solve_rate_radial(double c, const SolveOptions& opt = {}) {
    if (c <= 0.0) throw std::invalid_argument("solve_rate_radial: c must be > 0");
    RateResult result;
    result.c = c;

    double extent = opt.radial_extent;
    rate_detail::ALReport rep;
    rate_detail::RadialProblem prob;
    std::vector<double> x;
    for (int attempt = 0; attempt <= opt.radial_max_doublings; ++attempt) {
        prob = rate_detail::RadialProblem::build(opt.radial_points, extent, opt.exponent_scale);
        if (attempt == 0) {
            result.measured_constraint_sup =
                rate_detail::measure_constraint_sup(prob, prob.plateau_init());
            if (c > result.measured_constraint_sup * (1.0 + opt.feasibility_margin)) {
                result.status = SolveStatus::infeasible;
                result.notes.push_back("c exceeds the measured constraint supremum " +
                                       std::to_string(result.measured_constraint_sup) +
                                       " on the radial grid");
                return result;
            }
        }
        x = prob.bump_init(c);
        rep = rate_detail::minimize_radial_newton(prob, x, c, opt);
        result.grid_history.emplace_back(extent / opt.radial_points, rep.value);
        if (prob.tail_mass(x) <= opt.radial_tail_tol) break;
        extent *= 2.0;
        result.notes.push_back("far-field cutoff doubled to " + std::to_string(extent));
    }

    result.value = rep.value;
    result.kkt_residual = rep.kkt;
    result.status = rep.status;

    // Embed the radial profile into a box grid for reporting.
    const int m_box = 128;
    FieldGrid box = FieldGrid::box(2.0 * extent, m_box);
    for (int i = 0; i < m_box; ++i)
        for (int j = 0; j < m_box; ++j) {
            const double xr = box.coord(i), yr = box.coord(j);
            const double rr = std::sqrt(xr * xr + yr * yr);
            const auto it = std::upper_bound(prob.r.begin(), prob.r.end(), rr);
            if (it == prob.r.begin() || it == prob.r.end()) {
                box.at(i, j) = (it == prob.r.begin() && !x.empty()) ? x[0] : 0.0;
                continue;
            }
            const std::size_t hi = static_cast<std::size_t>(it - prob.r.begin());
            const std::size_t lo = hi - 1;
            const double vlo = lo < x.size() ? x[lo] : 0.0;
            const double vhi = hi < x.size() ? x[hi] : 0.0;
            const double f = (rr - prob.r[lo]) / (prob.r[hi] - prob.r[lo]);
            box.at(i, j) = (1 - f) * vlo + f * vhi;
        }
    if (box.mass() > 0) box.normalize_mass();
    result.minimizer = std::move(box);
    return result;
}

// ---------------------------------------------------------------------------
// Plane rate I_2(c): radial value, cross-checked against torus values at
// increasing side until successive values agree to plane_match_rtol.
// ---------------------------------------------------------------------------

inline RateResult solve_rate_plane(double c, const SolveOptions& opt = {}) {
    RateResult result = solve_rate_radial(c, opt);
    if (result.status == SolveStatus::infeasible) return result;

    double prev = -1.0;
    double route_a = 0.0;
    std::vector<std::pair<double, double>> torus_values;
    std::optional<FieldGrid> warm;
    for (double side : opt.plane_torus_sides) {
        SolveOptions topt = opt;
        const int fine = std::max(16, static_cast<int>(std::lround(side * opt.plane_points_per_unit)));
        topt.grid_ladder = {std::max(12, fine / 2), fine};
        topt.warm_start = nullptr;
        RateResult tor = solve_rate_torus(side, c, topt);
        route_a = tor.value;
        torus_values.emplace_back(side, tor.value);
        if (prev >= 0.0 && tor.value > 0.0 && prev > 0.0 &&
            std::abs(tor.value - prev) <= opt.plane_match_rtol * std::abs(tor.value))
            break;
        prev = tor.value;
    }
    result.cross_check_value = route_a;
    for (const auto& [side, value] : torus_values)
        result.notes.push_back("torus side " + std::to_string(side) + ": value " +
                               std::to_string(value));

    const double diff = std::abs(route_a - result.value);
    if (diff > opt.route_disagree_abs &&
        diff > opt.route_disagree_rtol * std::max(std::abs(route_a), std::abs(result.value))) {
        result.status = SolveStatus::max_iter;
        result.notes.push_back("routes disagree: radial " + std::to_string(result.value) +
                               " vs torus " + std::to_string(route_a));
    }
    return result;
}

}  // namespace rwi
