#pragma once

// Discretized profiles phi on a torus or a zero-boundary box, with the three
// functionals of the variational problem: Dirichlet energy, L2 mass, and the
// intersection-volume constraint integral (1 - exp(-2 pi scale phi^2))^2.
//
// The energy is the standard forward-difference (5-point Laplacian) quadratic
// form: summed over grid edges, ((phi_a - phi_b)/h)^2 h^2, with periodic
// edges on the torus and edges to ghost zeros at box boundaries. Its value
// converges at rate h^2 for smooth profiles and it is positive definite up to
// constants, which keeps minimizers free of checkerboard modes.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rwi {

enum class GridDomain { torus, box };

class FieldGrid {
public:
    static FieldGrid torus(double side, int points_per_axis) {
        return FieldGrid(GridDomain::torus, side, points_per_axis);
    }
    static FieldGrid box(double side, int points_per_axis) {
        return FieldGrid(GridDomain::box, side, points_per_axis);
    }

    GridDomain domain() const { return domain_; }
    double side() const { return side_; }
    int points() const { return m_; }
    double h() const { return side_ / m_; }
    std::size_t size() const { return values_.size(); }

    double& at(int i, int j) { return values_[index(i, j)]; }
    double at(int i, int j) const { return values_[index(i, j)]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    // Cell-center coordinate of column/row i, in [-side/2, side/2).
    double coord(int i) const { return -side_ / 2 + (i + 0.5) * h(); }

    double mass() const {
        const double h2 = h() * h();
        double s = 0.0;
        for (double v : values_) s += v * v;
        return s * h2;
    }

    double dirichlet_energy() const {
        double s = 0.0;
        if (domain_ == GridDomain::torus) {
            for (int i = 0; i < m_; ++i)
                for (int j = 0; j < m_; ++j) {
                    const double v = at(i, j);
                    const double dx = at(wrap(i + 1), j) - v;
                    const double dy = at(i, wrap(j + 1)) - v;
                    s += dx * dx + dy * dy;
                }
        } else {
            // Interior edges plus one-sided edges to the zero boundary.
            for (int i = 0; i <= m_; ++i)
                for (int j = 0; j < m_; ++j) {
                    const double a = (i < m_) ? at(i, j) : 0.0;
                    const double b = (i > 0) ? at(i - 1, j) : 0.0;
                    s += (a - b) * (a - b);
                }
            for (int j = 0; j <= m_; ++j)
                for (int i = 0; i < m_; ++i) {
                    const double a = (j < m_) ? at(i, j) : 0.0;
                    const double b = (j > 0) ? at(i, j - 1) : 0.0;
                    s += (a - b) * (a - b);
                }
        }
        return s;  // ((dphi)/h)^2 * h^2 = (dphi)^2
    }

    // Riemann sum of (1 - exp(-2 pi scale phi^2))^2.
    double constraint_value(double exponent_scale = 1.0) const {
        const double a = 2.0 * M_PI * exponent_scale;
        const double h2 = h() * h();
        double s = 0.0;
        for (double v : values_) {
            const double e = 1.0 - std::exp(-a * v * v);
            s += e * e;
        }
        return s * h2;
    }

    // Rescale so the mass Riemann sum is exactly 1.
    void normalize_mass() {
        const double m = mass();
        if (m <= 0.0) throw std::domain_error("FieldGrid: cannot normalize a zero field");
        const double f = 1.0 / std::sqrt(m);
        for (double& v : values_) v *= f;
    }

    int wrap(int i) const {
        if (i >= m_) return i - m_;
        if (i < 0) return i + m_;
        return i;
    }

private:
    FieldGrid(GridDomain domain, double side, int m)
        : domain_(domain), side_(side), m_(m), values_(static_cast<std::size_t>(m) * m, 0.0) {
        if (side <= 0.0) throw std::invalid_argument("FieldGrid: side must be > 0");
        if (m < 3) throw std::invalid_argument("FieldGrid: need at least 3 points per axis");
    }

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * m_ + static_cast<std::size_t>(j);
    }

    GridDomain domain_;
    double side_;
    int m_;
    std::vector<double> values_;
};

}  // namespace rwi
