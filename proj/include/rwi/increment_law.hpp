#pragma once

// Step distributions on Z^2. Two laws ship: the diagonal law (uniform on the
// four vectors (+-1, +-1)), which has exactly the identity covariance the
// tail asymptotics assume, and the simple nearest-neighbor law (covariance
// I/2) together with the local-CLT prefactor hook used to rescale the
// constants of the variational problem for non-identity covariance.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rwi/lattice.hpp"
#include "rwi/rng.hpp"

namespace rwi {

enum class LawName { diagonal, nearest_neighbor };

struct IncrementLaw {
    LawName name = LawName::diagonal;
    std::vector<std::pair<LatticePoint, double>> support;
    std::array<std::array<double, 2>, 2> covariance{{{0, 0}, {0, 0}}};
    std::string moment_note;

    // Checks: probabilities sum to 1, mean increment is exactly zero, and the
    // stored covariance matches the one computed from the support (1e-12).
    void validate() const {
        if (support.empty()) throw std::invalid_argument("IncrementLaw: empty support");
        double psum = 0.0;
        double mx = 0.0, my = 0.0;
        std::array<std::array<double, 2>, 2> cov{{{0, 0}, {0, 0}}};
        for (const auto& [v, p] : support) {
            if (p < 0.0) throw std::invalid_argument("IncrementLaw: negative probability");
            psum += p;
            mx += p * v.x;
            my += p * v.y;
            cov[0][0] += p * v.x * v.x;
            cov[0][1] += p * v.x * v.y;
            cov[1][1] += p * v.y * v.y;
        }
        cov[1][0] = cov[0][1];
        if (std::abs(psum - 1.0) > 1e-12)
            throw std::invalid_argument("IncrementLaw: probabilities do not sum to 1");
        if (mx != 0.0 || my != 0.0)
            throw std::invalid_argument("IncrementLaw: mean increment is not zero");
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                if (std::abs(cov[i][j] - covariance[i][j]) > 1e-12)
                    throw std::invalid_argument(
                        "IncrementLaw: covariance field disagrees with support");
    }

    double per_coordinate_variance() const { return covariance[0][0]; }

    // sqrt(det covariance): scales the exponent constant of the variational
    // constraint when the covariance is not the identity.
    double clt_prefactor_scale() const {
        return std::sqrt(covariance[0][0] * covariance[1][1] -
                         covariance[0][1] * covariance[1][0]);
    }

    std::int32_t max_step_norm() const {
        std::int32_t m = 0;
        for (const auto& [v, p] : support) {
            m = std::max({m, std::abs(v.x), std::abs(v.y)});
        }
        return m;
    }

    static const IncrementLaw& diagonal() {
        static const IncrementLaw law = [] {
            IncrementLaw l;
            l.name = LawName::diagonal;
            l.support = {{{+1, +1}, 0.25}, {{+1, -1}, 0.25}, {{-1, +1}, 0.25}, {{-1, -1}, 0.25}};
            l.covariance = {{{1.0, 0.0}, {0.0, 1.0}}};
            l.moment_note =
                "bounded steps: E[H(|X|)] < inf for every continuous increasing H, in "
                "particular super-polynomial ones; lives on the even sublattice x+y = 0 mod 2";
            l.validate();
            return l;
        }();
        return law;
    }

    static const IncrementLaw& nearest_neighbor() {
        static const IncrementLaw law = [] {
            IncrementLaw l;
            l.name = LawName::nearest_neighbor;
            l.support = {{{+1, 0}, 0.25}, {{-1, 0}, 0.25}, {{0, +1}, 0.25}, {{0, -1}, 0.25}};
            l.covariance = {{{0.5, 0.0}, {0.0, 0.5}}};
            l.moment_note =
                "bounded steps: E[H(|X|)] < inf for every continuous increasing H; covariance "
                "I/2, so constants tied to identity covariance need the prefactor hook";
            l.validate();
            return l;
        }();
        return law;
    }

    static const IncrementLaw& by_name(std::string_view name) {
        if (name == "diagonal") return diagonal();
        if (name == "nearest-neighbor" || name == "nearest_neighbor") return nearest_neighbor();
        throw std::invalid_argument("unknown increment law: " + std::string(name));
    }
};

// Draws one increment per call, consuming exactly one engine output per step
// regardless of the sampling path, so that streams can be replayed or shared
// between independent re-implementations.
class IncrementSampler {
public:
    explicit IncrementSampler(const IncrementLaw& law) {
        law.validate();
        for (const auto& [v, p] : law.support) atoms_.push_back(v);
        uniform_pow2_ = (atoms_.size() & (atoms_.size() - 1)) == 0;
        double cum = 0.0;
        for (const auto& [v, p] : law.support) {
            uniform_pow2_ = uniform_pow2_ && std::abs(p - 1.0 / atoms_.size()) <= 1e-15;
            cum += p;
            cdf_.push_back(cum);
        }
        cdf_.back() = 1.0;
        mask_ = atoms_.size() - 1;
    }

    LatticePoint step(Xoshiro256pp& rng) const {
        if (uniform_pow2_) return atoms_[rng.next() & mask_];
        const double u = rng.uniform01();
        std::size_t k = 0;
        while (k + 1 < cdf_.size() && u >= cdf_[k]) ++k;
        return atoms_[k];
    }

private:
    std::vector<LatticePoint> atoms_;
    std::vector<double> cdf_;
    std::uint64_t mask_ = 0;
    bool uniform_pow2_ = false;
};

}  // namespace rwi
