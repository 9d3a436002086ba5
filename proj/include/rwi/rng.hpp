#pragma once

// Deterministic random number streams. Every Monte Carlo result in this
// library is keyed by a 64-bit root seed plus a chain of stream keys; equal
// (root, key...) tuples give bit-identical streams on any platform and for
// any worker count. Engines are plain integer arithmetic, no libc rand.

#include <array>
#include <cstdint>

namespace rwi {

inline constexpr std::uint64_t kGolden64 = 0x9e3779b97f4a7c15ull;

// splitmix64 output function (Stafford mix13).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

// Advances a splitmix64 state and returns the next output.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    state += kGolden64;
    return mix64(state);
}

// One-way combination of a seed with a stream key. Used to carve disjoint
// substreams: replica seeds from a root, per-walk seeds from a replica seed,
// branch seeds from a run seed, and so on.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t key) {
    std::uint64_t s = root + kGolden64 * (key + 1);
    s = mix64(s);
    return mix64(s + root);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(root, a), b);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b,
                                    std::uint64_t c) {
    return derive_seed(derive_seed(root, a, b), c);
}

// xoshiro256++ (Blackman & Vigna). State seeded through splitmix64 so that
// any 64-bit value, including 0, yields a healthy stream.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace rwi
