#pragma once

// Planar integer lattice points and a flat open-addressed hash set of visited
// sites. The set is the hot data structure of the whole simulation side:
// one insert per walk step, one probe per intersection query.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "rwi/rng.hpp"

namespace rwi {

struct LatticePoint {
    std::int32_t x = 0;
    std::int32_t y = 0;

    friend bool operator==(LatticePoint a, LatticePoint b) {
        return a.x == b.x && a.y == b.y;
    }
};

using Path = std::vector<LatticePoint>;  // positions S_1..S_n; S_0 = origin implicit

constexpr std::uint64_t pack_point(LatticePoint p) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.x)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.y));
}

constexpr LatticePoint unpack_point(std::uint64_t k) {
    return {static_cast<std::int32_t>(static_cast<std::uint32_t>(k >> 32)),
            static_cast<std::int32_t>(static_cast<std::uint32_t>(k))};
}

// Open-addressed set of packed lattice points. Linear probing, power-of-two
// capacity, max load 1/2. The empty slot sentinel is the packed form of
// (INT32_MIN, INT32_MIN); walks started at the origin with fewer than 2^31
// bounded steps can never reach it, and torus wrapping keeps coordinates
// small, so the sentinel is never a legal site.
class PointSet {
public:
    PointSet() { rehash(16); }
    explicit PointSet(std::size_t expected) { rehash(capacity_for(expected)); }

    static constexpr std::uint64_t kEmpty =
        pack_point({std::numeric_limits<std::int32_t>::min(),
                    std::numeric_limits<std::int32_t>::min()});

    void reserve(std::size_t expected) {
        std::size_t want = capacity_for(expected);
        if (want > slots_.size()) rehash(want);
    }

    // Returns true if the point was newly inserted.
    bool insert(LatticePoint p) { return insert_packed(pack_point(p)); }

    bool insert_packed(std::uint64_t key) {
        std::size_t i = slot_of(key);
        while (slots_[i] != kEmpty) {
            if (slots_[i] == key) return false;
            i = (i + 1) & mask_;
        }
        slots_[i] = key;
        if (++size_ * 2 > slots_.size()) grow();
        return true;
    }

    bool contains(LatticePoint p) const { return contains_packed(pack_point(p)); }

    bool contains_packed(std::uint64_t key) const {
        std::size_t i = slot_of(key);
        while (slots_[i] != kEmpty) {
            if (slots_[i] == key) return true;
            i = (i + 1) & mask_;
        }
        return false;
    }

    std::size_t size() const { return size_; }

    void clear() {
        if (size_ == 0) return;
        std::fill(slots_.begin(), slots_.end(), kEmpty);
        size_ = 0;
    }

    template <class Fn>
    void for_each(Fn&& fn) const {
        for (std::uint64_t k : slots_)
            if (k != kEmpty) fn(unpack_point(k));
    }

    template <class Fn>
    void for_each_packed(Fn&& fn) const {
        for (std::uint64_t k : slots_)
            if (k != kEmpty) fn(k);
    }

private:
    static std::size_t capacity_for(std::size_t expected) {
        std::size_t cap = 16;
        while (cap < 2 * expected + 2) cap <<= 1;
        return cap;
    }

    std::size_t slot_of(std::uint64_t key) const { return mix64(key) & mask_; }

    void rehash(std::size_t cap) {
        std::vector<std::uint64_t> old;
        old.swap(slots_);
        slots_.assign(cap, kEmpty);
        mask_ = cap - 1;
        size_ = 0;
        for (std::uint64_t k : old)
            if (k != kEmpty) insert_packed(k);
    }

    void grow() { rehash(slots_.size() * 2); }

    std::vector<std::uint64_t> slots_;
    std::size_t mask_ = 0;
    std::size_t size_ = 0;
};

}  // namespace rwi
