#pragma once

// Replica-farm helper. Work items are indexed 0..count-1 and claimed through
// an atomic cursor, so scheduling is load-balanced; callers must make each
// item's result a pure function of its index (seeds derived from the index,
// results written to per-index or per-worker slots) so that output is
// identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rwi {

inline unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// fn(index, worker) is called once per index. worker ranges over 0..w-1 and
// can key per-worker scratch. Exceptions are captured and rethrown (first
// one wins) after all workers join.
template <class Fn>
void parallel_for(std::uint64_t count, unsigned workers, Fn&& fn) {
    if (workers == 0) workers = default_workers();
    if (count == 0) return;
    if (workers > count) workers = static_cast<unsigned>(count);
    if (workers == 1) {
        for (std::uint64_t i = 0; i < count; ++i) fn(i, 0u);
        return;
    }

    std::atomic<std::uint64_t> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto body = [&](unsigned worker) {
        // Claim items in small chunks to amortize the atomic increment.
        constexpr std::uint64_t kChunk = 16;
        while (!failed.load(std::memory_order_relaxed)) {
            const std::uint64_t begin = cursor.fetch_add(kChunk);
            if (begin >= count) break;
            const std::uint64_t end = std::min(begin + kChunk, count);
            try {
                for (std::uint64_t i = begin; i < end; ++i) fn(i, worker);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rwi
