#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace kelly {

inline unsigned default_threads() {
    static std::atomic<unsigned> cap{0};
    const unsigned c = cap.load();
    if (c != 0) return c;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

inline void set_thread_cap(unsigned n);

namespace detail {
inline std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{0};
    return cap;
}
} // namespace detail

inline void set_thread_cap(unsigned n) { detail::thread_cap().store(n); }

inline unsigned effective_threads(std::size_t tasks) {
    unsigned n = detail::thread_cap().load();
    if (n == 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : hw;
    }
    if (tasks < n) n = static_cast<unsigned>(tasks);
    return n == 0 ? 1 : n;
}

// Runs fn(i) for i in [0, n). Work is claimed by index from a shared counter;
// results must be written to per-index slots so the merge order is fixed.
template <class Fn>
void parallel_for(std::size_t n, const Fn& fn) {
    const unsigned workers = effective_threads(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr eptr = nullptr;
    std::atomic<bool> failed{false};
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) eptr = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (eptr) std::rethrow_exception(eptr);
}

} // namespace kelly
