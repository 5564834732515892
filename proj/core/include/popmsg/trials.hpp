#pragma once

// Runs independent trials on a small worker pool. Each trial owns all of its
// state; results come back in seed order.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace popmsg {

inline unsigned default_jobs() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

template <class Fn>
auto run_trials(const std::vector<std::uint64_t>& seeds, unsigned jobs, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::uint64_t>> {
    using R = std::invoke_result_t<Fn&, std::uint64_t>;
    std::vector<std::optional<R>> slots(seeds.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= seeds.size()) return;
            try {
                slots[k].emplace(fn(seeds[k]));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(seeds.size());
                return;
            }
        }
    };

    const unsigned workers =
        std::max(1u, std::min<unsigned>(jobs == 0 ? default_jobs() : jobs,
                                        static_cast<unsigned>(std::max<std::size_t>(seeds.size(), 1))));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<R> out;
    out.reserve(seeds.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

/// Consecutive seeds starting at `first`.
inline std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
    std::vector<std::uint64_t> s(count);
    std::iota(s.begin(), s.end(), first);
    return s;
}

}  // namespace popmsg
