#pragma once

#include <boost/rational.hpp>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>

#include "popmsg/model.hpp"

namespace popmsg {

/// Seeded generator driving the uniform random scheduler.
class SchedulerRng {
public:
    explicit SchedulerRng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    std::mt19937_64& engine() noexcept { return engine_; }

    /// Ordered pair (i, j), i != j, uniform over the n(n-1) possibilities.
    /// One draw k in [0, n(n-1)) is split as i = k / (n-1) and the responder
    /// index skips over i.
    std::pair<std::size_t, std::size_t> draw_pair(std::size_t n) {
        const std::uint64_t span = static_cast<std::uint64_t>(n) * (n - 1);
        std::uniform_int_distribution<std::uint64_t> dist(0, span - 1);
        const std::uint64_t k = dist(engine_);
        const std::size_t i = static_cast<std::size_t>(k / (n - 1));
        std::size_t j = static_cast<std::size_t>(k % (n - 1));
        if (j >= i) ++j;
        return {i, j};
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Parallel time 2k/n held exactly.
class ParallelTime {
public:
    ParallelTime() = default;
    ParallelTime(std::uint64_t interactions, std::uint64_t n)
        : value_(static_cast<long long>(2 * interactions), static_cast<long long>(n)) {
        if (n == 0) throw std::invalid_argument("population size must be positive");
    }

    [[nodiscard]] const boost::rational<long long>& exact() const noexcept { return value_; }
    [[nodiscard]] double value() const noexcept {
        return static_cast<double>(value_.numerator()) / static_cast<double>(value_.denominator());
    }

    friend bool operator==(const ParallelTime&, const ParallelTime&) = default;

private:
    boost::rational<long long> value_{0};
};

/// One scheduler step: draws an ordered pair and applies the interaction.
template <Protocol P>
std::pair<std::size_t, std::size_t> step(Configuration<P>& config, const P& proto,
                                         SchedulerRng& rng) {
    if (config.size() < 2) throw InvalidInteraction("population needs at least two agents");
    const auto [i, j] = rng.draw_pair(config.size());
    interact(config.agents, i, j, proto);
    ++config.interactions;
    return {i, j};
}

}  // namespace popmsg
