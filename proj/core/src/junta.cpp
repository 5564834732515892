#include "popmsg/junta.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace popmsg::junta {

namespace {

bool mul_overflows(std::uint64_t a, std::uint64_t b) {
    return b != 0 && a > std::numeric_limits<std::uint64_t>::max() / b;
}

}  // namespace

IntervalSchedule::IntervalSchedule(unsigned base, std::uint64_t c) : base_(base), c_(c) {
    if (base != 2 && base != 4) throw std::invalid_argument("schedule base must be 2 or 4");
    if (c == 0 || c % 2 != 0) throw std::invalid_argument("schedule scale c must be positive and even");
    std::uint64_t power = 1;
    std::uint64_t prev_door = 0;
    constexpr std::uint64_t limit = std::numeric_limits<std::uint32_t>::max();
    for (;;) {
        if (mul_overflows(c, power) || mul_overflows(3 * (c / 2), power)) break;
        const std::uint64_t g = c * power;
        const std::uint64_t r = 3 * (c / 2) * power;
        if (prev_door + g + r > limit) break;
        green_end_.push_back(prev_door + g);
        prev_door += g + r;
        doors_.push_back(prev_door);
        if (mul_overflows(power, base)) break;
        power *= base;
    }
}

std::uint64_t IntervalSchedule::green_size(unsigned i) const {
    return green_end(i) - (i == 0 ? 0 : door(i - 1));
}

std::uint64_t IntervalSchedule::red_size(unsigned i) const { return door(i) - green_end(i); }

Position IntervalSchedule::classify(std::uint64_t count) const {
    if (count == 0) return {0, Kind::PreStart};
    for (unsigned i = 0; i < doors_.size(); ++i) {
        if (count > doors_[i]) continue;
        if (count == doors_[i]) return {i, Kind::Door};
        return {i, count <= green_end_[i] ? Kind::Green : Kind::Red};
    }
    throw std::out_of_range("count beyond the representable schedule");
}

unsigned level_from_geometric(std::uint64_t g) {
    if (g == 0) throw std::invalid_argument("geometric draw must be at least 1");
    return static_cast<unsigned>(std::bit_width(g - 1));
}

unsigned sample_level(std::mt19937_64& rng) {
    std::uint64_t tails = 0;
    for (;;) {
        const std::uint64_t bits = rng();
        if (bits != 0) {
            tails += static_cast<std::uint64_t>(std::countr_zero(bits));
            break;
        }
        tails += 64;
    }
    return level_from_geometric(tails + 1);
}

std::vector<unsigned> admissible_door_rounds(std::uint64_t n) {
    const double ll = std::log2(std::log2(static_cast<double>(n)));
    const auto lo = static_cast<unsigned>(std::floor(ll));
    const auto hi = static_cast<unsigned>(std::ceil(ll));
    std::vector<unsigned> out{lo};
    if (hi != lo) out.push_back(hi);
    out.push_back(hi + 1);
    return out;
}

}  // namespace popmsg::junta
