#pragma once

// Exact interval arithmetic for the counting protocol. An interval in round r
// is [a, a + 2^-r] with a = A / 2^(r+2) for an unbounded integer A.

#include <boost/multiprecision/cpp_int.hpp>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

namespace popmsg::counting {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

class NotYetDecidable : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class DyadicInterval {
public:
    /// [0, 1] in round 0.
    DyadicInterval() = default;
    /// a = numerator / 2^(r+2), length 2^-r.
    DyadicInterval(BigInt numerator, unsigned r);
    /// a = num / 2^exp; requires exp <= r + 2.
    static DyadicInterval from_fraction(const BigInt& num, unsigned exp, unsigned r);

    [[nodiscard]] const BigInt& numerator() const noexcept { return num_; }
    [[nodiscard]] unsigned round() const noexcept { return r_; }
    /// 2^(r+2), the denominator of a.
    [[nodiscard]] BigInt denominator() const;

    [[nodiscard]] Rational lower() const;
    [[nodiscard]] Rational upper() const;
    [[nodiscard]] Rational length() const;
    [[nodiscard]] bool contains(const Rational& x) const;

    /// Mass of an agent with weight w: a + w / 2^(r+2).
    [[nodiscard]] Rational mass(unsigned w) const;

    /// Interval of the next round after moving the lower bound by w_min units.
    [[nodiscard]] DyadicInterval advanced(unsigned w_min) const;

    friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;
    friend std::strong_ordering operator<=>(const DyadicInterval& x, const DyadicInterval& y) {
        if (auto c = x.r_ <=> y.r_; c != 0) return c;
        if (x.num_ < y.num_) return std::strong_ordering::less;
        if (y.num_ < x.num_) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

private:
    BigInt num_{0};
    unsigned r_ = 0;
};

/// Fast averaging: initiator takes the floor, responder the ceiling.
std::pair<std::uint8_t, std::uint8_t> average_weights(std::uint8_t initiator, std::uint8_t responder);

/// w_min at the end of an Averaging phase.
std::uint8_t end_averaging(std::uint8_t w);

std::uint8_t propagate_min(std::uint8_t own, std::uint8_t seen);

struct RoundUpdate {
    DyadicInterval interval;
    unsigned w = 0;
};

/// a' = a + w_min / (4 2^r), w' = 2 (w - w_min). Throws ProtocolViolation when
/// w < w_min.
RoundUpdate round_update(const DyadicInterval& interval, unsigned w, unsigned w_min);

/// n if exactly one integer reciprocal 1/n lies in the interval.
std::optional<std::uint64_t> unique_reciprocal(const DyadicInterval& interval);

/// k if exactly one fraction k/n (k >= 0 integer) lies in the interval.
std::optional<std::uint64_t> unique_multiple(const DyadicInterval& interval, std::uint64_t n);

/// Number of powers of two 2^-k (k >= 0) in the interval; nullopt if infinite.
std::optional<std::uint64_t> powers_of_two_in(const DyadicInterval& interval);

/// k if exactly one 2^-k lies in the interval. With none, falls back to the
/// smallest exponent inside `previous`; throws NotYetDecidable if `previous`
/// is absent in that case. Returns nullopt while two or more remain.
std::optional<unsigned> unique_power_of_two(const DyadicInterval& interval,
                                            const std::optional<DyadicInterval>& previous);

}  // namespace popmsg::counting
