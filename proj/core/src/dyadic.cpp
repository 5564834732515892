#include "popmsg/dyadic.hpp"

#include <algorithm>

#include "popmsg/model.hpp"

namespace popmsg::counting {

namespace {

BigInt pow2(unsigned e) { return BigInt(1) << e; }

unsigned floor_log2(const BigInt& x) { return static_cast<unsigned>(boost::multiprecision::msb(x)); }

unsigned ceil_log2(const BigInt& x) {
    const unsigned f = floor_log2(x);
    return pow2(f) == x ? f : f + 1;
}

BigInt ceil_div(const BigInt& a, const BigInt& b) { return (a + b - 1) / b; }

}  // namespace

DyadicInterval::DyadicInterval(BigInt numerator, unsigned r) : num_(std::move(numerator)), r_(r) {
    if (num_ < 0) throw std::invalid_argument("interval lower bound must be non-negative");
    if (num_ + 4 > denominator()) throw std::invalid_argument("interval must lie within [0, 1]");
}

DyadicInterval DyadicInterval::from_fraction(const BigInt& num, unsigned exp, unsigned r) {
    if (exp > r + 2) throw std::invalid_argument("lower bound needs more than r + 2 fractional bits");
    return {num << (r + 2 - exp), r};
}

BigInt DyadicInterval::denominator() const { return pow2(r_ + 2); }

Rational DyadicInterval::lower() const { return Rational(num_, denominator()); }

Rational DyadicInterval::upper() const { return Rational(num_ + 4, denominator()); }

Rational DyadicInterval::length() const { return Rational(BigInt(1), pow2(r_)); }

bool DyadicInterval::contains(const Rational& x) const { return lower() <= x && x <= upper(); }

Rational DyadicInterval::mass(unsigned w) const { return Rational(num_ + w, denominator()); }

DyadicInterval DyadicInterval::advanced(unsigned w_min) const {
    return {(num_ + w_min) * 2, r_ + 1};
}

std::pair<std::uint8_t, std::uint8_t> average_weights(std::uint8_t initiator, std::uint8_t responder) {
    const unsigned sum = static_cast<unsigned>(initiator) + responder;
    return {static_cast<std::uint8_t>(sum / 2), static_cast<std::uint8_t>((sum + 1) / 2)};
}

std::uint8_t end_averaging(std::uint8_t w) { return std::min<std::uint8_t>(w, 3); }

std::uint8_t propagate_min(std::uint8_t own, std::uint8_t seen) { return std::min(own, seen); }

RoundUpdate round_update(const DyadicInterval& interval, unsigned w, unsigned w_min) {
    if (w < w_min) throw ProtocolViolation("weight below the agreed minimum: rounds are desynchronized");
    return {interval.advanced(w_min), 2 * (w - w_min)};
}

std::optional<std::uint64_t> unique_reciprocal(const DyadicInterval& interval) {
    const BigInt& a = interval.numerator();
    if (a == 0) return std::nullopt;
    const BigInt den = interval.denominator();
    const BigInt lo = ceil_div(den, a + 4);
    const BigInt hi = den / a;
    if (lo != hi || lo < 1) return std::nullopt;
    return static_cast<std::uint64_t>(lo);
}

std::optional<std::uint64_t> unique_multiple(const DyadicInterval& interval, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    const BigInt den = interval.denominator();
    const BigInt lo = ceil_div(interval.numerator() * n, den);
    const BigInt hi = (interval.numerator() + 4) * n / den;
    if (lo != hi) return std::nullopt;
    return static_cast<std::uint64_t>(lo);
}

namespace {

// Exponent range [k_lo, k_hi] of powers 2^-k inside the interval; k_hi absent
// when a = 0 (unbounded).
struct PowerRange {
    long long lo = 0;
    std::optional<long long> hi;
};

PowerRange power_range(const DyadicInterval& iv) {
    const long long e = iv.round() + 2;
    PowerRange out;
    out.lo = std::max<long long>(0, e - floor_log2(iv.numerator() + 4));
    if (iv.numerator() != 0) out.hi = e - ceil_log2(iv.numerator());
    return out;
}

}  // namespace

std::optional<std::uint64_t> powers_of_two_in(const DyadicInterval& interval) {
    const auto range = power_range(interval);
    if (!range.hi) return std::nullopt;
    return *range.hi < range.lo ? 0 : static_cast<std::uint64_t>(*range.hi - range.lo + 1);
}

std::optional<unsigned> unique_power_of_two(const DyadicInterval& interval,
                                            const std::optional<DyadicInterval>& previous) {
    const auto range = power_range(interval);
    if (!range.hi || *range.hi > range.lo) return std::nullopt;
    if (*range.hi == range.lo) return static_cast<unsigned>(range.lo);
    if (!previous) throw NotYetDecidable("no power of two in the interval and no previous interval");
    const auto prev = power_range(*previous);
    if (prev.hi && *prev.hi < prev.lo)
        throw NotYetDecidable("previous interval holds no power of two either");
    return static_cast<unsigned>(prev.lo);
}

}  // namespace popmsg::counting
