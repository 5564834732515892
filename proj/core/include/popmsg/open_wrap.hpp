#pragma once

// Simulates any protocol P with a finite message alphabet using a constant
// set of messages. A token moves from agent to agent; its holder marks itself
// and its next partner as simulated initiator and responder, the marked pair
// exchanges P-messages bit by bit, and both then apply P's transition.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "popmsg/model.hpp"

namespace popmsg::stable {

enum class Mark : std::uint8_t { unmarked, initiator, responder };
enum class Bit : std::uint8_t { zero, one, end };

struct WrapMessage {
    bool leader = false;
    bool token = false;
    Mark mark = Mark::unmarked;
    Bit bit = Bit::zero;
    friend auto operator<=>(const WrapMessage&, const WrapMessage&) = default;
};

template <Protocol P>
struct WrapInput {
    typename P::Input p{};
    bool leader = false;
};

template <Protocol P>
class OpenWrap {
public:
    struct Internal {
        typename P::State p{};
        /// Bits of the other agent's message received so far, MSB first.
        std::uint64_t other = 0;
        std::uint8_t other_len = 0;
        /// Own bits already shown to the partner.
        std::uint8_t sent = 0;
        friend bool operator==(const Internal&, const Internal&) = default;
        friend auto operator<=>(const Internal&, const Internal&) = default;
    };
    using Input = WrapInput<P>;
    using Message = WrapMessage;
    using Output = typename P::Output;
    using State = AgentState<Internal, Message>;

    explicit OpenWrap(P inner = {}) : p_(std::move(inner)), alphabet_(p_.message_alphabet()) {
        if (alphabet_.empty()) throw std::invalid_argument("simulated protocol has no enumerable messages");
        const auto size = static_cast<std::uint64_t>(alphabet_.size());
        width_ = std::max<unsigned>(1, static_cast<unsigned>(std::bit_width(size - 1)));
        if (width_ > 63) throw std::invalid_argument("simulated message alphabet too large");
    }

    [[nodiscard]] const P& inner() const noexcept { return p_; }
    /// Bits per serialized P-message.
    [[nodiscard]] unsigned width() const noexcept { return width_; }

    /// Index of `m` in P's declared alphabet.
    [[nodiscard]] std::uint64_t encode(const typename P::Message& m) const {
        const auto it = std::find(alphabet_.begin(), alphabet_.end(), m);
        if (it == alphabet_.end()) throw ProtocolViolation("message missing from the declared alphabet");
        return static_cast<std::uint64_t>(it - alphabet_.begin());
    }
    [[nodiscard]] typename P::Message decode(std::uint64_t index) const {
        if (index >= alphabet_.size()) throw ProtocolViolation("decoded message index out of range");
        return alphabet_[index];
    }

    State init(const Input& in, InitRng& rng) const {
        State s;
        s.internal.p = p_.init(in.p, rng);
        s.message.leader = in.leader;
        return s;
    }

    /// Wraps an existing P state.
    State wrap(const typename P::State& p, bool leader) const {
        State s;
        s.internal.p = p;
        s.message.leader = leader;
        return s;
    }

    void update(State& s, const Message& m, Role role) const {
        auto& v = s.internal;
        auto& own = s.message;
        if (own.mark == Mark::unmarked) {
            if (own.leader) {
                if (m.mark == Mark::unmarked && !m.token) own.leader = false;
            } else if (own.token) {
                if (m.mark == Mark::unmarked && !m.leader) {
                    own.mark = role == Role::initiator ? Mark::initiator : Mark::responder;
                    begin_exchange(s);
                }
            } else if (m.leader && m.mark == Mark::unmarked) {
                own.token = true;
            } else if (m.token && m.mark == Mark::unmarked) {
                own.mark = role == Role::initiator ? Mark::initiator : Mark::responder;
                begin_exchange(s);
            }
            return;
        }
        const bool partner = (own.mark == Mark::initiator && m.mark == Mark::responder) ||
                             (own.mark == Mark::responder && m.mark == Mark::initiator);
        if (!partner) return;
        if (own.bit == Bit::end && m.bit == Bit::end) {
            const auto seen = decode(v.other);
            p_.update(v.p, seen, own.mark == Mark::initiator ? Role::initiator : Role::responder);
            own.mark = Mark::unmarked;
            own.bit = Bit::zero;
            v.other = 0;
            v.other_len = 0;
            v.sent = 0;
            if (own.token) {
                own.token = false;
                own.leader = true;
            }
            return;
        }
        if (m.bit != Bit::end) {
            if (v.other_len >= width_) throw ProtocolViolation("partner sent more bits than a message holds");
            v.other = (v.other << 1) | (m.bit == Bit::one ? 1u : 0u);
            ++v.other_len;
        }
        if (own.bit != Bit::end) ++v.sent;
        own.bit = current_bit(v);
    }

    Output output(const State& s) const { return p_.output(s.internal.p); }

    std::vector<Message> message_alphabet() const {
        std::vector<Message> out;
        for (bool l : {false, true})
            for (bool t : {false, true})
                for (auto mk : {Mark::unmarked, Mark::initiator, Mark::responder})
                    for (auto b : {Bit::zero, Bit::one, Bit::end}) out.push_back({l, t, mk, b});
        return out;
    }

    /// Drops the overhead fields.
    template <class C>
    std::vector<typename P::State> project(const C& config) const {
        std::vector<typename P::State> out;
        out.reserve(config.size());
        for (const auto& a : config.agents) out.push_back(a.internal.p);
        return out;
    }

private:
    void begin_exchange(State& s) const {
        s.internal.other = 0;
        s.internal.other_len = 0;
        s.internal.sent = 0;
        s.message.bit = current_bit(s.internal);
    }

    Bit current_bit(const Internal& v) const {
        if (v.sent >= width_) return Bit::end;
        const std::uint64_t code = encode(v.p.message);
        return ((code >> (width_ - 1 - v.sent)) & 1u) != 0 ? Bit::one : Bit::zero;
    }

    P p_;
    std::vector<typename P::Message> alphabet_;
    unsigned width_ = 1;
};

/// Counts completed simulated transitions (the token holder re-arming as leader).
class TransitionCounter {
public:
    explicit TransitionCounter(std::uint64_t stop_after = 0) : stop_after_(stop_after) {}

    template <class C>
    void reset(const C&) {
        completed_ = 0;
        last_ = 0;
    }
    template <class C>
    void before_step(const C& c, std::size_t i, std::size_t j) {
        token_i_ = c.agents[i].message.token;
        token_j_ = c.agents[j].message.token;
    }
    template <class C>
    void after_step(const C& c, std::size_t i, std::size_t j) {
        if ((token_i_ && c.agents[i].message.leader) || (token_j_ && c.agents[j].message.leader)) {
            ++completed_;
            last_ = c.interactions;
        }
    }
    [[nodiscard]] bool done() const noexcept { return stop_after_ != 0 && completed_ >= stop_after_; }
    [[nodiscard]] std::uint64_t completed() const noexcept { return completed_; }
    /// Interaction index of the latest completion.
    [[nodiscard]] std::uint64_t last() const noexcept { return last_; }

private:
    std::uint64_t stop_after_;
    std::uint64_t completed_ = 0;
    std::uint64_t last_ = 0;
    bool token_i_ = false;
    bool token_j_ = false;
};

/// Checks one S step: the projected configuration either stays unchanged or
/// changes exactly by one P interaction between the two stepping agents.
template <Protocol P>
bool projected_step_valid(const P& proto, const std::vector<typename P::State>& before,
                          const std::vector<typename P::State>& after, std::size_t i, std::size_t j) {
    if (before == after) return true;
    for (std::size_t k = 0; k < before.size(); ++k)
        if (k != i && k != j && before[k] != after[k]) return false;
    for (const auto& [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
        auto x = before[a];
        auto y = before[b];
        const auto seen_x = y.message;
        const auto seen_y = x.message;
        proto.update(x, seen_x, Role::initiator);
        proto.update(y, seen_y, Role::responder);
        if (x == after[a] && y == after[b]) return true;
    }
    return false;
}

}  // namespace popmsg::stable
