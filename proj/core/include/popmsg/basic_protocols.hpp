#pragma once

// Small reference protocols used by the engine tests, the reachability oracle
// and as downstream plug-ins for the composition constructions.

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "popmsg/model.hpp"

namespace popmsg {

struct Empty {
    friend auto operator<=>(const Empty&, const Empty&) = default;
};

/// Identity transition. The internal field keeps the input symbol so that
/// configurations stay distinguishable.
struct NullProtocol {
    using Input = std::uint8_t;
    using Internal = std::uint8_t;
    using Message = std::uint8_t;
    using Output = std::uint8_t;
    using State = AgentState<Internal, Message>;

    State init(Input in, InitRng&) const { return {in, 0}; }
    void update(State&, const Message&, Role) const {}
    Output output(const State& s) const { return s.internal; }
    std::vector<Message> message_alphabet() const { return {0}; }
};

/// One-way epidemic i,s -> i,i. The message is the infection bit.
struct EpidemicProtocol {
    using Input = bool;
    using Internal = Empty;
    using Message = bool;
    using Output = bool;
    using State = AgentState<Internal, Message>;

    State init(Input infected, InitRng&) const { return {{}, infected}; }
    void update(State& s, const Message& m, Role) const { s.message = s.message || m; }
    Output output(const State& s) const { return s.message; }
    std::vector<Message> message_alphabet() const { return {false, true}; }
};

/// Fratricide leader election l,l -> l,f. Message is the leader bit.
struct FratricideProtocol {
    using Input = bool;
    using Internal = Empty;
    using Message = bool;
    using Output = bool;
    using State = AgentState<Internal, Message>;

    State init(Input leader, InitRng&) const { return {{}, leader}; }
    void update(State& s, const Message& m, Role role) const {
        if (s.message && m && role == Role::responder) s.message = false;
    }
    Output output(const State& s) const { return s.message; }
    std::vector<Message> message_alphabet() const { return {false, true}; }
};

/// Three-state open variant of fratricide: l,l -> l,f, and a follower that
/// meets a leader moves to f*.
struct ThreeStateFratricide {
    enum class Kind : std::uint8_t { leader, follower, follower_star };

    using Input = Kind;
    using Internal = Empty;
    using Message = Kind;
    using Output = bool;
    using State = AgentState<Internal, Message>;

    State init(Input k, InitRng&) const { return {{}, k}; }
    void update(State& s, const Message& m, Role role) const {
        if (s.message == Kind::leader && m == Kind::leader) {
            if (role == Role::responder) s.message = Kind::follower;
        } else if (s.message == Kind::follower && m == Kind::leader) {
            s.message = Kind::follower_star;
        }
    }
    Output output(const State& s) const { return s.message == Kind::leader; }
    std::vector<Message> message_alphabet() const {
        return {Kind::leader, Kind::follower, Kind::follower_star};
    }
};

/// Each agent adopts the partner's message. Distinguishes simultaneous from
/// sequential update semantics.
struct SwapMessageProtocol {
    using Input = std::uint8_t;
    using Internal = Empty;
    using Message = std::uint8_t;
    using Output = std::uint8_t;
    using State = AgentState<Internal, Message>;

    std::uint8_t alphabet_size = 4;

    State init(Input in, InitRng&) const { return {{}, in}; }
    void update(State& s, const Message& m, Role) const { s.message = m; }
    Output output(const State& s) const { return s.message; }
    std::vector<Message> message_alphabet() const {
        std::vector<Message> out;
        for (std::uint8_t v = 0; v < alphabet_size; ++v) out.push_back(v);
        return out;
    }
};

/// Leader-driven protocols expose a deterministic initial state for a given
/// input and leader flag, which lets composition wrappers reset them.
template <class P>
concept LeaderDriven = Protocol<P> && requires(const P& p, const typename P::Input& in) {
    { p.initial(in, true) } -> std::same_as<typename P::State>;
};

/// Leader-driven 1-bit broadcast: the leader's input bit spreads by epidemic.
/// Inputs are per-agent bits; only the leader's bit matters for the output.
struct LeaderBitBroadcast {
    struct Message {
        bool leader = false;
        bool informed = false;
        bool bit = false;
        friend auto operator<=>(const Message&, const Message&) = default;
    };
    using Input = bool;
    using Internal = Empty;
    using Output = std::optional<bool>;
    using State = AgentState<Internal, Message>;

    State initial(Input bit, bool leader) const {
        return {{}, Message{leader, leader, leader ? bit : false}};
    }
    State init(Input bit, InitRng&) const { return initial(bit, false); }
    void update(State& s, const Message& m, Role) const {
        if (!s.message.informed && m.informed) {
            s.message.informed = true;
            s.message.bit = m.bit;
        }
    }
    Output output(const State& s) const {
        if (!s.message.informed) return std::nullopt;
        return s.message.bit;
    }
    std::vector<Message> message_alphabet() const {
        std::vector<Message> out;
        for (int l = 0; l < 2; ++l)
            for (int i = 0; i < 2; ++i)
                for (int b = 0; b < 2; ++b) out.push_back(Message{l != 0, i != 0, b != 0});
        return out;
    }
};

}  // namespace popmsg
