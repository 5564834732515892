#pragma once

// Message-restricted population protocol model.
//
// Every agent is split into an internal record that only the agent itself can
// read and a small message that its interaction partner observes. A protocol
// supplies an in-place update `update(state, observed_message, role)`; the
// engine hands each side of an interaction the partner's *pre-interaction*
// message, so both updates happen simultaneously.

#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace popmsg {

enum class Role : std::uint8_t { initiator, responder };

constexpr Role opposite(Role r) noexcept {
    return r == Role::initiator ? Role::responder : Role::initiator;
}

/// Generator used for randomized initial states (geometric levels, coin seeds).
using InitRng = std::mt19937_64;

template <class Internal, class Message>
struct AgentState {
    Internal internal{};
    Message message{};

    friend bool operator==(const AgentState&, const AgentState&) = default;
    friend auto operator<=>(const AgentState&, const AgentState&) = default;
};

/// Behavioral interface every protocol implements.
///
/// `update` must be a deterministic function of (state, observed, role): it may
/// read only the agent's own state and the partner's message. `message_alphabet`
/// enumerates every message value the protocol can ever display; the alphabet
/// does not depend on the population size.
template <class P>
concept Protocol =
    requires {
        typename P::Input;
        typename P::Internal;
        typename P::Message;
        typename P::Output;
        typename P::State;
        requires std::same_as<typename P::State,
                              AgentState<typename P::Internal, typename P::Message>>;
    } &&
    std::equality_comparable<typename P::Message> &&
    requires(const P& p, typename P::State& s, const typename P::State& cs,
             const typename P::Message& m, const typename P::Input& in, InitRng& rng, Role r) {
        { p.init(in, rng) } -> std::same_as<typename P::State>;
        { p.update(s, m, r) } -> std::same_as<void>;
        { p.output(cs) } -> std::convertible_to<typename P::Output>;
        { p.message_alphabet() } -> std::convertible_to<std::vector<typename P::Message>>;
    };

/// Protocols that expose a compact per-agent summary for time-series snapshots.
template <class P>
concept Summarizable = Protocol<P> && requires(const P& p, const typename P::State& s) {
    typename P::Summary;
    { p.summarize(s) } -> std::same_as<typename P::Summary>;
};

/// Pure transition: returns the successor of `state` after observing `observed`.
template <Protocol P>
[[nodiscard]] typename P::State delta(const P& proto, typename P::State state,
                                      const typename P::Message& observed, Role role) {
    proto.update(state, observed, role);
    return state;
}

class InvalidInteraction : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised by protocol operations whose preconditions signal a desynchronized
/// or otherwise corrupted execution.
class ProtocolViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <Protocol P>
struct Configuration {
    using State = typename P::State;

    std::vector<State> agents;
    std::uint64_t interactions = 0;

    [[nodiscard]] std::size_t size() const noexcept { return agents.size(); }

    friend bool operator==(const Configuration&, const Configuration&) = default;
};

/// Builds the initial configuration: agent k starts from `inputs[k]`.
template <Protocol P>
[[nodiscard]] Configuration<P> make_configuration(const P& proto,
                                                  const std::vector<typename P::Input>& inputs,
                                                  InitRng& rng) {
    if (inputs.size() < 2) throw std::invalid_argument("population needs at least two agents");
    Configuration<P> config;
    config.agents.reserve(inputs.size());
    for (const auto& in : inputs) config.agents.push_back(proto.init(in, rng));
    return config;
}

template <Protocol P>
[[nodiscard]] Configuration<P> make_configuration(const P& proto,
                                                  const std::vector<typename P::Input>& inputs,
                                                  std::uint64_t init_seed = 0) {
    InitRng rng(init_seed);
    return make_configuration(proto, inputs, rng);
}

/// Unchecked interaction: `i` initiates, `j` responds, both observe the
/// partner's pre-interaction message.
template <Protocol P>
inline void interact(std::vector<typename P::State>& agents, std::size_t i, std::size_t j,
                     const P& proto) {
    const typename P::Message seen_by_i = agents[j].message;
    const typename P::Message seen_by_j = agents[i].message;
    proto.update(agents[i], seen_by_i, Role::initiator);
    proto.update(agents[j], seen_by_j, Role::responder);
}

template <Protocol P>
void apply_interaction(Configuration<P>& config, std::size_t i, std::size_t j, const P& proto) {
    const auto n = config.size();
    if (i >= n || j >= n) {
        throw InvalidInteraction("agent index out of range: (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ") with n = " + std::to_string(n));
    }
    if (i == j) throw InvalidInteraction("an agent cannot interact with itself");
    interact(config.agents, i, j, proto);
    ++config.interactions;
}

template <Protocol P>
[[nodiscard]] std::vector<typename P::Output> outputs(const P& proto, const Configuration<P>& c) {
    std::vector<typename P::Output> out;
    out.reserve(c.size());
    for (const auto& a : c.agents) out.push_back(proto.output(a));
    return out;
}

}  // namespace popmsg
