#pragma once

// Stably composable leader election. Fratricide elects a leader, the leader
// acts as a base station that counts followers by moving them between two
// phases, and every increase of the count restarts the downstream
// leader-driven protocol P. Downstream steps run only between agents that both
// carry the go signal.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "popmsg/basic_protocols.hpp"
#include "popmsg/model.hpp"
#include "popmsg/reachability.hpp"
#include "popmsg/runner.hpp"

namespace popmsg::stable {

enum class SceRole : std::uint8_t { leader, follower };
enum class Signal : std::uint8_t { restart, go };

/// 6 c ln c + 1, with ln clamped to 0 for c <= 1.
inline double idle_threshold(std::uint64_t c) {
    const double lc = c <= 1 ? 0.0 : std::log(static_cast<double>(c));
    return 6.0 * static_cast<double>(c) * lc + 1.0;
}

template <LeaderDriven P>
class SceProtocol {
public:
    struct Message {
        SceRole role = SceRole::leader;
        std::uint8_t phase = 0;
        Signal signal = Signal::restart;
        typename P::Message p{};
        friend bool operator==(const Message&, const Message&) = default;
        friend auto operator<=>(const Message&, const Message&) = default;
    };
    struct Internal {
        std::uint64_t c[2] = {0, 0};
        std::uint64_t count = 0;
        typename P::Input input{};
        typename P::Internal p{};
        friend bool operator==(const Internal&, const Internal&) = default;
        friend auto operator<=>(const Internal&, const Internal&) = default;
    };
    using Input = typename P::Input;
    using Output = typename P::Output;
    using State = AgentState<Internal, Message>;

    explicit SceProtocol(P downstream = {}) : p_(std::move(downstream)) {}

    [[nodiscard]] const P& downstream() const noexcept { return p_; }

    State init(const Input& in, InitRng&) const { return initial(in); }

    State initial(const Input& in) const {
        State s;
        s.internal.input = in;
        set_downstream(s, p_.initial(in, true));
        return s;
    }

    /// Applies one step and reports whether the downstream state was reset.
    bool apply(State& s, const Message& m, Role role) const {
        auto& v = s.internal;
        auto& own = s.message;
        bool reset = false;

        if (own.signal == Signal::go && m.signal == Signal::go) {
            auto q = downstream_state(s);
            p_.update(q, m.p, role);
            set_downstream(s, q);
        }

        if (own.role == SceRole::leader && m.role == SceRole::leader) {
            if (role == Role::responder) {
                own.role = SceRole::follower;
            } else {
                s = initial(v.input);
                reset = true;
            }
        } else if (own.role == SceRole::leader && m.role == SceRole::follower) {
            const unsigned b = own.phase;
            if (m.phase == b) {
                v.count = 0;
                ++v.c[1 - b];
                if (v.c[b] == 0) {
                    own.signal = Signal::restart;
                    set_downstream(s, p_.initial(v.input, true));
                    reset = true;
                } else {
                    --v.c[b];
                    if (v.c[b] == 0) own.signal = Signal::go;
                }
            } else if (static_cast<double>(v.count) >= idle_threshold(v.c[1 - b])) {
                v.count = 0;
                own.phase = static_cast<std::uint8_t>(1 - own.phase);
            } else if (v.c[own.phase] == 0) {
                ++v.count;
            }
        } else if (own.role == SceRole::follower && m.role == SceRole::leader) {
            own.phase = static_cast<std::uint8_t>(1 - m.phase);
            own.signal = m.signal;
            if (own.signal == Signal::restart) {
                set_downstream(s, p_.initial(v.input, false));
                reset = true;
            }
        }
        return reset;
    }

    void update(State& s, const Message& m, Role role) const { apply(s, m, role); }

    Output output(const State& s) const { return p_.output(downstream_state(s)); }

    std::vector<Message> message_alphabet() const {
        std::vector<Message> out;
        for (auto r : {SceRole::leader, SceRole::follower})
            for (std::uint8_t ph = 0; ph < 2; ++ph)
                for (auto sig : {Signal::restart, Signal::go})
                    for (const auto& pm : p_.message_alphabet()) out.push_back({r, ph, sig, pm});
        return out;
    }

    typename P::State downstream_state(const State& s) const { return {s.internal.p, s.message.p}; }

private:
    static void set_downstream(State& s, const typename P::State& q) {
        s.internal.p = q.internal;
        s.message.p = q.message;
    }

    P p_;
};

/// Monitor that stops nothing but counts leaders for the safety check.
template <class Sce>
class LeaderCountMonitor {
public:
    template <class C>
    void reset(const C& c) {
        leaders_ = 0;
        for (const auto& a : c.agents) leaders_ += a.message.role == SceRole::leader ? 1 : 0;
        min_ = leaders_;
        increased_ = false;
    }
    template <class C>
    void before_step(const C& c, std::size_t i, std::size_t j) {
        before_ = leaders_;
        leaders_ -= c.agents[i].message.role == SceRole::leader ? 1 : 0;
        leaders_ -= c.agents[j].message.role == SceRole::leader ? 1 : 0;
    }
    template <class C>
    void after_step(const C& c, std::size_t i, std::size_t j) {
        leaders_ += c.agents[i].message.role == SceRole::leader ? 1 : 0;
        leaders_ += c.agents[j].message.role == SceRole::leader ? 1 : 0;
        if (leaders_ > before_) increased_ = true;
        min_ = std::min(min_, leaders_);
    }
    [[nodiscard]] bool done() const noexcept { return false; }
    [[nodiscard]] std::size_t leaders() const noexcept { return leaders_; }
    [[nodiscard]] std::size_t min_leaders() const noexcept { return min_; }
    [[nodiscard]] bool ever_increased() const noexcept { return increased_; }

private:
    std::size_t leaders_ = 0;
    std::size_t before_ = 0;
    std::size_t min_ = 0;
    bool increased_ = false;
};

struct StabilizationReport {
    bool ok = false;
    std::string diagnostic;
    /// Step index of the last downstream reset; 0 is the initial configuration.
    std::uint64_t last_reset = 0;
    /// Number of downstream steps replayed after the last reset.
    std::uint64_t downstream_steps = 0;
};

/// Replays `trace` from `initial` and checks that after the last downstream
/// reset the projected downstream configuration started from a valid initial
/// configuration and then evolved only by downstream steps between go agents.
/// For n <= reach_limit a non-initial start is accepted if it is reachable
/// from the downstream initial configuration.
template <LeaderDriven P>
StabilizationReport check_stabilization(const SceProtocol<P>& proto,
                                        const Configuration<SceProtocol<P>>& initial,
                                        const std::vector<TraceStep>& trace,
                                        std::size_t reach_limit = 6) {
    using S = SceProtocol<P>;
    StabilizationReport rep;
    const std::size_t n = initial.size();
    const P& down = proto.downstream();

    auto project = [&](const Configuration<S>& c) {
        std::vector<typename P::State> out;
        out.reserve(n);
        for (const auto& a : c.agents) out.push_back(proto.downstream_state(a));
        return out;
    };

    Configuration<S> cur = initial;
    Configuration<S> at_reset = initial;
    for (std::uint64_t t = 0; t < trace.size(); ++t) {
        const auto [i, j] = trace[t];
        if (i >= n || j >= n || i == j) {
            rep.diagnostic = "trace step " + std::to_string(t + 1) + " is not a valid pair";
            return rep;
        }
        const auto seen_i = cur.agents[j].message;
        const auto seen_j = cur.agents[i].message;
        const bool ri = proto.apply(cur.agents[i], seen_i, Role::initiator);
        const bool rj = proto.apply(cur.agents[j], seen_j, Role::responder);
        ++cur.interactions;
        if (ri || rj) {
            rep.last_reset = t + 1;
            at_reset = cur;
        }
    }

    std::size_t leaders = 0;
    std::size_t leader_idx = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (at_reset.agents[k].message.role == SceRole::leader) {
            ++leaders;
            leader_idx = k;
        }
    if (leaders != 1) {
        rep.diagnostic = "expected one leader at the last reset, found " + std::to_string(leaders);
        return rep;
    }

    auto shadow = project(at_reset);
    std::vector<typename P::State> fresh;
    fresh.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        fresh.push_back(down.initial(at_reset.agents[k].internal.input, k == leader_idx));
    if (shadow != fresh) {
        bool reachable = false;
        if (n <= reach_limit) {
            const auto set = reachable_set(down, fresh, 1000000);
            reachable = set.count(canonical<P>(shadow)) != 0;
        }
        if (!reachable) {
            rep.diagnostic = "downstream configuration at the last reset is not an initial configuration";
            return rep;
        }
    }

    Configuration<S> replayed = at_reset;
    for (std::uint64_t t = rep.last_reset; t < trace.size(); ++t) {
        const auto [i, j] = trace[t];
        const bool both_go = replayed.agents[i].message.signal == Signal::go &&
                             replayed.agents[j].message.signal == Signal::go;
        if (both_go) {
            interact(shadow, i, j, down);
            ++rep.downstream_steps;
        }
        const auto seen_i = replayed.agents[j].message;
        const auto seen_j = replayed.agents[i].message;
        proto.apply(replayed.agents[i], seen_i, Role::initiator);
        proto.apply(replayed.agents[j], seen_j, Role::responder);
        if (proto.downstream_state(replayed.agents[i]) != shadow[i] ||
            proto.downstream_state(replayed.agents[j]) != shadow[j]) {
            rep.diagnostic = "downstream state diverges from a valid execution at step " + std::to_string(t + 1);
            return rep;
        }
    }
    rep.ok = true;
    return rep;
}

/// Leader's c_0 + c_1, or nullopt unless exactly one leader exists.
template <class C>
std::optional<std::uint64_t> leader_estimate(const C& config) {
    std::optional<std::uint64_t> out;
    for (const auto& a : config.agents) {
        if (a.message.role != SceRole::leader) continue;
        if (out) return std::nullopt;
        out = a.internal.c[0] + a.internal.c[1];
    }
    return out;
}

}  // namespace popmsg::stable
