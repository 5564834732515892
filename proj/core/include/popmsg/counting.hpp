#pragma once

// Leader-driven exact counting. Weights are averaged during an Averaging phase,
// the population minimum is learned during an Updating phase, and every agent
// then shifts its interval [a, a + 2^-r] so that it keeps containing 1/n.
// Phases are driven by a leader clock over Z_m with a phase bit.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "popmsg/dyadic.hpp"
#include "popmsg/model.hpp"

namespace popmsg::counting {

enum class Phase : std::uint8_t { Averaging, Updating };

struct Input {
    bool leader = false;
    /// Symbol index for input-vector counting; ignored for the leader.
    std::uint8_t symbol = 0;
    friend bool operator==(const Input&, const Input&) = default;
};

struct Message {
    bool leader = false;
    std::uint8_t w = 0;
    std::uint8_t w_min = 0;
    Phase phase = Phase::Averaging;
    std::uint8_t hour = 0;
    friend auto operator<=>(const Message&, const Message&) = default;
};

struct Internal {
    bool leader = false;
    std::uint8_t symbol = 0;
    std::uint8_t w = 0;
    std::uint8_t w_min = 0;
    /// Position in Z_{2m}: phase * m + hour.
    std::uint8_t clock = 0;
    DyadicInterval interval;
    /// 0 counts the population; x >= 1 counts symbol x - 1.
    std::uint8_t instance = 0;
    /// w_min applied at the most recent round update.
    std::uint8_t applied_w_min = 0;
    bool terminated = false;
    bool failed = false;
    std::optional<std::uint64_t> population;
    /// Round at which the population instance terminated.
    std::optional<unsigned> population_round;
    std::optional<unsigned> log2_population;
    std::vector<std::uint64_t> counts;
    friend auto operator<=>(const Internal&, const Internal&) = default;
};

struct Output {
    std::optional<std::uint64_t> population;
    std::optional<unsigned> log2_population;
    std::vector<std::uint64_t> counts;
    bool terminated = false;
    bool failed = false;
    friend bool operator==(const Output&, const Output&) = default;
};

struct Summary {
    unsigned round = 0;
    Phase phase = Phase::Averaging;
    std::uint8_t w = 0;
    double lower = 0.0;
    bool terminated = false;
};

struct Params {
    /// Hours per phase; even, at least 4.
    unsigned m = 16;
    /// Alphabet size d for input-vector counting. 1 counts only n.
    unsigned symbols = 1;
};

class CountingProtocol {
public:
    using Input = counting::Input;
    using Internal = counting::Internal;
    using Message = counting::Message;
    using Output = counting::Output;
    using State = AgentState<Internal, Message>;
    using Summary = counting::Summary;

    explicit CountingProtocol(Params params = {});

    [[nodiscard]] const Params& params() const noexcept { return params_; }

    State init(const Input& in, InitRng& rng) const;
    void update(State& s, const Message& m, Role role) const;
    Output output(const State& s) const;
    Summary summarize(const State& s) const;
    std::vector<Message> message_alphabet() const;

    [[nodiscard]] Phase phase_of(const Internal& v) const noexcept {
        return v.clock < params_.m ? Phase::Averaging : Phase::Updating;
    }
    [[nodiscard]] unsigned hour_of(const Internal& v) const noexcept { return v.clock % params_.m; }

    /// Clock rule alone: new position in Z_{2m}, or nullopt on desynchronization.
    [[nodiscard]] std::optional<unsigned> clock_step(bool leader, unsigned own, unsigned seen) const;

private:
    void finish_round(Internal& v) const;
    void start_instance(Internal& v, std::uint8_t instance) const;
    Message message_of(const Internal& v) const;

    Params params_;
};

/// One leader followed by n - 1 followers holding `symbols`.
std::vector<Input> leader_inputs(std::size_t n, const std::vector<std::uint8_t>& symbols = {});

/// Per-instance total weight mass: n-count instance has mass 1, symbol
/// instance x has mass equal to the number of holders of symbol x - 1.
std::vector<std::uint64_t> instance_masses(const std::vector<Input>& inputs, unsigned symbols);

/// Stops once every agent terminated or any agent failed.
class CountingMonitor {
public:
    template <class C>
    void reset(const C& c) {
        n_ = c.size();
        terminated_ = failed_ = 0;
        for (const auto& a : c.agents) add(a.internal, 1);
    }
    template <class C>
    void before_step(const C& c, std::size_t i, std::size_t j) {
        add(c.agents[i].internal, -1);
        add(c.agents[j].internal, -1);
    }
    template <class C>
    void after_step(const C& c, std::size_t i, std::size_t j) {
        add(c.agents[i].internal, 1);
        add(c.agents[j].internal, 1);
    }
    [[nodiscard]] bool done() const noexcept { return failed_ > 0 || (n_ != 0 && terminated_ == n_); }
    [[nodiscard]] bool any_failed() const noexcept { return failed_ > 0; }
    [[nodiscard]] bool all_terminated() const noexcept { return n_ != 0 && terminated_ == n_; }

private:
    void add(const Internal& v, long d) {
        terminated_ += static_cast<std::size_t>(v.terminated ? d : 0);
        failed_ += static_cast<std::size_t>(v.failed ? d : 0);
    }
    std::size_t n_ = 0;
    std::size_t terminated_ = 0;
    std::size_t failed_ = 0;
};

/// Checks the round-boundary invariants of a run: whenever every agent shares
/// one (instance, interval), the total mass equals the instance target exactly
/// and the true average lies in the interval; whenever every agent is in the
/// Updating phase of one round, max w <= min w + 2; and all agents applied the
/// same w_min at each boundary.
class RoundAuditor {
public:
    RoundAuditor(const CountingProtocol& proto, std::vector<std::uint64_t> masses);

    template <class C>
    void reset(const C& c) {
        violations_.clear();
        boundaries_ = 0;
        last_boundary_.reset();
        last_updating_.reset();
        inspect(c.agents);
    }
    template <class C>
    void before_step(const C& c, std::size_t i, std::size_t j) {
        key_i_ = key(c.agents[i].internal);
        key_j_ = key(c.agents[j].internal);
    }
    template <class C>
    void after_step(const C& c, std::size_t i, std::size_t j) {
        if (key(c.agents[i].internal) != key_i_ || key(c.agents[j].internal) != key_j_) inspect(c.agents);
    }
    [[nodiscard]] bool done() const noexcept { return false; }

    [[nodiscard]] const std::vector<std::string>& violations() const noexcept { return violations_; }
    /// Number of synchronized round boundaries audited.
    [[nodiscard]] std::size_t boundaries() const noexcept { return boundaries_; }

    template <class States>
    void inspect(const States& agents) {
        std::vector<const Internal*> v;
        v.reserve(agents.size());
        for (const auto& a : agents) v.push_back(&a.internal);
        inspect_internals(v);
    }

private:
    struct Key {
        std::uint8_t instance = 0;
        unsigned round = 0;
        bool updating = false;
        friend bool operator==(const Key&, const Key&) = default;
    };
    Key key(const Internal& v) const {
        return {v.instance, v.interval.round(), proto_.phase_of(v) == Phase::Updating};
    }
    void inspect_internals(const std::vector<const Internal*>& agents);

    const CountingProtocol& proto_;
    std::vector<std::uint64_t> masses_;
    std::vector<std::string> violations_;
    std::size_t boundaries_ = 0;
    std::optional<Key> last_boundary_;
    std::optional<Key> last_updating_;
    Key key_i_;
    Key key_j_;
};

/// Interaction indices at which the leader toggled its phase bit.
class PhaseToggleMonitor {
public:
    explicit PhaseToggleMonitor(const CountingProtocol& proto, std::size_t max_toggles = 0)
        : proto_(proto), max_(max_toggles) {}

    template <class C>
    void reset(const C& c) {
        toggles_.clear();
        leader_ = c.size();
        for (std::size_t k = 0; k < c.size(); ++k)
            if (c.agents[k].internal.leader) leader_ = k;
        if (leader_ < c.size()) phase_ = proto_.phase_of(c.agents[leader_].internal);
    }
    template <class C>
    void before_step(const C&, std::size_t, std::size_t) {}
    template <class C>
    void after_step(const C& c, std::size_t i, std::size_t j) {
        if (i != leader_ && j != leader_) return;
        const Phase p = proto_.phase_of(c.agents[leader_].internal);
        if (p != phase_) {
            phase_ = p;
            toggles_.push_back(c.interactions);
        }
    }
    [[nodiscard]] bool done() const noexcept { return max_ != 0 && toggles_.size() >= max_; }
    [[nodiscard]] const std::vector<std::uint64_t>& toggles() const noexcept { return toggles_; }

private:
    const CountingProtocol& proto_;
    std::size_t max_;
    std::size_t leader_ = 0;
    Phase phase_ = Phase::Averaging;
    std::vector<std::uint64_t> toggles_;
};

}  // namespace popmsg::counting
