#pragma once

// Junta election with 1-bit messages. Each agent draws a geometric level and
// climbs a counter through alternating green and red intervals; cautious
// agents wait at the last value of a red interval (a door) until they see Go.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "popmsg/basic_protocols.hpp"
#include "popmsg/model.hpp"

namespace popmsg::junta {

enum class Message : std::uint8_t { Go, Stop };

enum class Kind : std::uint8_t { PreStart, Green, Red, Door };

struct Position {
    unsigned round = 0;
    Kind kind = Kind::PreStart;
    friend bool operator==(const Position&, const Position&) = default;
};

/// Counter geometry: |G_i| = c b^i, |R_i| = (3c/2) b^i, d_i = max R_i.
class IntervalSchedule {
public:
    IntervalSchedule(unsigned base, std::uint64_t c);

    /// b = 2, c = 16: desk-scale experiments.
    static IntervalSchedule experiment() { return {2, 16}; }
    /// b = 4, c = 700: the constants used by the analysis.
    static IntervalSchedule theory() { return {4, 700}; }

    [[nodiscard]] unsigned base() const noexcept { return base_; }
    [[nodiscard]] std::uint64_t scale() const noexcept { return c_; }
    /// Number of rounds whose doors fit the 32-bit agent counter.
    [[nodiscard]] unsigned rounds() const noexcept { return static_cast<unsigned>(doors_.size()); }

    [[nodiscard]] std::uint64_t green_size(unsigned i) const;
    [[nodiscard]] std::uint64_t red_size(unsigned i) const;
    /// d_i. Throws std::out_of_range past the representable rounds.
    [[nodiscard]] std::uint64_t door(unsigned i) const { return doors_.at(i); }
    /// Last counter value of G_i.
    [[nodiscard]] std::uint64_t green_end(unsigned i) const { return green_end_.at(i); }

    [[nodiscard]] Position classify(std::uint64_t count) const;

private:
    unsigned base_;
    std::uint64_t c_;
    std::vector<std::uint64_t> doors_;
    std::vector<std::uint64_t> green_end_;
};

/// ceil(log2 G) for a geometric draw G >= 1.
unsigned level_from_geometric(std::uint64_t g);

/// Draws G (fair coin flips up to and including the first heads) and returns
/// its level.
unsigned sample_level(std::mt19937_64& rng);

struct Internal {
    std::uint32_t count = 0;
    std::uint8_t level = 0;
    /// Round index of the current count (0 while count = 0).
    std::uint8_t round = 0;
    bool in_junta = true;
    std::uint64_t logn_estimation = 1;
    friend auto operator<=>(const Internal&, const Internal&) = default;
};

struct Output {
    bool in_junta = true;
    std::uint64_t logn_estimation = 1;
    std::uint32_t count = 0;
    friend bool operator==(const Output&, const Output&) = default;
};

struct Summary {
    std::uint32_t count = 0;
    std::uint8_t level = 0;
    bool in_junta = true;
};

/// Called with the round index whenever an agent moves beyond a door.
struct NoDoorHook {
    void operator()(Internal&, unsigned) const noexcept {}
};

template <class DoorHook = NoDoorHook>
class JuntaProtocol {
public:
    using Input = Empty;
    using Internal = junta::Internal;
    using Message = junta::Message;
    using Output = junta::Output;
    using State = AgentState<Internal, Message>;
    using Summary = junta::Summary;

    explicit JuntaProtocol(IntervalSchedule schedule = IntervalSchedule::experiment(),
                           DoorHook hook = {})
        : schedule_(std::move(schedule)), hook_(std::move(hook)) {
        const unsigned r = std::min(schedule_.rounds(), 255u);
        doors_.reserve(r);
        green_end_.reserve(r);
        for (unsigned i = 0; i < r; ++i) {
            doors_.push_back(schedule_.door(i));
            green_end_.push_back(schedule_.green_end(i));
        }
    }

    [[nodiscard]] const IntervalSchedule& schedule() const noexcept { return schedule_; }

    State init(const Input&, InitRng& rng) const {
        State s;
        s.internal.level = static_cast<std::uint8_t>(sample_level(rng));
        s.message = Message::Go;
        return s;
    }

    /// Agent with a fixed level, for hand-built configurations.
    State with_level(unsigned level, std::uint32_t count = 0) const {
        State s;
        s.internal.level = static_cast<std::uint8_t>(level);
        s.internal.count = count;
        s.internal.round = static_cast<std::uint8_t>(schedule_.classify(count).round);
        s.message = message_for(s.internal);
        return s;
    }

    void update(State& s, const Message& m, Role) const {
        auto& v = s.internal;
        const unsigned before = v.round;
        if (v.count == doors_[before] && v.level <= before) {
            if (m == Message::Go) ++v.count;
        } else {
            ++v.count;
        }
        if (v.count > doors_[v.round]) {
            if (static_cast<std::size_t>(v.round) + 1 >= doors_.size())
                throw ProtocolViolation("junta counter exceeded the representable schedule");
            ++v.round;
        }
        const unsigned i = v.round;
        s.message = message_for(v);
        if (v.count == doors_[i]) {
            v.logn_estimation = std::uint64_t{1} << i;
            v.in_junta = v.level >= i;
        }
        if (i != before) hook_(v, before);
    }

    Output output(const State& s) const {
        return {s.internal.in_junta, s.internal.logn_estimation, s.internal.count};
    }

    Summary summarize(const State& s) const {
        return {s.internal.count, s.internal.level, s.internal.in_junta};
    }

    std::vector<Message> message_alphabet() const { return {Message::Go, Message::Stop}; }

    /// True when the agent waits at a door and shows Stop.
    bool halted(const State& s) const {
        const auto& v = s.internal;
        return v.count == doors_[v.round] && v.level <= v.round && s.message == Message::Stop;
    }

private:
    Message message_for(const Internal& v) const {
        if (v.count == 0) return Message::Go;
        if (v.level > v.round) return Message::Go;
        return v.count <= green_end_[v.round] ? Message::Go : Message::Stop;
    }

    IntervalSchedule schedule_;
    DoorHook hook_;
    std::vector<std::uint64_t> doors_;
    std::vector<std::uint64_t> green_end_;
};

/// Stop monitor: done once every agent is halted at a door.
template <class Proto>
class HaltMonitor {
public:
    explicit HaltMonitor(const Proto& proto) : proto_(proto) {}

    template <class C>
    void reset(const C& c) {
        halted_ = 0;
        n_ = c.size();
        for (const auto& a : c.agents) halted_ += proto_.halted(a) ? 1 : 0;
    }
    template <class C>
    void before_step(const C& c, std::size_t i, std::size_t j) {
        halted_ -= proto_.halted(c.agents[i]) ? 1 : 0;
        halted_ -= proto_.halted(c.agents[j]) ? 1 : 0;
    }
    template <class C>
    void after_step(const C& c, std::size_t i, std::size_t j) {
        halted_ += proto_.halted(c.agents[i]) ? 1 : 0;
        halted_ += proto_.halted(c.agents[j]) ? 1 : 0;
    }
    [[nodiscard]] bool done() const noexcept { return n_ != 0 && halted_ == n_; }
    [[nodiscard]] std::size_t halted() const noexcept { return halted_; }

private:
    const Proto& proto_;
    std::size_t halted_ = 0;
    std::size_t n_ = 0;
};

struct Outcome {
    bool all_halted = false;
    bool common_door = false;
    bool all_stop = false;
    unsigned door_round = 0;
    std::size_t junta_size = 0;
    std::uint32_t max_count = 0;
    std::uint32_t min_count = 0;
    unsigned max_level = 0;
};

template <class Proto, class C>
Outcome summarize_outcome(const Proto& proto, const C& config) {
    Outcome out;
    out.all_halted = true;
    out.all_stop = true;
    out.min_count = config.agents.empty() ? 0 : config.agents.front().internal.count;
    for (const auto& a : config.agents) {
        out.all_halted = out.all_halted && proto.halted(a);
        out.all_stop = out.all_stop && a.message == Message::Stop;
        out.junta_size += a.internal.in_junta ? 1 : 0;
        out.max_count = std::max(out.max_count, a.internal.count);
        out.min_count = std::min(out.min_count, a.internal.count);
        out.max_level = std::max<unsigned>(out.max_level, a.internal.level);
    }
    const auto pos = proto.schedule().classify(out.max_count);
    out.door_round = pos.round;
    out.common_door = out.min_count == out.max_count && pos.kind == Kind::Door;
    return out;
}

/// Admissible final door rounds {floor(loglog n), ceil(loglog n), ceil(loglog n) + 1}.
std::vector<unsigned> admissible_door_rounds(std::uint64_t n);

}  // namespace popmsg::junta
