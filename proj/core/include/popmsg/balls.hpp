#pragma once

// Ball-passing protocol with a constant message alphabet. Every agent starts
// with one ball; followers hand balls to the leader only in units of c, so the
// leader ends with k = 1 + c floor((n-1)/c) and outputs whether
// floor((n-1)/c) is a power of two.

#include <cstdint>
#include <vector>

#include "popmsg/basic_protocols.hpp"
#include "popmsg/model.hpp"

namespace popmsg::stable {

enum class Giveaway : std::uint8_t { none, one, unit };

struct BallsMessage {
    Giveaway give = Giveaway::none;
    bool leader = true;
    bool bit = false;
    friend auto operator<=>(const BallsMessage&, const BallsMessage&) = default;
};

struct BallsInternal {
    std::uint32_t k = 1;
    friend auto operator<=>(const BallsInternal&, const BallsInternal&) = default;
};

/// True for 1, 2, 4, ...; false for 0.
bool is_power_of_two(std::uint64_t x);

class BallsProtocol {
public:
    using Input = Empty;
    using Internal = BallsInternal;
    using Message = BallsMessage;
    using Output = bool;
    using State = AgentState<Internal, Message>;

    explicit BallsProtocol(std::uint32_t c);

    [[nodiscard]] std::uint32_t unit() const noexcept { return c_; }

    State init(const Input&, InitRng&) const;
    void update(State& s, const Message& m, Role role) const;
    Output output(const State& s) const { return s.message.bit; }
    std::vector<Message> message_alphabet() const;

    /// Leader count after stabilization: 1 + c floor((n-1)/c).
    [[nodiscard]] std::uint64_t stable_leader_count(std::uint64_t n) const;
    /// The predicate the population stably computes.
    [[nodiscard]] bool predicate(std::uint64_t n) const;

private:
    void refresh(State& s) const;
    std::uint32_t c_;
};

}  // namespace popmsg::stable
