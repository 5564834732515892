#include "popmsg/balls.hpp"

#include <stdexcept>

namespace popmsg::stable {

bool is_power_of_two(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

BallsProtocol::BallsProtocol(std::uint32_t c) : c_(c) {
    if (c == 0) throw std::invalid_argument("unit size c must be at least 1");
}

BallsProtocol::State BallsProtocol::init(const Input&, InitRng&) const {
    State s;
    s.internal.k = 1;
    s.message.leader = true;
    refresh(s);
    return s;
}

void BallsProtocol::refresh(State& s) const {
    const auto k = s.internal.k;
    if (s.message.leader) {
        s.message.give = Giveaway::none;
        s.message.bit = is_power_of_two((k - 1) / c_);
    } else if (k >= c_) {
        s.message.give = Giveaway::unit;
    } else {
        s.message.give = k >= 1 ? Giveaway::one : Giveaway::none;
    }
}

void BallsProtocol::update(State& s, const Message& m, Role role) const {
    auto& own = s.message;
    auto& k = s.internal.k;
    if (own.leader && m.leader) {
        if (role == Role::responder) own.leader = false;
    } else if (own.leader) {
        if (m.give == Giveaway::unit) k += c_;
    } else if (m.leader) {
        if (own.give == Giveaway::unit) k -= c_;
        own.bit = m.bit;
    } else if (own.give == Giveaway::one && m.give == Giveaway::one) {
        if (role == Role::initiator)
            --k;
        else
            ++k;
    }
    refresh(s);
}

std::vector<BallsProtocol::Message> BallsProtocol::message_alphabet() const {
    std::vector<Message> out;
    for (bool bit : {false, true}) {
        out.push_back({Giveaway::none, true, bit});
        for (auto g : {Giveaway::none, Giveaway::one, Giveaway::unit}) out.push_back({g, false, bit});
    }
    return out;
}

std::uint64_t BallsProtocol::stable_leader_count(std::uint64_t n) const {
    if (n == 0) throw std::invalid_argument("population must be non-empty");
    return 1 + c_ * ((n - 1) / c_);
}

bool BallsProtocol::predicate(std::uint64_t n) const { return is_power_of_two((stable_leader_count(n) - 1) / c_); }

}  // namespace popmsg::stable
