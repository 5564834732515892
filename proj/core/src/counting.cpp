#include "popmsg/counting.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace popmsg::counting {

CountingProtocol::CountingProtocol(Params params) : params_(params) {
    if (params_.m < 4 || params_.m % 2 != 0 || params_.m > 120)
        throw std::invalid_argument("clock modulus m must be even and in [4, 120]");
    if (params_.symbols < 1 || params_.symbols > 255)
        throw std::invalid_argument("alphabet size must be in [1, 255]");
}

CountingProtocol::State CountingProtocol::init(const Input& in, InitRng&) const {
    if (!in.leader && in.symbol >= params_.symbols)
        throw std::invalid_argument("input symbol outside the alphabet");
    State s;
    auto& v = s.internal;
    v.leader = in.leader;
    v.symbol = in.leader ? 0 : in.symbol;
    v.counts.assign(params_.symbols > 1 ? params_.symbols : 0, 0);
    start_instance(v, 0);
    s.message = message_of(v);
    return s;
}

void CountingProtocol::start_instance(Internal& v, std::uint8_t instance) const {
    v.instance = instance;
    v.interval = DyadicInterval{};
    if (instance == 0)
        v.w = v.leader ? 4 : 0;
    else
        v.w = (!v.leader && v.symbol + 1 == instance) ? 4 : 0;
    v.w_min = end_averaging(v.w);
}

CountingProtocol::Message CountingProtocol::message_of(const Internal& v) const {
    return {v.leader, v.w, v.w_min, phase_of(v), static_cast<std::uint8_t>(hour_of(v))};
}

std::optional<unsigned> CountingProtocol::clock_step(bool leader, unsigned own, unsigned seen) const {
    const unsigned span = 2 * params_.m;
    const unsigned half = params_.m / 2;
    const unsigned d = (seen + span - own) % span;
    if (d != 0 && std::min(d, span - d) >= half) return std::nullopt;
    if (leader) return d < half ? (own + 1) % span : own;
    return (d >= 1 && d < half) ? seen : own;
}

void CountingProtocol::update(State& s, const Message& m, Role role) const {
    auto& v = s.internal;
    if (v.terminated || v.failed) return;
    if (v.leader && m.leader) throw ProtocolViolation("two agents identify as leader");

    const unsigned own = v.clock;
    const unsigned seen = (m.phase == Phase::Updating ? params_.m : 0) + m.hour;
    const bool own_avg = own < params_.m;
    const bool seen_avg = seen < params_.m;
    if (own_avg && seen_avg) {
        const auto [lo, hi] = role == Role::initiator ? average_weights(v.w, m.w) : average_weights(m.w, v.w);
        v.w = role == Role::initiator ? lo : hi;
    } else if (!own_avg && !seen_avg) {
        v.w_min = propagate_min(v.w_min, m.w_min);
    }

    const auto next = clock_step(v.leader, own, seen);
    if (!next) {
        v.failed = true;
    } else if (*next != own) {
        v.clock = static_cast<std::uint8_t>(*next);
        const bool now_avg = *next < params_.m;
        if (own_avg && !now_avg)
            v.w_min = end_averaging(v.w);
        else if (!own_avg && now_avg)
            finish_round(v);
    }
    s.message = message_of(v);
}

void CountingProtocol::finish_round(Internal& v) const {
    const DyadicInterval previous = v.interval;
    try {
        const auto upd = round_update(v.interval, v.w, v.w_min);
        if (upd.w > 4) {
            v.failed = true;
            return;
        }
        v.interval = upd.interval;
        v.w = static_cast<std::uint8_t>(upd.w);
        v.applied_w_min = v.w_min;
    } catch (const ProtocolViolation&) {
        v.failed = true;
        return;
    } catch (const std::invalid_argument&) {
        v.failed = true;
        return;
    }

    if (v.instance == 0) {
        if (!v.log2_population) {
            try {
                v.log2_population = unique_power_of_two(v.interval, previous);
            } catch (const NotYetDecidable&) {
            }
        }
        if (const auto n = unique_reciprocal(v.interval)) {
            v.population = *n;
            v.population_round = v.interval.round();
            if (params_.symbols == 1)
                v.terminated = true;
            else
                start_instance(v, 1);
        }
        return;
    }

    if (const auto k = unique_multiple(v.interval, *v.population)) {
        v.counts[v.instance - 1] = *k;
        if (v.instance + 1u == params_.symbols) {
            const std::uint64_t others = std::accumulate(v.counts.begin(), v.counts.end() - 1, std::uint64_t{0});
            if (others > *v.population - 1) {
                v.failed = true;
                return;
            }
            v.counts.back() = *v.population - 1 - others;
            v.terminated = true;
        } else {
            start_instance(v, static_cast<std::uint8_t>(v.instance + 1));
        }
    }
}

CountingProtocol::Output CountingProtocol::output(const State& s) const {
    const auto& v = s.internal;
    return {v.population, v.log2_population, v.counts, v.terminated, v.failed};
}

CountingProtocol::Summary CountingProtocol::summarize(const State& s) const {
    const auto& v = s.internal;
    return {v.interval.round(), phase_of(v), v.w, static_cast<double>(v.interval.lower()), v.terminated};
}

std::vector<CountingProtocol::Message> CountingProtocol::message_alphabet() const {
    std::vector<Message> out;
    for (bool leader : {false, true})
        for (std::uint8_t w = 0; w <= 4; ++w)
            for (std::uint8_t wm = 0; wm <= 3; ++wm)
                for (Phase p : {Phase::Averaging, Phase::Updating})
                    for (unsigned h = 0; h < params_.m; ++h)
                        out.push_back({leader, w, wm, p, static_cast<std::uint8_t>(h)});
    return out;
}

std::vector<Input> leader_inputs(std::size_t n, const std::vector<std::uint8_t>& symbols) {
    if (n < 2) throw std::invalid_argument("population needs at least two agents");
    if (!symbols.empty() && symbols.size() != n - 1)
        throw std::invalid_argument("need one symbol per follower");
    std::vector<Input> in(n);
    in[0].leader = true;
    for (std::size_t k = 1; k < n; ++k) in[k].symbol = symbols.empty() ? 0 : symbols[k - 1];
    return in;
}

std::vector<std::uint64_t> instance_masses(const std::vector<Input>& inputs, unsigned symbols) {
    std::vector<std::uint64_t> out(symbols, 0);
    out[0] = 1;
    for (const auto& in : inputs)
        if (!in.leader && in.symbol + 1u < symbols) ++out[in.symbol + 1u];
    return out;
}

RoundAuditor::RoundAuditor(const CountingProtocol& proto, std::vector<std::uint64_t> masses)
    : proto_(proto), masses_(std::move(masses)) {}

void RoundAuditor::inspect_internals(const std::vector<const Internal*>& agents) {
    if (agents.empty()) return;
    for (const auto* a : agents)
        if (a->failed) return;
    const Internal& first = *agents.front();

    const bool shared = std::all_of(agents.begin(), agents.end(), [&](const Internal* a) {
        return a->instance == first.instance && a->interval == first.interval;
    });
    if (shared) {
        const Key k{first.instance, first.interval.round(), false};
        if (!last_boundary_ || !(*last_boundary_ == k)) {
            last_boundary_ = k;
            ++boundaries_;
            const std::string where =
                "instance " + std::to_string(first.instance) + " round " + std::to_string(first.interval.round());
            if (first.instance >= masses_.size()) {
                violations_.push_back(where + ": no mass target");
                return;
            }
            const BigInt n = agents.size();
            const BigInt target = masses_[first.instance];
            const BigInt den = first.interval.denominator();
            const BigInt& A = first.interval.numerator();
            BigInt total = n * A;
            for (const auto* a : agents) total += a->w;
            if (total != target * den) violations_.push_back(where + ": total mass differs from target");
            if (!(A * n <= target * den && target * den <= (A + 4) * n))
                violations_.push_back(where + ": interval misses the true average");
            if (first.interval.round() > 0 &&
                !std::all_of(agents.begin(), agents.end(),
                             [&](const Internal* a) { return a->applied_w_min == first.applied_w_min; }))
                violations_.push_back(where + ": agents applied different w_min");
        }
    }

    const bool all_updating = std::all_of(agents.begin(), agents.end(), [&](const Internal* a) {
        return !a->terminated && a->instance == first.instance && a->interval == first.interval &&
               proto_.phase_of(*a) == Phase::Updating;
    });
    if (all_updating) {
        const Key k{first.instance, first.interval.round(), true};
        if (!last_updating_ || !(*last_updating_ == k)) {
            last_updating_ = k;
            const auto [lo, hi] = std::minmax_element(agents.begin(), agents.end(), [](const Internal* a, const Internal* b) {
                return a->w < b->w;
            });
            if ((*hi)->w > (*lo)->w + 2)
                violations_.push_back("instance " + std::to_string(first.instance) + " round " +
                                      std::to_string(first.interval.round()) + ": weight spread above 2");
        }
    }
}

}  // namespace popmsg::counting
