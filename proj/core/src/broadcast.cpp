#include "popmsg/broadcast.hpp"

#include <algorithm>
#include <stdexcept>

namespace popmsg::broadcast {

using turing::Command;
using turing::OpKind;

std::pair<bool, bool> encode_item(Item it) {
    switch (it) {
        case Item::zero: return {false, true};
        case Item::one: return {true, false};
        case Item::stop: break;
    }
    return {false, false};
}

Item decode_pair(bool first, bool second) {
    if (first) return Item::one;
    return second ? Item::zero : Item::stop;
}

GatherFn gather_or() {
    return [](const std::vector<std::uint64_t>& xs) -> std::uint64_t {
        return std::any_of(xs.begin(), xs.end(), [](std::uint64_t x) { return x != 0; }) ? 1 : 0;
    };
}

GatherFn gather_count_ones() {
    return [](const std::vector<std::uint64_t>& xs) -> std::uint64_t {
        return static_cast<std::uint64_t>(std::count(xs.begin(), xs.end(), std::uint64_t{1}));
    };
}

GatherFn gather_max() {
    return [](const std::vector<std::uint64_t>& xs) -> std::uint64_t {
        return xs.empty() ? 0 : *std::max_element(xs.begin(), xs.end());
    };
}

namespace {

std::uint64_t splitmix(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<Item> items_of(const std::vector<bool>& bits) {
    std::vector<Item> out;
    out.reserve(bits.size() + 1);
    for (bool b : bits) out.push_back(b ? Item::one : Item::zero);
    out.push_back(Item::stop);
    return out;
}

}  // namespace

BroadcastProtocol::BroadcastProtocol(Params params) : params_(std::move(params)) {
    if (params_.schedule.scale == 0) throw std::invalid_argument("round schedule scale must be positive");
    if (params_.mode == Mode::gather && !params_.f) throw std::invalid_argument("gather mode needs a function");
    if (params_.mode == Mode::turing) {
        if (!params_.tm) throw std::invalid_argument("TM mode needs a machine");
        symbol_width_ = params_.tm->symbol_width();
        if (!params_.runtime_bound) params_.runtime_bound = [](std::uint64_t n) { return 4 * n * n; };
    }
}

BroadcastProtocol BroadcastProtocol::gather(GatherFn f, RoundSchedule schedule) {
    Params p;
    p.schedule = schedule;
    p.mode = Mode::gather;
    p.f = std::move(f);
    return BroadcastProtocol(std::move(p));
}

BroadcastProtocol BroadcastProtocol::turing(turing::TmSpec spec, RoundSchedule schedule,
                                            std::function<std::uint64_t(std::uint64_t)> runtime_bound) {
    Params p;
    p.schedule = schedule;
    p.mode = Mode::turing;
    p.f = nullptr;
    p.tm = std::make_shared<const turing::TmSpec>(std::move(spec));
    p.runtime_bound = std::move(runtime_bound);
    return BroadcastProtocol(std::move(p));
}

BroadcastProtocol::State BroadcastProtocol::init(const Input& in, InitRng& rng) const {
    if (params_.mode == Mode::turing && in >= params_.tm->symbols.size())
        throw std::invalid_argument("input symbol outside the tape alphabet");
    State s;
    auto& c = s.internal.ctl;
    c.input = in;
    c.coin = rng();
    s.internal.unit = params_.schedule.unit(1);
    reset_follower(c);
    return s;
}

void BroadcastProtocol::finish_round(State& s) const {
    auto& v = s.internal;
    const bool outcome = v.state == BcState::received || v.state == BcState::broadcasting;
    const unsigned k = v.ctl.round_mod(v.r);
    v.last.round = v.r;
    v.last.selection = k == 4;
    v.last.initiated = k == 4 ? (v.state == BcState::selecting || v.state == BcState::idle)
                              : v.state == BcState::broadcasting;
    v.last.outcome = k == 4 ? false : outcome;
    v.last.selected = v.state == BcState::selected;

    observe(v, outcome);
    ++v.r;
    v.unit = params_.schedule.unit(v.r);
    v.tick = 0;
    s.message = false;
    prepare(v);
}

void BroadcastProtocol::observe(Internal& v, bool outcome) const {
    auto& c = v.ctl;
    switch (c.round_mod(v.r)) {
        case 0:
            if (!c.leader && !outcome) become_leader(v);
            break;
        case 1:
            if (c.leader && !c.flipped && outcome) {
                c.leader = false;
                c.cleared = true;
            }
            break;
        case 2:
            if (outcome) {
                if (c.leader)
                    reset_leader(c);
                else
                    reset_follower(c);
                reset_channel(c);
            }
            c.cleared = false;
            break;
        case 3:
            c.r3_one = outcome;
            break;
        case 4: {
            const bool selected_now = v.state == BcState::selected;
            if (selected_now) c.selected = true;
            if (!c.in_progress) begin_slot(v, selected_now);
            break;
        }
        case 5:
            c.r5 = outcome;
            break;
        case 6:
            if (c.speaking) {
                ++c.sent;
                if (c.sent >= c.queue.size()) c.speaking = false;
            }
            on_item(v, decode_pair(c.r5, outcome));
            break;
    }
}

void BroadcastProtocol::prepare(Internal& v) const {
    auto& c = v.ctl;
    bool send = false;
    switch (c.round_mod(v.r)) {
        case 0:
            send = c.leader;
            break;
        case 1:
            c.flipped = c.leader && (splitmix(c.coin) & 1u) != 0;
            send = c.flipped;
            break;
        case 2:
            send = c.cleared || (c.leader && c.restart_pending);
            break;
        case 3:
            send = !c.leader && !c.processed;
            break;
        case 4:
            v.state = wants_select(c) ? BcState::selecting : BcState::candidate;
            return;
        case 5:
        case 6:
            if (c.speaking && c.sent < c.queue.size()) {
                const auto [a, b] = encode_item(c.queue[c.sent]);
                send = c.round_mod(v.r) == 5 ? a : b;
            }
            break;
    }
    v.state = send ? BcState::broadcasting : BcState::receiving;
}

bool BroadcastProtocol::wants_select(const Controller& c) const {
    if (!c.leader || !c.r3_one || c.in_progress) return false;
    if (params_.mode == Mode::gather) return true;
    return c.program.phase == TmLeader::Phase::recruiting && !c.awaiting_response && !c.restart_pending;
}

void BroadcastProtocol::begin_slot(Internal& v, bool selected_now) const {
    auto& c = v.ctl;
    c.speaking = false;
    c.queue.clear();
    c.sent = 0;
    c.rx.clear();
    if (params_.mode == Mode::gather) {
        if (c.r3_one) {
            c.topic = Topic::input;
            if (selected_now) {
                c.speaking = true;
                c.queue = c.processed ? std::vector<Item>{Item::stop} : items_of(turing::to_bits(c.input));
                c.processed = true;
                c.selected = false;
            }
        } else {
            c.topic = Topic::output;
            if (c.leader) {
                c.speaking = true;
                c.queue = items_of(turing::to_bits(params_.f(c.gathered)));
            }
        }
        return;
    }
    if (c.awaiting_response) {
        c.topic = Topic::response;
        c.awaiting_response = false;
        if (c.reply) {
            c.speaking = true;
            c.queue = items_of(*c.reply);
            c.reply.reset();
        }
        return;
    }
    c.topic = Topic::command;
    if (c.leader && !c.restart_pending) {
        const Command cmd = next_command(c);
        c.program.sent = cmd;
        c.speaking = true;
        c.queue = items_of(turing::encode_command(cmd, symbol_width()));
    }
}

void BroadcastProtocol::on_item(Internal& v, Item it) const {
    auto& c = v.ctl;
    if (it == Item::stop) {
        if (c.topic != Topic::none) complete(v);
        c.in_progress = false;
        c.topic = Topic::none;
        c.rx.clear();
        return;
    }
    if (c.topic == Topic::none) return;
    c.in_progress = true;
    c.rx.push_back(it == Item::one);
    if (c.rx.size() > params_.max_transmission) {
        c.in_progress = false;
        c.topic = Topic::none;
        c.rx.clear();
        c.speaking = false;
    }
}

void BroadcastProtocol::complete(Internal& v) const {
    if (params_.mode == Mode::gather)
        handle_gather(v);
    else if (v.ctl.topic == Topic::command)
        handle_command(v);
    else if (v.ctl.topic == Topic::response)
        handle_response(v);
}

void BroadcastProtocol::handle_gather(Internal& v) const {
    auto& c = v.ctl;
    const auto value = turing::from_bits(c.rx);
    if (c.topic == Topic::input) {
        if (c.leader && value) c.gathered.push_back(*value);
    } else if (c.topic == Topic::output) {
        if (value) c.output = *value;
        if (c.leader) c.restart_pending = true;
    }
}

Command BroadcastProtocol::next_command(Controller& c) const {
    auto& p = c.program;
    switch (p.phase) {
        case TmLeader::Phase::recruiting:
            if (c.r3_one) return {OpKind::recruit, p.count - 1, 0};
            return {OpKind::population, p.count, 0};
        case TmLeader::Phase::running:
            if (p.pending) return {OpKind::write, p.head, p.pending->write};
            return {OpKind::read, p.head, 0};
        case TmLeader::Phase::final_read:
            return {OpKind::read, p.head, 0};
        case TmLeader::Phase::reporting:
            break;
    }
    return {OpKind::result, p.result, 0};
}

void BroadcastProtocol::handle_command(Internal& v) const {
    auto& c = v.ctl;
    const auto& tm = *params_.tm;
    if (c.leader && c.program.sent) {
        auto& p = c.program;
        const Command cmd = *p.sent;
        switch (cmd.kind) {
            case OpKind::recruit:
            case OpKind::read:
                c.awaiting_response = true;
                break;
            case OpKind::population:
                p.phase = TmLeader::Phase::running;
                p.budget = params_.runtime_bound(p.count);
                p.state = tm.start;
                p.head = 0;
                p.steps = 0;
                p.pending.reset();
                if (tm.is_halting(p.state)) p.phase = TmLeader::Phase::final_read;
                break;
            case OpKind::write:
                p.state = p.pending->next;
                if (p.pending->move < 0)
                    p.head = p.head == 0 ? 0 : p.head - 1;
                else
                    p.head += static_cast<std::uint64_t>(p.pending->move);
                p.pending.reset();
                ++p.steps;
                if (p.budget > 0) --p.budget;
                if (tm.is_halting(p.state))
                    p.phase = TmLeader::Phase::final_read;
                else if (p.budget == 0)
                    c.restart_pending = true;
                break;
            case OpKind::result:
                c.output = cmd.value;
                c.restart_pending = true;
                break;
        }
        p.sent.reset();
        return;
    }
    if (c.leader) return;

    const auto cmd = turing::decode_command(c.rx, symbol_width());
    if (!cmd) return;
    auto owned_slot = [&](std::uint64_t cell) -> std::optional<std::uint64_t> {
        if (!c.index) return std::nullopt;
        const auto addr = turing::cell_address(cell, c.population);
        if (!addr || addr->owner != *c.index) return std::nullopt;
        return addr->slot;
    };
    switch (cmd->kind) {
        case OpKind::recruit:
            c.awaiting_response = true;
            if (c.selected) {
                if (!c.index) {
                    c.index = cmd->value;
                    c.processed = true;
                    c.reply = std::vector<bool>{true};
                }
                c.selected = false;
            }
            break;
        case OpKind::read:
            c.awaiting_response = true;
            if (const auto slot = owned_slot(cmd->value)) {
                const std::uint32_t sym = *slot < c.tape.size() ? c.tape[*slot] : 0;
                c.reply = turing::to_bits(sym, symbol_width());
            }
            break;
        case OpKind::write:
            if (const auto slot = owned_slot(cmd->value)) {
                if (*slot > 4096) break;
                if (c.tape.size() <= *slot) c.tape.resize(*slot + 1, 0);
                c.tape[*slot] = cmd->symbol;
            }
            break;
        case OpKind::population:
            c.population = cmd->value;
            break;
        case OpKind::result:
            c.output = cmd->value;
            break;
    }
}

void BroadcastProtocol::handle_response(Internal& v) const {
    auto& c = v.ctl;
    if (!c.leader) return;
    auto& p = c.program;
    const auto& tm = *params_.tm;
    if (p.phase == TmLeader::Phase::recruiting) {
        if (!c.rx.empty()) ++p.count;
        return;
    }
    const auto sym = turing::from_bits(c.rx);
    if (!sym || *sym >= tm.symbols.size()) {
        c.restart_pending = true;
        return;
    }
    const auto symbol = static_cast<std::uint32_t>(*sym);
    if (p.phase == TmLeader::Phase::final_read) {
        p.result = symbol;
        p.phase = TmLeader::Phase::reporting;
    } else if (p.phase == TmLeader::Phase::running) {
        p.pending = tm.step(p.state, symbol);
    }
}

void BroadcastProtocol::become_leader(Internal& v) const {
    auto& c = v.ctl;
    c.leader = true;
    reset_leader(c);
    // A fresh leader cannot trust anything gathered under a previous one.
    c.restart_pending = true;
}

void BroadcastProtocol::reset_leader(Controller& c) const {
    c.processed = true;
    c.selected = false;
    c.restart_pending = false;
    c.gathered.clear();
    if (params_.mode == Mode::gather) c.gathered.push_back(c.input);
    c.program = TmLeader{};
    if (params_.mode == Mode::turing) c.program.state = params_.tm->start;
    c.index.reset();
    c.population.reset();
    c.tape.clear();
    ++c.restarts;
}

void BroadcastProtocol::reset_follower(Controller& c) const {
    c.processed = false;
    c.selected = false;
    c.gathered.clear();
    c.index.reset();
    c.population.reset();
    c.tape.assign(1, static_cast<std::uint32_t>(c.input));
    c.reply.reset();
}

void BroadcastProtocol::reset_channel(Controller& c) {
    c.in_progress = false;
    c.topic = Topic::none;
    c.speaking = false;
    c.queue.clear();
    c.sent = 0;
    c.rx.clear();
    c.awaiting_response = false;
    c.reply.reset();
}

std::vector<std::uint64_t> uniform_inputs(std::size_t n, std::uint64_t symbol) {
    return std::vector<std::uint64_t>(n, symbol);
}

std::optional<std::size_t> unique_leader(const Config& c) {
    std::optional<std::size_t> out;
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (!c.agents[k].internal.ctl.leader) continue;
        if (out) return std::nullopt;
        out = k;
    }
    return out;
}

std::optional<std::vector<std::uint32_t>> assemble_tape(const Config& c, std::size_t leader, std::size_t cells) {
    const std::uint64_t n = c.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (k == leader) continue;
        const auto& ctl = c.agents[k].internal.ctl;
        if (!ctl.index || ctl.population != n) return std::nullopt;
    }
    std::vector<std::uint32_t> tape(cells, 0);
    std::vector<int> owners(cells, 0);
    for (std::size_t k = 0; k < n; ++k) {
        if (k == leader) continue;
        const auto& ctl = c.agents[k].internal.ctl;
        for (std::size_t cell = 0; cell < cells; ++cell) {
            const auto addr = turing::cell_address(cell, n);
            if (!addr || addr->owner != *ctl.index) continue;
            ++owners[cell];
            tape[cell] = addr->slot < ctl.tape.size() ? ctl.tape[addr->slot] : 0;
        }
    }
    for (int o : owners)
        if (o != 1) return std::nullopt;
    return tape;
}

BroadcastMonitor::BroadcastMonitor(const BroadcastProtocol& proto, std::optional<std::uint64_t> target)
    : proto_(&proto), target_(target) {}

void BroadcastMonitor::reset(const Config& c) {
    n_ = c.size();
    correct_ = 0;
    if (target_)
        for (const auto& a : c.agents) correct_ += a.internal.ctl.output == target_ ? 1 : 0;
    open_.clear();
    failures_.clear();
    completed_ = 0;
    changes_ = 0;
    last_change_ = 0;
}

void BroadcastMonitor::before_step(const Config& c, std::size_t i, std::size_t j) {
    const auto& a = c.agents[i];
    const auto& b = c.agents[j];
    r_[0] = a.internal.r;
    r_[1] = b.internal.r;
    out_[0] = a.internal.ctl.output;
    out_[1] = b.internal.ctl.output;
    const auto& sched = proto_->params().schedule;
    // A 1 seen past the barrier from an agent in another round.
    auto exposed = [&](const BroadcastProtocol::State& self, const BroadcastProtocol::State& other) {
        if (!other.message || other.internal.r == self.internal.r) return;
        const auto u = sched.unit(self.internal.r);
        if (self.internal.tick + 1 > 2 * u && self.internal.tick + 1 < 5 * u) ++open_[self.internal.r].cross;
    };
    exposed(a, b);
    exposed(b, a);
}

void BroadcastMonitor::track_output(const Config& c, std::size_t k, const std::optional<std::uint64_t>& before) {
    const auto& now = c.agents[k].internal.ctl.output;
    if (now == before) return;
    ++changes_;
    last_change_ = c.interactions;
    if (target_) {
        if (before == target_) --correct_;
        if (now == target_) ++correct_;
    }
}

void BroadcastMonitor::after_step(const Config& c, std::size_t i, std::size_t j) {
    const std::size_t ks[2] = {i, j};
    for (int s = 0; s < 2; ++s) {
        const auto& v = c.agents[ks[s]].internal;
        track_output(c, ks[s], out_[s]);
        if (v.r == r_[s]) continue;
        const auto& rec = v.last;
        auto& agg = open_[rec.round];
        ++agg.finished;
        agg.selection = rec.selection;
        agg.initiators += rec.initiated ? 1 : 0;
        agg.outcomes += rec.outcome ? 1 : 0;
        agg.selected += rec.selected ? 1 : 0;
        if (agg.finished == n_) {
            const Aggregate done = agg;
            open_.erase(rec.round);
            judge(rec.round, done);
            completed_ = std::max(completed_, rec.round);
        }
    }
}

void BroadcastMonitor::judge(std::uint64_t round, const Aggregate& a) {
    if (a.cross > 0) failures_.push_back({round, Failure::cross_round});
    if (a.selection) {
        if ((a.initiators > 0 && a.selected != 1) || (a.initiators == 0 && a.selected > 0))
            failures_.push_back({round, Failure::selection});
        return;
    }
    if (a.initiators > 0 && a.outcomes < n_) failures_.push_back({round, Failure::missed});
    if (a.initiators == 0 && a.outcomes > 0) failures_.push_back({round, Failure::spurious});
}

std::optional<std::uint64_t> BroadcastMonitor::last_failure_round() const {
    if (failures_.empty()) return std::nullopt;
    std::uint64_t best = 0;
    for (const auto& f : failures_) best = std::max(best, f.round);
    return best;
}

}  // namespace popmsg::broadcast
