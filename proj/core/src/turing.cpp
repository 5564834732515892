#include "popmsg/turing.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace popmsg::turing {

std::optional<std::uint32_t> TmSpec::state_index(std::string_view name) const {
    const auto it = std::find(states.begin(), states.end(), name);
    if (it == states.end()) return std::nullopt;
    return static_cast<std::uint32_t>(it - states.begin());
}

std::optional<std::uint32_t> TmSpec::symbol_index(std::string_view name) const {
    const auto it = std::find(symbols.begin(), symbols.end(), name);
    if (it == symbols.end()) return std::nullopt;
    return static_cast<std::uint32_t>(it - symbols.begin());
}

const TmTransition& TmSpec::step(std::uint32_t q, std::uint32_t c) const {
    const auto it = delta.find({q, c});
    if (it == delta.end()) throw std::out_of_range("no transition for state " + states.at(q));
    return it->second;
}

unsigned TmSpec::symbol_width() const {
    const auto n = static_cast<std::uint64_t>(symbols.size());
    return std::max<unsigned>(1, static_cast<unsigned>(std::bit_width(n == 0 ? 0 : n - 1)));
}

namespace {

std::vector<std::string> split_words(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream in{std::string(line)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

std::uint32_t intern(std::vector<std::string>& names, const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it != names.end()) return static_cast<std::uint32_t>(it - names.begin());
    names.push_back(name);
    return static_cast<std::uint32_t>(names.size() - 1);
}

}  // namespace

TmSpec parse_tm_spec(std::string_view text) {
    struct RawRule {
        std::size_t line;
        std::vector<std::string> w;
    };
    std::optional<std::string> start;
    std::optional<std::string> blank;
    std::vector<std::string> halts;
    std::vector<RawRule> rules;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto w = split_words(line);
        if (w.empty()) continue;
        if (w[0] == "start") {
            if (w.size() != 2) throw TmParseError(line_no, "expected: start <state>");
            if (start) throw TmParseError(line_no, "duplicate start directive");
            start = w[1];
        } else if (w[0] == "halt") {
            if (w.size() < 2) throw TmParseError(line_no, "expected: halt <state> [...]");
            halts.insert(halts.end(), w.begin() + 1, w.end());
        } else if (w[0] == "blank") {
            if (w.size() != 2) throw TmParseError(line_no, "expected: blank <symbol>");
            if (blank) throw TmParseError(line_no, "duplicate blank directive");
            blank = w[1];
        } else {
            if (w.size() != 6 || w[2] != "->")
                throw TmParseError(line_no, "expected: <state> <symbol> -> <state> <symbol> <L|R|N>");
            rules.push_back({line_no, w});
        }
    }
    if (!start) throw TmParseError(line_no, "missing start directive");
    if (!blank) throw TmParseError(line_no, "missing blank directive");
    if (halts.empty()) throw TmParseError(line_no, "missing halt directive");

    TmSpec spec;
    spec.symbols.push_back(*blank);
    spec.start = intern(spec.states, *start);
    for (const auto& h : halts) intern(spec.states, h);
    for (const auto& r : rules) {
        intern(spec.states, r.w[0]);
        intern(spec.symbols, r.w[1]);
        intern(spec.states, r.w[3]);
        intern(spec.symbols, r.w[4]);
    }
    spec.halting.assign(spec.states.size(), false);
    for (const auto& h : halts) spec.halting[*spec.state_index(h)] = true;

    for (const auto& r : rules) {
        const auto q = *spec.state_index(r.w[0]);
        const auto c = *spec.symbol_index(r.w[1]);
        if (spec.halting[q]) throw TmParseError(r.line, "halting state " + r.w[0] + " has a transition");
        int move = 0;
        const std::string& mv = r.w.back();
        if (mv == "L")
            move = -1;
        else if (mv == "R")
            move = 1;
        else if (mv == "N")
            move = 0;
        else
            throw TmParseError(r.line, "move must be L, R or N");
        TmTransition t{*spec.state_index(r.w[3]), *spec.symbol_index(r.w[4]), move};
        if (!spec.delta.emplace(std::pair{q, c}, t).second)
            throw TmParseError(r.line, "duplicate transition for " + r.w[0] + " " + r.w[1]);
    }
    for (std::uint32_t q = 0; q < spec.states.size(); ++q) {
        if (spec.halting[q]) continue;
        for (std::uint32_t c = 0; c < spec.symbols.size(); ++c)
            if (!spec.delta.count({q, c}))
                throw TmParseError(line_no, "transition missing for " + spec.states[q] + " " + spec.symbols[c]);
    }
    return spec;
}

std::string unary_parity_source() {
    return "# even/odd length of the run of 1s from cell 0\n"
           "start even\n"
           "halt halt\n"
           "blank _\n"
           "even 1 -> odd 1 R\n"
           "even _ -> halt Y N\n"
           "odd 1 -> even 1 R\n"
           "odd _ -> halt N N\n"
           "even Y -> halt Y N\n"
           "even N -> halt Y N\n"
           "odd Y -> halt N N\n"
           "odd N -> halt N N\n";
}

TmSpec unary_parity_tm() { return parse_tm_spec(unary_parity_source()); }

MachineRun run_machine(const TmSpec& spec, std::vector<std::uint32_t> tape, std::uint64_t max_steps) {
    MachineRun run;
    run.state = spec.start;
    run.tape = std::move(tape);
    while (!spec.is_halting(run.state) && run.steps < max_steps) {
        if (run.tape.size() <= run.head) run.tape.resize(run.head + 1, 0);
        const auto& t = spec.step(run.state, run.tape[run.head]);
        run.tape[run.head] = t.write;
        run.state = t.next;
        if (t.move < 0)
            run.head = run.head == 0 ? 0 : run.head - 1;
        else
            run.head += static_cast<std::uint64_t>(t.move);
        ++run.steps;
    }
    run.halted = spec.is_halting(run.state);
    if (run.tape.size() <= run.head) run.tape.resize(run.head + 1, 0);
    run.result = run.tape[run.head];
    return run;
}

std::vector<bool> to_bits(std::uint64_t v) {
    const unsigned w = std::max<unsigned>(1, static_cast<unsigned>(std::bit_width(v)));
    return to_bits(v, w);
}

std::vector<bool> to_bits(std::uint64_t v, unsigned width) {
    std::vector<bool> out(width);
    for (unsigned k = 0; k < width; ++k) out[k] = ((v >> (width - 1 - k)) & 1u) != 0;
    return out;
}

std::optional<std::uint64_t> from_bits(const std::vector<bool>& bits, std::size_t first) {
    if (first >= bits.size() || bits.size() - first > 64) return std::nullopt;
    std::uint64_t v = 0;
    for (std::size_t k = first; k < bits.size(); ++k) v = (v << 1) | (bits[k] ? 1u : 0u);
    return v;
}

std::vector<bool> encode_command(const Command& c, unsigned symbol_width) {
    std::vector<bool> out;
    switch (c.kind) {
        case OpKind::recruit: out = {false}; break;
        case OpKind::read: out = {true, false}; break;
        case OpKind::write: {
            out = {true, true, false};
            const auto s = to_bits(c.symbol, symbol_width);
            out.insert(out.end(), s.begin(), s.end());
            break;
        }
        case OpKind::population: out = {true, true, true, false}; break;
        case OpKind::result: out = {true, true, true, true}; break;
    }
    const auto v = to_bits(c.value);
    out.insert(out.end(), v.begin(), v.end());
    return out;
}

std::optional<Command> decode_command(const std::vector<bool>& bits, unsigned symbol_width) {
    std::size_t ones = 0;
    while (ones < bits.size() && ones < 4 && bits[ones]) ++ones;
    Command c;
    std::size_t at = 0;
    switch (ones) {
        case 0: c.kind = OpKind::recruit; at = 1; break;
        case 1: c.kind = OpKind::read; at = 2; break;
        case 2: c.kind = OpKind::write; at = 3; break;
        case 3: c.kind = OpKind::population; at = 4; break;
        default: c.kind = OpKind::result; at = 4; break;
    }
    if (at > bits.size()) return std::nullopt;
    if (c.kind == OpKind::write) {
        if (at + symbol_width > bits.size()) return std::nullopt;
        std::uint32_t s = 0;
        for (unsigned k = 0; k < symbol_width; ++k) s = (s << 1) | (bits[at + k] ? 1u : 0u);
        c.symbol = s;
        at += symbol_width;
    }
    const auto v = from_bits(bits, at);
    if (!v) return std::nullopt;
    c.value = *v;
    return c;
}

std::optional<CellAddress> cell_address(std::uint64_t cell, std::optional<std::uint64_t> n) {
    if (!n) return CellAddress{cell, 0};
    if (*n < 2) return std::nullopt;
    const std::uint64_t followers = *n - 1;
    return CellAddress{cell % followers, cell / followers};
}

}  // namespace popmsg::turing
