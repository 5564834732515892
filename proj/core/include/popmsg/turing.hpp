#pragma once

// Turing machine descriptions and the command codec used by the distributed
// simulation on top of 1-bit broadcast.
//
// Text grammar, one directive per line, '#' starts a comment:
//   start <state>
//   halt <state> [<state> ...]
//   blank <symbol>
//   <state> <symbol> -> <state> <symbol> <L|R|N>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace popmsg::turing {

class TmParseError : public std::runtime_error {
public:
    TmParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct TmTransition {
    std::uint32_t next = 0;
    std::uint32_t write = 0;
    int move = 0;
    friend bool operator==(const TmTransition&, const TmTransition&) = default;
};

/// Symbol 0 is the blank; other symbols are numbered by first appearance.
struct TmSpec {
    std::vector<std::string> states;
    std::vector<std::string> symbols;
    std::uint32_t start = 0;
    std::vector<bool> halting;
    std::map<std::pair<std::uint32_t, std::uint32_t>, TmTransition> delta;

    [[nodiscard]] std::optional<std::uint32_t> state_index(std::string_view name) const;
    [[nodiscard]] std::optional<std::uint32_t> symbol_index(std::string_view name) const;
    [[nodiscard]] bool is_halting(std::uint32_t q) const { return halting.at(q); }
    [[nodiscard]] const TmTransition& step(std::uint32_t q, std::uint32_t c) const;
    /// Bits needed to send one symbol index.
    [[nodiscard]] unsigned symbol_width() const;
};

/// Parses the text grammar above. The transition function must be total on
/// non-halting states.
TmSpec parse_tm_spec(std::string_view text);

/// Three-state machine over {_, 1, Y, N} that writes Y under the head if the
/// run of 1s starting at cell 0 has even length and N otherwise.
std::string unary_parity_source();
TmSpec unary_parity_tm();

struct MachineRun {
    bool halted = false;
    std::uint64_t steps = 0;
    std::uint32_t state = 0;
    std::uint64_t head = 0;
    std::vector<std::uint32_t> tape;
    /// Symbol under the head once halted.
    std::uint32_t result = 0;
};

/// Sequential run from cell 0 in the start state. Moving left of cell 0 keeps
/// the head at 0. Stops after `max_steps` transitions if not halted.
MachineRun run_machine(const TmSpec& spec, std::vector<std::uint32_t> tape, std::uint64_t max_steps);

enum class OpKind : std::uint8_t { recruit, read, write, population, result };

struct Command {
    OpKind kind = OpKind::read;
    /// Cell index, recruit index, population size or result symbol.
    std::uint64_t value = 0;
    /// Symbol for write.
    std::uint32_t symbol = 0;
    friend bool operator==(const Command&, const Command&) = default;
};

/// MSB-first binary; 0 is a single 0 bit.
std::vector<bool> to_bits(std::uint64_t v);
std::vector<bool> to_bits(std::uint64_t v, unsigned width);
/// nullopt for an empty or over-long bit string.
std::optional<std::uint64_t> from_bits(const std::vector<bool>& bits, std::size_t first = 0);

/// Prefix-free opcodes: recruit 0, read 10, write 110, population 1110,
/// result 1111. Trailing numbers are plain binary; the write symbol has a
/// fixed width before the cell index.
std::vector<bool> encode_command(const Command& c, unsigned symbol_width);
std::optional<Command> decode_command(const std::vector<bool>& bits, unsigned symbol_width);

struct CellAddress {
    std::uint64_t owner = 0;
    std::uint64_t slot = 0;
    friend bool operator==(const CellAddress&, const CellAddress&) = default;
};

/// Follower j holds cells i with i mod (n-1) = j at slot floor(i / (n-1)).
/// With n unknown every follower treats the modulus as infinite.
std::optional<CellAddress> cell_address(std::uint64_t cell, std::optional<std::uint64_t> n);

}  // namespace popmsg::turing
