#pragma once

// Convergent 1-bit broadcast. Each agent counts its own interactions; round r
// lasts 5u(r) ticks, split into a barrier [0, 2u), an epidemic window and a
// selection window. A controller on top cycles through 7 round types to elect
// a leader, gather inputs bit by bit and either compute a symmetric function
// or drive a Turing machine whose tape is spread over the followers.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "popmsg/model.hpp"
#include "popmsg/turing.hpp"

namespace popmsg::broadcast {

enum class BcState : std::uint8_t { broadcasting, receiving, received, selecting, candidate, selected, idle };

/// One transmitted symbol of the controller's bit channel.
enum class Item : std::uint8_t { zero, one, stop };

/// (round-5 bit, round-6 bit): 0 = 01, 1 = 10, stop = 00.
std::pair<bool, bool> encode_item(Item it);
/// 11 decodes as 1.
Item decode_pair(bool first, bool second);

/// u(r): rounds last 5u(r) ticks.
struct RoundSchedule {
    enum class Shape : std::uint8_t { quadratic, linear };
    Shape shape = Shape::quadratic;
    std::uint64_t scale = 1;

    static RoundSchedule quadratic(std::uint64_t scale = 1) { return {Shape::quadratic, scale}; }
    static RoundSchedule linear(std::uint64_t scale) { return {Shape::linear, scale}; }

    [[nodiscard]] std::uint64_t unit(std::uint64_t r) const noexcept {
        return shape == Shape::quadratic ? scale * r * r : scale * r;
    }
    [[nodiscard]] std::uint64_t length(std::uint64_t r) const noexcept { return 5 * unit(r); }
};

enum class Mode : std::uint8_t { gather, turing };
enum class Topic : std::uint8_t { none, input, output, command, response };

using GatherFn = std::function<std::uint64_t(const std::vector<std::uint64_t>&)>;
GatherFn gather_or();
GatherFn gather_count_ones();
GatherFn gather_max();

/// What an agent saw in the round it just finished; read by instrumentation.
struct RoundRecord {
    std::uint64_t round = 0;
    bool selection = false;
    /// Broadcast rounds: started the epidemic. Selection rounds: was the selector.
    bool initiated = false;
    bool outcome = false;
    bool selected = false;
    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct TmLeader {
    enum class Phase : std::uint8_t { recruiting, running, final_read, reporting };
    Phase phase = Phase::recruiting;
    /// Leader plus acknowledged recruits.
    std::uint64_t count = 1;
    std::uint64_t head = 0;
    std::uint32_t state = 0;
    std::uint64_t budget = 0;
    std::uint64_t steps = 0;
    std::optional<turing::TmTransition> pending;
    std::uint32_t result = 0;
    std::optional<turing::Command> sent;
    friend bool operator==(const TmLeader&, const TmLeader&) = default;
};

struct Controller {
    bool leader = false;
    bool processed = false;
    bool cleared = false;
    bool restart_pending = false;
    std::uint64_t coin = 0;
    bool flipped = false;
    bool r3_one = false;
    bool in_progress = false;
    bool selected = false;
    bool r5 = false;

    Topic topic = Topic::none;
    bool speaking = false;
    std::vector<Item> queue;
    std::size_t sent = 0;
    std::vector<bool> rx;

    std::uint64_t input = 0;
    std::optional<std::uint64_t> output;

    /// Leader, gather mode.
    std::vector<std::uint64_t> gathered;

    /// Follower, TM mode.
    std::optional<std::uint64_t> index;
    std::optional<std::uint64_t> population;
    std::vector<std::uint32_t> tape;
    bool awaiting_response = false;
    std::optional<std::vector<bool>> reply;

    /// Leader, TM mode.
    TmLeader program;
    /// Number of leader-side restarts so far.
    std::uint64_t restarts = 0;

    [[nodiscard]] unsigned round_mod(std::uint64_t r) const noexcept { return static_cast<unsigned>((r - 1) % 7); }
    friend bool operator==(const Controller&, const Controller&) = default;
};

struct Internal {
    std::uint64_t tick = 0;
    std::uint64_t r = 1;
    /// u(r), cached at the round start.
    std::uint64_t unit = 1;
    BcState state = BcState::receiving;
    Controller ctl;
    RoundRecord last;
    friend bool operator==(const Internal&, const Internal&) = default;
};

struct Params {
    RoundSchedule schedule = RoundSchedule::quadratic();
    Mode mode = Mode::gather;
    GatherFn f = gather_or();
    std::shared_ptr<const turing::TmSpec> tm;
    /// Step budget from the population size; defaults to 4 n^2.
    std::function<std::uint64_t(std::uint64_t)> runtime_bound;
    /// Longer transmissions are discarded as garbage.
    std::size_t max_transmission = 128;
};

class BroadcastProtocol {
public:
    using Input = std::uint64_t;
    using Internal = broadcast::Internal;
    using Message = bool;
    using Output = std::optional<std::uint64_t>;
    using State = AgentState<Internal, Message>;

    struct Summary {
        std::uint64_t r = 1;
        std::uint64_t tick = 0;
        BcState state = BcState::receiving;
        bool leader = false;
        std::optional<std::uint64_t> output;
    };

    explicit BroadcastProtocol(Params params);
    static BroadcastProtocol gather(GatherFn f, RoundSchedule schedule = RoundSchedule::quadratic());
    static BroadcastProtocol turing(turing::TmSpec spec, RoundSchedule schedule,
                                    std::function<std::uint64_t(std::uint64_t)> runtime_bound = {});

    [[nodiscard]] const Params& params() const noexcept { return params_; }

    /// Every agent starts as a non-leader at r = 1, tick 0; the first round
    /// makes everyone a leader and fratricide thins them out.
    State init(const Input& in, InitRng& rng) const;

    void update(State& s, const Message& m, Role) const {
        auto& v = s.internal;
        ++v.tick;
        const std::uint64_t u = v.unit;
        if (v.tick < 2 * u) return;
        if (v.tick == 2 * u && v.state == BcState::broadcasting) {
            s.message = true;
        } else if (v.tick == 5 * u) {
            finish_round(s);
        } else if (v.tick > 2 * u && v.state == BcState::receiving && m) {
            v.state = BcState::received;
            s.message = true;
        } else if (v.tick == 3 * u && v.state == BcState::selecting) {
            s.message = true;
        } else if (v.tick > 3 * u && v.state == BcState::selecting && !m) {
            s.message = false;
            v.state = BcState::idle;
        } else if (v.tick > 2 * u && v.state == BcState::candidate && m) {
            v.state = BcState::selected;
        }
    }

    Output output(const State& s) const { return s.internal.ctl.output; }
    Summary summarize(const State& s) const {
        const auto& v = s.internal;
        return {v.r, v.tick, v.state, v.ctl.leader, v.ctl.output};
    }
    std::vector<Message> message_alphabet() const { return {false, true}; }

    /// Controller round update; public for unit tests. Fires at tick 5u(r).
    void finish_round(State& s) const;

private:
    void observe(Internal& v, bool outcome) const;
    void prepare(Internal& v) const;
    void begin_slot(Internal& v, bool selected_now) const;
    void on_item(Internal& v, Item it) const;
    void complete(Internal& v) const;
    void handle_gather(Internal& v) const;
    void handle_command(Internal& v) const;
    void handle_response(Internal& v) const;
    turing::Command next_command(Controller& c) const;
    void become_leader(Internal& v) const;
    void reset_leader(Controller& c) const;
    void reset_follower(Controller& c) const;
    static void reset_channel(Controller& c);
    [[nodiscard]] bool wants_select(const Controller& c) const;
    [[nodiscard]] unsigned symbol_width() const noexcept { return symbol_width_; }

    Params params_;
    unsigned symbol_width_ = 1;
};

using Config = Configuration<BroadcastProtocol>;

/// Inputs for a TM run: every agent holds `symbol`.
std::vector<std::uint64_t> uniform_inputs(std::size_t n, std::uint64_t symbol);

/// Index of the unique leader, if exactly one.
std::optional<std::size_t> unique_leader(const Config& c);

/// Cells 0..cells-1 as held by the followers; nullopt if some cell has no
/// unique owner or followers disagree on the population size.
std::optional<std::vector<std::uint32_t>> assemble_tape(const Config& c, std::size_t leader, std::size_t cells);

/// Per-round aggregate of the agents' round records plus output tracking.
/// A round is judged once all n agents have finished it.
class BroadcastMonitor {
public:
    struct Aggregate {
        std::size_t finished = 0;
        bool selection = false;
        std::size_t initiators = 0;
        std::size_t outcomes = 0;
        std::size_t selected = 0;
        std::size_t cross = 0;
    };
    enum class Failure : std::uint8_t { missed, spurious, selection, cross_round };
    struct FailureEvent {
        std::uint64_t round = 0;
        Failure kind = Failure::missed;
    };

    explicit BroadcastMonitor(const BroadcastProtocol& proto, std::optional<std::uint64_t> target = {});

    void reset(const Config& c);
    void before_step(const Config& c, std::size_t i, std::size_t j);
    void after_step(const Config& c, std::size_t i, std::size_t j);
    /// True once every agent outputs the target.
    [[nodiscard]] bool done() const noexcept { return target_ && correct_ == n_; }

    [[nodiscard]] const std::vector<FailureEvent>& failures() const noexcept { return failures_; }
    /// Highest round that every agent has finished.
    [[nodiscard]] std::uint64_t rounds_completed() const noexcept { return completed_; }
    [[nodiscard]] std::uint64_t output_changes() const noexcept { return changes_; }
    [[nodiscard]] std::uint64_t last_output_change() const noexcept { return last_change_; }
    [[nodiscard]] std::optional<std::uint64_t> last_failure_round() const;

private:
    void judge(std::uint64_t round, const Aggregate& a);
    void track_output(const Config& c, std::size_t k, const std::optional<std::uint64_t>& before);

    const BroadcastProtocol* proto_;
    std::optional<std::uint64_t> target_;
    std::size_t n_ = 0;
    std::size_t correct_ = 0;
    std::map<std::uint64_t, Aggregate> open_;
    std::vector<FailureEvent> failures_;
    std::uint64_t completed_ = 0;
    std::uint64_t changes_ = 0;
    std::uint64_t last_change_ = 0;
    std::uint64_t r_[2] = {0, 0};
    std::optional<std::uint64_t> out_[2];
};

}  // namespace popmsg::broadcast
