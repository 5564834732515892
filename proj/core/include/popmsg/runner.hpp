#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "popmsg/model.hpp"
#include "popmsg/scheduler.hpp"

namespace popmsg {

/// Incremental stop condition. `before_step`/`after_step` bracket every
/// interaction so the monitor can track only the fields it cares about.
template <class M, class P>
concept StepMonitor = Protocol<P> && requires(M& m, const Configuration<P>& c, std::size_t i) {
    m.reset(c);
    m.before_step(c, i, i);
    m.after_step(c, i, i);
    { m.done() } -> std::convertible_to<bool>;
};

template <class S, class P>
concept StopPredicate = Protocol<P> && std::predicate<S&, const Configuration<P>&>;

struct NeverStop {
    template <class C>
    bool operator()(const C&) const noexcept { return false; }
};

/// Several monitors driven together; done as soon as any member is done.
template <class... Ms>
class MonitorGroup {
public:
    explicit MonitorGroup(Ms&... ms) : ms_(ms...) {}

    template <class C>
    void reset(const C& c) {
        std::apply([&](auto&... m) { (m.reset(c), ...); }, ms_);
    }
    template <class C>
    void before_step(const C& c, std::size_t i, std::size_t j) {
        std::apply([&](auto&... m) { (m.before_step(c, i, j), ...); }, ms_);
    }
    template <class C>
    void after_step(const C& c, std::size_t i, std::size_t j) {
        std::apply([&](auto&... m) { (m.after_step(c, i, j), ...); }, ms_);
    }
    [[nodiscard]] bool done() const {
        return std::apply([](const auto&... m) { return (static_cast<bool>(m.done()) || ...); }, ms_);
    }

private:
    std::tuple<Ms&...> ms_;
};

struct RunOptions {
    std::uint64_t budget = 0;
    /// Extra interactions run after `stop` holds, used to confirm convergence.
    /// Defaults to 10 n. Only run when a correctness predicate is supplied.
    std::optional<std::uint64_t> confirmation_tail;
    /// Parallel-time distance between snapshots.
    double snapshot_stride = 1.0;
    bool capture_snapshots = false;
    /// Plain stop predicates and correctness are evaluated every this many
    /// interactions.
    std::uint64_t check_stride = 1;
    bool record_trace = false;
};

template <class P>
struct SummaryOf {
    using type = typename P::State;
    static type make(const P&, const typename P::State& s) { return s; }
};

template <Summarizable P>
struct SummaryOf<P> {
    using type = typename P::Summary;
    static type make(const P& p, const typename P::State& s) { return p.summarize(s); }
};

template <Protocol P>
struct Snapshot {
    double parallel_time = 0.0;
    std::uint64_t interactions = 0;
    std::vector<typename SummaryOf<P>::type> agents;
};

struct TraceStep {
    std::uint32_t initiator = 0;
    std::uint32_t responder = 0;
    friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

template <Protocol P>
struct ExecutionReport {
    std::uint64_t n = 0;
    std::uint64_t interactions = 0;
    ParallelTime parallel_time;
    bool stopped = false;
    std::uint64_t stop_interaction = 0;
    bool budget_exhausted = false;
    std::optional<std::uint64_t> converged_at;
    std::vector<Snapshot<P>> snapshots;
    std::vector<typename P::Output> final_outputs;
    std::vector<TraceStep> trace;
};

template <Protocol P>
using Correctness = std::function<bool(const Configuration<P>&)>;

namespace detail {

template <Protocol P>
class SnapshotSampler {
public:
    SnapshotSampler(const P& proto, std::size_t n, const RunOptions& opt)
        : proto_(proto), n_(n), enabled_(opt.capture_snapshots && opt.snapshot_stride > 0),
          stride_(opt.snapshot_stride) {
        if (enabled_) next_ = boundary(1);
    }

    void maybe_capture(const Configuration<P>& c, ExecutionReport<P>& report) {
        if (!enabled_ || c.interactions < next_) return;
        capture(c, report);
        ++k_;
        next_ = boundary(k_ + 1);
    }

    void finish(const Configuration<P>& c, ExecutionReport<P>& report) {
        if (!enabled_ || c.interactions == 0) return;
        if (!report.snapshots.empty() && report.snapshots.back().interactions == c.interactions)
            return;
        capture(c, report);
    }

private:
    std::uint64_t boundary(std::uint64_t k) const {
        return static_cast<std::uint64_t>(
            std::ceil(static_cast<double>(k) * stride_ * static_cast<double>(n_) / 2.0 - 1e-9));
    }

    void capture(const Configuration<P>& c, ExecutionReport<P>& report) {
        Snapshot<P> s;
        s.interactions = c.interactions;
        s.parallel_time = ParallelTime(c.interactions, n_).value();
        s.agents.reserve(c.size());
        for (const auto& a : c.agents) s.agents.push_back(SummaryOf<P>::make(proto_, a));
        report.snapshots.push_back(std::move(s));
    }

    const P& proto_;
    std::size_t n_;
    bool enabled_;
    double stride_;
    std::uint64_t k_ = 0;
    std::uint64_t next_ = std::numeric_limits<std::uint64_t>::max();
};

}  // namespace detail

/// Runs the uniform random scheduler until `stop` holds or the budget is
/// exhausted. `stop` is either a predicate over the configuration or a
/// StepMonitor. When `correctness` is given, the run continues for a
/// confirmation tail after stopping and `converged_at` records the first
/// interaction after which correctness was never observed to fail.
template <Protocol P, class Stop>
ExecutionReport<P> run_until(Configuration<P>& config, const P& proto, Stop&& stop,
                             SchedulerRng& rng, const RunOptions& opt,
                             const Correctness<P>& correctness = {}) {
    using StopT = std::remove_cvref_t<Stop>;
    constexpr bool is_monitor = StepMonitor<StopT, P>;
    static_assert(is_monitor || StopPredicate<StopT, P>,
                  "stop must be a predicate over Configuration or a StepMonitor");

    const std::size_t n = config.size();
    if (n < 2) throw InvalidInteraction("population needs at least two agents");

    ExecutionReport<P> report;
    report.n = n;
    detail::SnapshotSampler<P> sampler(proto, n, opt);
    const std::uint64_t stride = opt.check_stride == 0 ? 1 : opt.check_stride;
    const std::uint64_t start = config.interactions;

    std::optional<std::uint64_t> last_incorrect;
    bool correct_now = false;
    auto check_correct = [&] {
        correct_now = correctness(config);
        if (!correct_now) last_incorrect = config.interactions;
    };

    auto stop_holds = [&]() -> bool {
        if constexpr (is_monitor) {
            return stop.done();
        } else {
            return stop(std::as_const(config));
        }
    };

    auto one_step = [&] {
        const auto [i, j] = rng.draw_pair(n);
        if constexpr (is_monitor) stop.before_step(std::as_const(config), i, j);
        interact(config.agents, i, j, proto);
        ++config.interactions;
        if constexpr (is_monitor) stop.after_step(std::as_const(config), i, j);
        if (opt.record_trace)
            report.trace.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
        sampler.maybe_capture(config, report);
    };

    if constexpr (is_monitor) stop.reset(std::as_const(config));
    if (correctness) check_correct();

    bool stopped = stop_holds();
    while (!stopped && config.interactions - start < opt.budget) {
        one_step();
        const std::uint64_t done = config.interactions - start;
        const bool at_check = done % stride == 0;
        if (correctness && at_check) check_correct();
        if constexpr (is_monitor) {
            stopped = stop.done();
        } else {
            if (at_check) stopped = stop_holds();
        }
    }
    if (!stopped) stopped = stop_holds();

    report.stopped = stopped;
    report.stop_interaction = config.interactions;
    report.budget_exhausted = !stopped;

    if (stopped && correctness) {
        const std::uint64_t tail = opt.confirmation_tail.value_or(10 * static_cast<std::uint64_t>(n));
        for (std::uint64_t t = 1; t <= tail; ++t) {
            one_step();
            if (t % stride == 0 || t == tail) check_correct();
        }
        if (tail == 0) check_correct();
        if (correct_now) {
            const std::uint64_t from = last_incorrect ? *last_incorrect + 1 : start;
            if (config.interactions - from >= tail && config.interactions > start)
                report.converged_at = from;
        }
    }

    sampler.finish(config, report);
    report.interactions = config.interactions;
    report.parallel_time = ParallelTime(config.interactions, n);
    report.final_outputs = outputs(proto, config);
    return report;
}

/// Re-executes a recorded trace from `initial`, invoking `visit(config, i, j)`
/// after each interaction.
template <Protocol P, class Visit>
Configuration<P> replay(Configuration<P> initial, const P& proto,
                        const std::vector<TraceStep>& trace, Visit&& visit) {
    for (const auto& s : trace) {
        apply_interaction(initial, s.initiator, s.responder, proto);
        visit(std::as_const(initial), static_cast<std::size_t>(s.initiator),
              static_cast<std::size_t>(s.responder));
    }
    return initial;
}

}  // namespace popmsg
