#include <gtest/gtest.h>

#include "oracles.hpp"
#include "popmsg/popmsg.hpp"

using namespace popmsg;
using namespace popmsg::junta;

TEST(Schedule, ClassifyBase4Scale2) {
    const IntervalSchedule s(4, 2);
    EXPECT_EQ(s.classify(0), (Position{0, Kind::PreStart}));
    EXPECT_EQ(s.classify(1), (Position{0, Kind::Green}));
    EXPECT_EQ(s.classify(2), (Position{0, Kind::Green}));
    EXPECT_EQ(s.classify(3), (Position{0, Kind::Red}));
    EXPECT_EQ(s.classify(5), (Position{0, Kind::Door}));
    EXPECT_EQ(s.classify(6), (Position{1, Kind::Green}));
}

TEST(Schedule, ExperimentFirstDoor) {
    EXPECT_EQ(IntervalSchedule::experiment().door(0), 40u);
}

TEST(Schedule, DoorsMatchPrefixSums) {
    for (const auto& [b, c] : {std::pair{2u, 16u}, std::pair{4u, 2u}, std::pair{4u, 700u}}) {
        const IntervalSchedule s(b, c);
        for (unsigned i = 0; i < 6 && i < s.rounds(); ++i) EXPECT_EQ(s.door(i), oracle::door(b, c, i));
    }
}

TEST(Schedule, Base4ClosedForm) {
    // d_i = (5c/6)(4^{i+1} - 1) when 6 divides 5c.
    const IntervalSchedule s(4, 6);
    std::uint64_t p = 4;
    for (unsigned i = 0; i < 8; ++i, p *= 4) EXPECT_EQ(s.door(i), 5 * (p - 1));
}

TEST(Schedule, IntervalsPartitionPositiveIntegers) {
    const IntervalSchedule s(2, 16);
    unsigned expect_round = 0;
    for (std::uint64_t x = 1; x <= s.door(5); ++x) {
        const auto pos = s.classify(x);
        EXPECT_EQ(pos.round, expect_round);
        const std::uint64_t lo = expect_round == 0 ? 0 : s.door(expect_round - 1);
        if (x <= lo + s.green_size(expect_round))
            EXPECT_EQ(pos.kind, Kind::Green);
        else if (x < s.door(expect_round))
            EXPECT_EQ(pos.kind, Kind::Red);
        else
            EXPECT_EQ(pos.kind, Kind::Door);
        if (x == s.door(expect_round)) ++expect_round;
    }
    EXPECT_EQ(s.red_size(2), 3 * s.green_size(2) / 2);
}

TEST(Schedule, RejectsOddScale) {
    EXPECT_THROW(IntervalSchedule(2, 15), std::invalid_argument);
    EXPECT_THROW(IntervalSchedule(3, 16), std::invalid_argument);
}

TEST(Level, FromGeometric) {
    EXPECT_EQ(level_from_geometric(1), 0u);
    EXPECT_EQ(level_from_geometric(2), 1u);
    EXPECT_EQ(level_from_geometric(5), 3u);
    EXPECT_EQ(level_from_geometric(8), 3u);
    EXPECT_EQ(level_from_geometric(9), 4u);
}

TEST(Level, HalfOfDrawsAreLevelZero) {
    std::mt19937_64 rng(1);
    const int trials = 200000;
    int zero = 0;
    for (int t = 0; t < trials; ++t) zero += sample_level(rng) == 0 ? 1 : 0;
    EXPECT_NEAR(zero / static_cast<double>(trials), 0.5, 5 * oracle::binomial_sigma(0.5, trials));
}

TEST(Delta, CautiousAgentAtDoorWaitsForGo) {
    JuntaProtocol<> p;
    const auto d0 = p.schedule().door(0);
    auto s = p.with_level(0, static_cast<std::uint32_t>(d0));
    EXPECT_EQ(s.message, Message::Stop);
    auto stay = delta(p, s, Message::Stop, Role::initiator);
    EXPECT_EQ(stay.internal.count, d0);
    auto go = delta(p, s, Message::Go, Role::responder);
    EXPECT_EQ(go.internal.count, d0 + 1);
    EXPECT_EQ(go.message, Message::Go);
}

TEST(Delta, EagerAgentInRedKeepsGoing) {
    JuntaProtocol<> p;
    const auto& sch = p.schedule();
    auto s = p.with_level(3, static_cast<std::uint32_t>(sch.green_end(1) + 2));
    EXPECT_EQ(s.message, Message::Go);
    const auto t = delta(p, s, Message::Stop, Role::initiator);
    EXPECT_EQ(t.internal.count, s.internal.count + 1);
    EXPECT_EQ(t.message, Message::Go);
}

TEST(Delta, CautiousAgentInRedShowsStop) {
    JuntaProtocol<> p;
    auto s = p.with_level(0, static_cast<std::uint32_t>(p.schedule().green_end(0)));
    EXPECT_EQ(s.message, Message::Go);
    const auto t = delta(p, s, Message::Go, Role::initiator);
    EXPECT_EQ(t.message, Message::Stop);
}

TEST(Delta, DoorSetsEstimateAndJunta) {
    JuntaProtocol<> p;
    const auto d1 = p.schedule().door(1);
    auto low = p.with_level(0, static_cast<std::uint32_t>(d1 - 1));
    low = delta(p, low, Message::Go, Role::initiator);
    EXPECT_EQ(low.internal.count, d1);
    EXPECT_EQ(low.internal.logn_estimation, 2u);
    EXPECT_FALSE(low.internal.in_junta);
    auto high = p.with_level(1, static_cast<std::uint32_t>(d1 - 1));
    high = delta(p, high, Message::Go, Role::initiator);
    EXPECT_TRUE(high.internal.in_junta);
}

TEST(Delta, InitialMessageIsGo) {
    JuntaProtocol<> p;
    InitRng rng(1);
    EXPECT_EQ(p.init({}, rng).message, Message::Go);
    EXPECT_EQ(p.with_level(0, 0).message, Message::Go);
}

TEST(Trace, MonotoneCounterAndDoorGate) {
    JuntaProtocol<> p;
    auto c = make_configuration(p, std::vector<Empty>(300), 11);
    SchedulerRng rng(11);
    const auto& sch = p.schedule();
    for (int t = 0; t < 400000; ++t) {
        const auto [i, j] = rng.draw_pair(c.size());
        const auto bi = c.agents[i];
        const auto bj = c.agents[j];
        interact(c.agents, i, j, p);
        for (const auto& [before, after, seen] :
             {std::tuple{bi, c.agents[i], bj.message}, std::tuple{bj, c.agents[j], bi.message}}) {
            ASSERT_GE(after.internal.count, before.internal.count);
            ASSERT_LE(after.internal.count, before.internal.count + 1);
            const auto pos = sch.classify(before.internal.count);
            if (pos.kind == Kind::Door && before.internal.level <= pos.round && seen == Message::Stop)
                ASSERT_EQ(after.internal.count, before.internal.count) << "cautious agent passed a door on Stop";
        }
    }
}

TEST(Run, SmallPopulationHaltsAtAdmissibleDoor) {
    JuntaProtocol<> p;
    int good = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto c = make_configuration(p, std::vector<Empty>(1000), seed);
        SchedulerRng rng(seed);
        HaltMonitor mon(p);
        RunOptions opt;
        opt.budget = 20'000'000;
        run_until(c, p, mon, rng, opt);
        const auto o = summarize_outcome(p, c);
        const auto adm = admissible_door_rounds(1000);
        if (o.all_halted && o.common_door && o.all_stop &&
            std::find(adm.begin(), adm.end(), o.door_round) != adm.end())
            ++good;
    }
    EXPECT_GE(good, 9);
}

TEST(Run, AdmissibleRounds) {
    // log2 log2 1000 = 3.32
    EXPECT_EQ(admissible_door_rounds(1000), (std::vector<unsigned>{3, 4, 5}));
    // log2 log2 65536 = 4 exactly
    EXPECT_EQ(admissible_door_rounds(65536), (std::vector<unsigned>{4, 5}));
}

TEST(Run, TimeSeriesEndsAtCommonDoor) {
    JuntaProtocol<> p;
    auto c = make_configuration(p, std::vector<Empty>(500), 3);
    SchedulerRng rng(3);
    HaltMonitor mon(p);
    RunOptions opt;
    opt.budget = 20'000'000;
    opt.capture_snapshots = true;
    opt.snapshot_stride = 10.0;
    const auto rep = run_until(c, p, mon, rng, opt);
    ASSERT_TRUE(rep.stopped);
    const auto rows = analysis::emit_timeseries(rep.snapshots, [](const Summary& a) { return a.count; });
    ASSERT_FALSE(rows.empty());
    const auto o = summarize_outcome(p, c);
    ASSERT_TRUE(o.common_door);
    EXPECT_EQ(rows.back().min, rows.back().max);
    EXPECT_EQ(rows.back().max, static_cast<double>(p.schedule().door(o.door_round)));
    for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_GE(rows[k].max, rows[k - 1].max);
}

namespace {
struct CountingHook {
    std::shared_ptr<std::vector<unsigned>> seen = std::make_shared<std::vector<unsigned>>();
    void operator()(Internal&, unsigned round) const { seen->push_back(round); }
};
}  // namespace

TEST(Hook, FiresWhenMovingBeyondADoor) {
    CountingHook hook;
    JuntaProtocol<CountingHook> p(IntervalSchedule::experiment(), hook);
    auto s = p.with_level(5, static_cast<std::uint32_t>(p.schedule().door(0)));
    p.update(s, Message::Stop, Role::initiator);
    ASSERT_EQ(hook.seen->size(), 1u);
    EXPECT_EQ(hook.seen->front(), 0u);
}
