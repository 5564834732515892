#include <gtest/gtest.h>

#include "oracles.hpp"
#include "popmsg/popmsg.hpp"

using namespace popmsg;
using namespace popmsg::broadcast;
using turing::Command;
using turing::OpKind;

namespace {

BroadcastProtocol::State at_round(std::uint64_t r, std::uint64_t unit, std::uint64_t tick, BcState st) {
    BroadcastProtocol::State s;
    s.internal.r = r;
    s.internal.unit = unit;
    s.internal.tick = tick;
    s.internal.state = st;
    return s;
}

struct RunOutcome {
    bool converged = false;
    std::vector<std::optional<std::uint64_t>> outputs;
    std::uint64_t restarts = 0;
    std::size_t failures = 0;
};

RunOutcome run_broadcast(const BroadcastProtocol& p, const std::vector<std::uint64_t>& in, std::uint64_t seed,
                         std::optional<std::uint64_t> target, std::uint64_t budget) {
    auto c = make_configuration(p, in, seed);
    BroadcastMonitor mon(p, target);
    SchedulerRng rng(seed);
    RunOptions opt;
    opt.budget = budget;
    const auto rep = run_until(c, p, mon, rng, opt);
    RunOutcome o;
    o.converged = rep.stopped;
    for (const auto& a : c.agents) {
        o.outputs.push_back(a.internal.ctl.output);
        o.restarts = std::max(o.restarts, a.internal.ctl.restarts);
    }
    o.failures = mon.failures().size();
    return o;
}

}  // namespace

TEST(Ticks, NothingBeforeTwoUnits) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto s = at_round(2, 4, 4, BcState::broadcasting);
    p.update(s, true, Role::initiator);
    EXPECT_EQ(s.internal.tick, 5u);
    EXPECT_FALSE(s.message);
    EXPECT_EQ(s.internal.state, BcState::broadcasting);
}

TEST(Ticks, BroadcasterRaisesAtTwoUnits) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto s = at_round(2, 4, 7, BcState::broadcasting);
    p.update(s, false, Role::responder);
    EXPECT_TRUE(s.message);
}

TEST(Ticks, ReceiverRelaysAfterTwoUnits) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto s = at_round(2, 4, 9, BcState::receiving);
    p.update(s, true, Role::initiator);
    EXPECT_EQ(s.internal.state, BcState::received);
    EXPECT_TRUE(s.message);
    // A 1 seen before the barrier is ignored.
    auto early = at_round(2, 4, 3, BcState::receiving);
    p.update(early, true, Role::initiator);
    EXPECT_EQ(early.internal.state, BcState::receiving);
}

TEST(Ticks, RoundEndsAtFiveUnits) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto s = at_round(2, 4, 19, BcState::received);
    s.message = true;
    p.update(s, false, Role::initiator);
    EXPECT_EQ(s.internal.r, 3u);
    EXPECT_EQ(s.internal.tick, 0u);
    EXPECT_EQ(s.internal.unit, 9u);
    EXPECT_FALSE(s.message);
    EXPECT_TRUE(s.internal.last.outcome);
}

TEST(Schedule, Units) {
    EXPECT_EQ(RoundSchedule::quadratic().unit(3), 9u);
    EXPECT_EQ(RoundSchedule::quadratic(2).length(2), 40u);
    EXPECT_EQ(RoundSchedule::linear(25).unit(4), 100u);
}

TEST(Channel, ItemCodec) {
    EXPECT_EQ(encode_item(Item::one), std::make_pair(true, false));
    EXPECT_EQ(encode_item(Item::zero), std::make_pair(false, true));
    EXPECT_EQ(encode_item(Item::stop), std::make_pair(false, false));
    EXPECT_EQ(decode_pair(false, false), Item::stop);
    EXPECT_EQ(decode_pair(true, true), Item::one);
    for (auto it : {Item::zero, Item::one, Item::stop}) {
        const auto [a, b] = encode_item(it);
        EXPECT_EQ(decode_pair(a, b), it);
    }
}

TEST(Controller, RoundMod) {
    Controller c;
    EXPECT_EQ(c.round_mod(1), 0u);
    EXPECT_EQ(c.round_mod(7), 6u);
    EXPECT_EQ(c.round_mod(8), 0u);
}

TEST(Controller, SilentFirstRoundMakesLeader) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto s = at_round(1, 1, 5, BcState::receiving);
    p.finish_round(s);
    EXPECT_TRUE(s.internal.ctl.leader);
    EXPECT_TRUE(s.internal.ctl.restart_pending);
    EXPECT_EQ(s.internal.r, 2u);
}

TEST(Controller, HeardLeaderStaysFollower) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto s = at_round(8, 1, 5, BcState::received);
    p.finish_round(s);
    EXPECT_FALSE(s.internal.ctl.leader);
}

TEST(Controller, UnflippedLeaderHearingOneStepsDown) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto s = at_round(2, 4, 20, BcState::received);
    s.internal.ctl.leader = true;
    s.internal.ctl.flipped = false;
    p.finish_round(s);
    EXPECT_FALSE(s.internal.ctl.leader);
    EXPECT_TRUE(s.internal.ctl.cleared);
    // The next round announces the change.
    EXPECT_EQ(s.internal.state, BcState::broadcasting);
}

TEST(Controller, ClearRoundResetsFollower) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto s = at_round(3, 9, 45, BcState::received);
    s.internal.ctl.processed = true;
    s.internal.ctl.input = 7;
    p.finish_round(s);
    EXPECT_FALSE(s.internal.ctl.processed);
    EXPECT_EQ(s.internal.ctl.tape, std::vector<std::uint32_t>{7});
}

TEST(Controller, UnprocessedFollowerRequestsInRoundFour) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto s = at_round(3, 9, 45, BcState::receiving);
    s.internal.ctl.processed = false;
    p.finish_round(s);
    EXPECT_EQ(s.internal.r, 4u);
    EXPECT_EQ(s.internal.state, BcState::broadcasting);
}

TEST(Controller, ProcessedFollowerSpeaksInputOnce) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto s = at_round(5, 25, 125, BcState::selected);
    s.internal.ctl.r3_one = true;
    s.internal.ctl.processed = false;
    s.internal.ctl.input = 5;
    p.finish_round(s);
    EXPECT_TRUE(s.internal.ctl.speaking);
    EXPECT_TRUE(s.internal.ctl.processed);
    EXPECT_EQ(s.internal.ctl.queue, (std::vector<Item>{Item::one, Item::zero, Item::one, Item::stop}));
    // Round 5 transmits the first half of the first item.
    EXPECT_EQ(s.internal.state, BcState::broadcasting);
}

namespace {

BroadcastProtocol::State follower_at_item_end(const BroadcastProtocol& p, const Command& cmd, unsigned width) {
    auto s = at_round(7, 1, 5, BcState::receiving);
    auto& c = s.internal.ctl;
    c.topic = Topic::command;
    c.in_progress = true;
    for (bool b : turing::encode_command(cmd, width)) c.rx.push_back(b);
    c.r5 = false;
    (void)p;
    return s;
}

}  // namespace

TEST(Follower, ReadOfUnwrittenCellIsBlank) {
    const auto tm = turing::unary_parity_tm();
    const auto p = BroadcastProtocol::turing(tm, RoundSchedule::linear(1));
    auto s = follower_at_item_end(p, {OpKind::read, 6, 0}, tm.symbol_width());
    s.internal.ctl.index = 2;
    s.internal.ctl.population = 5;
    s.internal.ctl.tape = {1};
    p.finish_round(s);
    ASSERT_TRUE(s.internal.ctl.reply.has_value());
    EXPECT_EQ(turing::from_bits(*s.internal.ctl.reply), std::optional<std::uint64_t>(0));
    EXPECT_TRUE(s.internal.ctl.awaiting_response);
}

TEST(Follower, ReadOfOwnedCell) {
    const auto tm = turing::unary_parity_tm();
    const auto p = BroadcastProtocol::turing(tm, RoundSchedule::linear(1));
    auto s = follower_at_item_end(p, {OpKind::read, 2, 0}, tm.symbol_width());
    s.internal.ctl.index = 2;
    s.internal.ctl.population = 5;
    s.internal.ctl.tape = {3};
    p.finish_round(s);
    ASSERT_TRUE(s.internal.ctl.reply.has_value());
    EXPECT_EQ(turing::from_bits(*s.internal.ctl.reply), std::optional<std::uint64_t>(3));
}

TEST(Follower, WriteStoresAtSlot) {
    const auto tm = turing::unary_parity_tm();
    const auto p = BroadcastProtocol::turing(tm, RoundSchedule::linear(1));
    auto s = follower_at_item_end(p, {OpKind::write, 10, 2}, tm.symbol_width());
    s.internal.ctl.index = 2;
    s.internal.ctl.population = 5;
    s.internal.ctl.tape = {1};
    p.finish_round(s);
    EXPECT_EQ(s.internal.ctl.tape, (std::vector<std::uint32_t>{1, 0, 2}));
}

TEST(Follower, RecruitKeepsExistingIndex) {
    const auto tm = turing::unary_parity_tm();
    const auto p = BroadcastProtocol::turing(tm, RoundSchedule::linear(1));
    auto s = follower_at_item_end(p, {OpKind::recruit, 4, 0}, tm.symbol_width());
    s.internal.ctl.index = 3;
    s.internal.ctl.selected = true;
    p.finish_round(s);
    EXPECT_EQ(s.internal.ctl.index, std::optional<std::uint64_t>(3));
    EXPECT_FALSE(s.internal.ctl.reply.has_value());
    EXPECT_FALSE(s.internal.ctl.selected);
}

TEST(Follower, RecruitAssignsIndexToSelected) {
    const auto tm = turing::unary_parity_tm();
    const auto p = BroadcastProtocol::turing(tm, RoundSchedule::linear(1));
    auto s = follower_at_item_end(p, {OpKind::recruit, 4, 0}, tm.symbol_width());
    s.internal.ctl.selected = true;
    p.finish_round(s);
    EXPECT_EQ(s.internal.ctl.index, std::optional<std::uint64_t>(4));
    EXPECT_TRUE(s.internal.ctl.reply.has_value());
}

TEST(Tm, ParseParity) {
    const auto tm = turing::unary_parity_tm();
    EXPECT_EQ(tm.states.size(), 3u);
    EXPECT_EQ(tm.symbols.size(), 4u);
    EXPECT_EQ(tm.symbols[0], "_");
    EXPECT_EQ(tm.symbol_width(), 2u);
    EXPECT_TRUE(tm.is_halting(*tm.state_index("halt")));
}

TEST(Tm, ParseErrors) {
    using turing::parse_tm_spec;
    using turing::TmParseError;
    EXPECT_THROW(parse_tm_spec("halt h\nblank _\n"), TmParseError);
    EXPECT_THROW(parse_tm_spec("start a\nblank _\n"), TmParseError);
    EXPECT_THROW(parse_tm_spec("start a\nhalt h\n"), TmParseError);
    EXPECT_THROW(parse_tm_spec("start a\nhalt h\nblank _\na _ -> h _ X\n"), TmParseError);
    EXPECT_THROW(parse_tm_spec("start a\nhalt h\nblank _\na _ h _ R\n"), TmParseError);
    EXPECT_THROW(parse_tm_spec("start a\nhalt h\nblank _\na _ -> h 1 R\n"), TmParseError);  // a 1 missing
    EXPECT_THROW(parse_tm_spec("start a\nhalt h\nblank _\na _ -> h _ R\nh _ -> a _ R\n"), TmParseError);
    try {
        parse_tm_spec("start a\nstart b\n");
        FAIL();
    } catch (const TmParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_NO_THROW(parse_tm_spec("# only comments\nstart a # trailing\nhalt a\nblank _\n"));
}

TEST(Tm, ReferenceAgreesWithLibraryRun) {
    const auto tm = turing::unary_parity_tm();
    const auto one = *tm.symbol_index("1");
    for (std::size_t len = 0; len <= 9; ++len) {
        auto ref = oracle::parity_machine();
        ref.reset(std::vector<std::string>(len, "1"));
        ref.run(1000);
        const auto run = turing::run_machine(tm, std::vector<std::uint32_t>(len, one), 1000);
        ASSERT_TRUE(run.halted);
        EXPECT_EQ(tm.symbols[run.result], ref.at(ref.head)) << len;
        EXPECT_EQ(run.steps, ref.steps);
        EXPECT_EQ(ref.at(ref.head), len % 2 == 0 ? "Y" : "N");
    }
}

TEST(Tm, CommandCodec) {
    EXPECT_EQ(turing::to_bits(0), std::vector<bool>{false});
    EXPECT_EQ(turing::to_bits(6), (std::vector<bool>{true, true, false}));
    EXPECT_EQ(turing::to_bits(1, 3), (std::vector<bool>{false, false, true}));
    EXPECT_EQ(turing::from_bits({true, false, true}), std::optional<std::uint64_t>(5));
    EXPECT_EQ(turing::from_bits({}), std::nullopt);
    for (const Command c : {Command{OpKind::recruit, 3, 0}, Command{OpKind::read, 0, 0}, Command{OpKind::write, 9, 2},
                            Command{OpKind::population, 12, 0}, Command{OpKind::result, 1, 0}})
        EXPECT_EQ(turing::decode_command(turing::encode_command(c, 2), 2), c);
    EXPECT_EQ(turing::decode_command({}, 2), std::nullopt);
}

TEST(Tm, CellMapping) {
    using turing::CellAddress;
    EXPECT_EQ(turing::cell_address(2, 5), (CellAddress{2, 0}));
    EXPECT_EQ(turing::cell_address(6, 5), (CellAddress{2, 1}));
    EXPECT_EQ(turing::cell_address(10, 5), (CellAddress{2, 2}));
    EXPECT_EQ(turing::cell_address(7, std::nullopt), (CellAddress{7, 0}));
}

TEST(Run, TickGeometry) {
    const auto p = BroadcastProtocol::gather(gather_or());
    auto c = make_configuration(p, std::vector<std::uint64_t>{1, 0, 0, 0, 0, 0}, 1);
    SchedulerRng rng(1);
    for (int t = 0; t < 300000; ++t) {
        const auto [i, j] = rng.draw_pair(c.size());
        const auto ri = c.agents[i].internal.r, rj = c.agents[j].internal.r;
        interact(c.agents, i, j, p);
        for (const auto& [k, r0] : {std::pair{i, ri}, std::pair{j, rj}}) {
            const auto& v = c.agents[k].internal;
            ASSERT_LT(v.tick, 5 * v.unit);
            ASSERT_LE(v.r, r0 + 1);
            if (v.tick < 2 * v.unit && v.r > 1) ASSERT_FALSE(c.agents[k].message);
        }
    }
}

TEST(Run, GatherOr) {
    const auto p = BroadcastProtocol::gather(gather_or());
    std::vector<std::uint64_t> in(10, 0);
    in[4] = 1;
    const auto o = run_broadcast(p, in, 3, 1, 200'000'000);
    ASSERT_TRUE(o.converged);
    for (const auto& x : o.outputs) EXPECT_EQ(x, std::optional<std::uint64_t>(1));
}

TEST(Run, GatherMaxOfEqualInputs) {
    const auto p = BroadcastProtocol::gather(gather_max());
    const auto o = run_broadcast(p, std::vector<std::uint64_t>(5, 2), 4, 2, 200'000'000);
    ASSERT_TRUE(o.converged);
    for (const auto& x : o.outputs) EXPECT_EQ(x, std::optional<std::uint64_t>(2));
}

TEST(Run, StartHaltingMachineReportsCellZero) {
    const auto tm = turing::parse_tm_spec("start h\nhalt h\nblank _\n");
    const auto p = BroadcastProtocol::turing(tm, RoundSchedule::linear(25));
    const auto o = run_broadcast(p, uniform_inputs(4, 0), 2, 0, 200'000'000);
    ASSERT_TRUE(o.converged);
}

TEST(Run, TooSmallBudgetKeepsRestarting) {
    const auto tm = turing::parse_tm_spec(
        "start a\nhalt h\nblank _\n"
        "a _ -> b _ R\na Y -> b Y R\n"
        "b _ -> h Y N\nb Y -> h Y N\n");
    ASSERT_EQ(turing::run_machine(tm, {}, 10).steps, 2u);
    const auto p = BroadcastProtocol::turing(tm, RoundSchedule::linear(25), [](std::uint64_t) { return 1; });
    const auto o = run_broadcast(p, uniform_inputs(4, 0), 5, std::nullopt, 40'000'000);
    EXPECT_GE(o.restarts, 3u);
    for (const auto& x : o.outputs) EXPECT_FALSE(x.has_value());
}

TEST(Run, ParityOfFourCells) {
    const auto tm = turing::unary_parity_tm();
    const auto one = *tm.symbol_index("1");
    const auto yes = *tm.symbol_index("Y");
    const auto p = BroadcastProtocol::turing(tm, RoundSchedule::linear(25));
    const auto o = run_broadcast(p, uniform_inputs(5, one), 6, yes, 400'000'000);
    ASSERT_TRUE(o.converged);
    for (const auto& x : o.outputs) EXPECT_EQ(x, std::optional<std::uint64_t>(yes));
}
