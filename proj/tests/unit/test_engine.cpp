#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>

#include "oracles.hpp"
#include "popmsg/popmsg.hpp"

using namespace popmsg;

namespace {

std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> pair_counts(std::size_t n, std::uint64_t steps,
                                                                         std::uint64_t seed) {
    SchedulerRng rng(seed);
    std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> counts;
    for (std::uint64_t t = 0; t < steps; ++t) ++counts[rng.draw_pair(n)];
    return counts;
}

double chi_square(const std::map<std::pair<std::size_t, std::size_t>, std::uint64_t>& counts, std::size_t n,
                  std::uint64_t steps) {
    const double expected = static_cast<double>(steps) / static_cast<double>(n * (n - 1));
    double x = 0.0;
    for (const auto& [k, v] : counts) x += (static_cast<double>(v) - expected) * (static_cast<double>(v) - expected) / expected;
    return x;
}

}  // namespace

TEST(Scheduler, TwoAgentsSplitRolesEvenly) {
    const auto counts = pair_counts(2, 100000, 1);
    ASSERT_EQ(counts.size(), 2u);
    for (const auto& [k, v] : counts) EXPECT_NEAR(static_cast<double>(v) / 1e5, 0.5, 0.01);
}

TEST(Scheduler, ThreeAgentsUniformOverOrderedPairs) {
    const auto counts = pair_counts(3, 1000000, 2);
    ASSERT_EQ(counts.size(), 6u);
    for (const auto& [k, v] : counts) {
        EXPECT_NE(k.first, k.second);
        EXPECT_NEAR(static_cast<double>(v) / 1e6, 1.0 / 6.0, 0.01);
    }
}

TEST(Scheduler, ChiSquareUniformity) {
    for (std::size_t n : {3u, 5u}) {
        const std::uint64_t steps = 1000000;
        const auto counts = pair_counts(n, steps, 10 + n);
        ASSERT_EQ(counts.size(), n * (n - 1));
        boost::math::chi_squared dist(static_cast<double>(n * (n - 1) - 1));
        const double critical = boost::math::quantile(boost::math::complement(dist, 0.001));
        EXPECT_LT(chi_square(counts, n, steps), critical) << "n=" << n;
    }
}

TEST(Scheduler, NullProtocolKeepsMultiset) {
    NullProtocol p;
    auto c = make_configuration(p, std::vector<std::uint8_t>{1, 1, 2, 5});
    const auto before = canonical<NullProtocol>(c.agents);
    SchedulerRng rng(3);
    for (int t = 0; t < 1000; ++t) step(c, p, rng);
    EXPECT_EQ(canonical<NullProtocol>(c.agents), before);
}

TEST(Runner, BudgetZero) {
    EpidemicProtocol p;
    auto c = make_configuration(p, std::vector<bool>{true, false, false});
    SchedulerRng rng(1);
    RunOptions opt;
    opt.budget = 0;
    const auto rep = run_until(
        c, p, [](const auto& cc) { return std::all_of(cc.agents.begin(), cc.agents.end(), [](const auto& a) { return a.message; }); },
        rng, opt, Correctness<EpidemicProtocol>([](const auto&) { return true; }));
    EXPECT_EQ(rep.interactions, 0u);
    EXPECT_FALSE(rep.converged_at.has_value());
    EXPECT_TRUE(rep.budget_exhausted);
}

TEST(Runner, EpidemicOfTwoTakesOneInteraction) {
    EpidemicProtocol p;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto c = make_configuration(p, std::vector<bool>{true, false});
        SchedulerRng rng(seed);
        RunOptions opt;
        opt.budget = 100;
        const auto rep = run_until(
            c, p, [](const auto& cc) { return cc.agents[0].message && cc.agents[1].message; }, rng, opt);
        EXPECT_EQ(rep.interactions, 1u);
    }
}

TEST(Runner, EpidemicMeanMatchesHarmonicFormula) {
    const std::size_t n = 100;
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        SchedulerRng rng(seed);
        total += static_cast<double>(analysis::epidemic_time(n, rng));
    }
    const double want = oracle::epidemic_mean(n);
    EXPECT_NEAR(total / 1000.0, want, 0.05 * want);
}

TEST(Runner, DeterministicForEqualSeeds) {
    counting::CountingProtocol p;
    auto run = [&] {
        auto c = make_configuration(p, counting::leader_inputs(20), 4);
        SchedulerRng rng(77);
        RunOptions opt;
        opt.budget = 200000;
        opt.capture_snapshots = true;
        opt.snapshot_stride = 5.0;
        opt.record_trace = true;
        counting::CountingMonitor mon;
        auto rep = run_until(c, p, mon, rng, opt);
        return std::make_pair(rep.trace, outputs(p, c));
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}

TEST(Runner, ParallelTimeIsExact) {
    for (std::uint64_t n : {2u, 3u, 7u, 100u})
        for (std::uint64_t k : {0u, 1u, 5u, 12345u}) {
            const ParallelTime t(k, n);
            EXPECT_EQ(t.exact(), boost::rational<long long>(static_cast<long long>(2 * k), static_cast<long long>(n)));
        }
    EXPECT_EQ(ParallelTime(3, 7).value(), 6.0 / 7.0);
}

TEST(Runner, ConfirmationTailRecordsConvergence) {
    EpidemicProtocol p;
    std::vector<bool> in(30, false);
    in[0] = true;
    auto c = make_configuration(p, in);
    SchedulerRng rng(5);
    RunOptions opt;
    opt.budget = 1000000;
    auto all = [](const Configuration<EpidemicProtocol>& cc) {
        return std::all_of(cc.agents.begin(), cc.agents.end(), [](const auto& a) { return a.message; });
    };
    const auto rep = run_until(c, p, all, rng, opt, Correctness<EpidemicProtocol>(all));
    ASSERT_TRUE(rep.converged_at.has_value());
    EXPECT_EQ(*rep.converged_at, rep.stop_interaction);
    EXPECT_EQ(rep.interactions, rep.stop_interaction + 300);
}

TEST(Runner, SnapshotRowCountFollowsStride) {
    EpidemicProtocol p;
    std::vector<bool> in(10, false);
    in[0] = true;
    auto c = make_configuration(p, in);
    SchedulerRng rng(5);
    RunOptions opt;
    opt.budget = 1000;
    opt.capture_snapshots = true;
    opt.snapshot_stride = 3.0;
    const auto rep = run_until(c, p, NeverStop{}, rng, opt);
    // 1000 interactions at n = 10 is 200 time units.
    EXPECT_EQ(rep.snapshots.size(), static_cast<std::size_t>(std::ceil(200.0 / 3.0)));
    EXPECT_DOUBLE_EQ(rep.snapshots.back().parallel_time, 200.0);
}

TEST(Runner, ReplayReproducesRun) {
    junta::JuntaProtocol<> p;
    auto c = make_configuration(p, std::vector<Empty>(12), 8);
    const auto initial = c;
    SchedulerRng rng(8);
    RunOptions opt;
    opt.budget = 5000;
    opt.record_trace = true;
    const auto rep = run_until(c, p, NeverStop{}, rng, opt);
    const auto replayed = replay(initial, p, rep.trace, [](const auto&, std::size_t, std::size_t) {});
    EXPECT_EQ(replayed.agents, c.agents);
}

namespace {

template <class P>
Multiset<P> ms(const P& p, std::vector<typename P::Input> in) {
    return canonical<P>(make_configuration(p, in).agents);
}

}  // namespace

TEST(Reachability, EpidemicThreeAgents) {
    EpidemicProtocol p;
    const auto got = reachable_set(p, make_configuration(p, std::vector<bool>{true, false, false}), 100);
    const std::set<Multiset<EpidemicProtocol>> want = {ms(p, {true, false, false}), ms(p, {true, true, false}),
                                                       ms(p, {true, true, true})};
    EXPECT_EQ(got, want);
}

TEST(Reachability, NullProtocolIsInitialOnly) {
    NullProtocol p;
    const auto got = reachable_set(p, make_configuration(p, std::vector<std::uint8_t>{0, 1, 2, 3}), 100);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(*got.begin(), ms(p, {0, 1, 2, 3}));
}

TEST(Reachability, FratricideThreeAgents) {
    FratricideProtocol p;
    const auto got = reachable_set(p, make_configuration(p, std::vector<bool>{true, true, true}), 100);
    const std::set<Multiset<FratricideProtocol>> want = {ms(p, {true, true, true}), ms(p, {true, true, false}),
                                                         ms(p, {true, false, false})};
    EXPECT_EQ(got, want);
}

TEST(Reachability, PermutationInvariant) {
    ThreeStateFratricide p;
    using K = ThreeStateFratricide::Kind;
    const auto a = reachable_set(p, make_configuration(p, std::vector<K>{K::leader, K::leader, K::follower, K::leader}), 1000);
    const auto b = reachable_set(p, make_configuration(p, std::vector<K>{K::follower, K::leader, K::leader, K::leader}), 1000);
    EXPECT_EQ(a, b);
}

TEST(Reachability, CapOverflowReportsPartialCount) {
    stable::BallsProtocol p(1);
    try {
        reachable_set(p, make_configuration(p, std::vector<Empty>(6)), 5);
        FAIL() << "expected overflow";
    } catch (const ReachabilityOverflow& e) {
        EXPECT_EQ(e.partial_count(), 5u);
    }
}

TEST(StablyCorrect, BallsFiveAgentsAllYes) {
    stable::BallsProtocol p(3);
    const auto init = make_configuration(p, std::vector<Empty>(5));
    // floor(4/3) = 1 = 2^0, so every agent must end up reporting yes with one
    // leader holding 1 + 3 = 4 balls.
    const bool ok = check_stably_correct(
        p, init,
        std::function<bool(const Multiset<stable::BallsProtocol>&)>([](const auto& m) {
            std::size_t leaders = 0;
            std::uint32_t k = 0;
            for (const auto& a : m) {
                if (!a.message.bit) return false;
                if (a.message.leader) {
                    ++leaders;
                    k = a.internal.k;
                }
            }
            return leaders == 1 && k == 4;
        }),
        100000);
    EXPECT_TRUE(ok);
}

TEST(StablyCorrect, NullAlwaysTrue) {
    NullProtocol p;
    EXPECT_TRUE(check_stably_correct(p, make_configuration(p, std::vector<std::uint8_t>{0, 0, 0}),
                                     std::function<bool(const Multiset<NullProtocol>&)>([](const auto&) { return true; }),
                                     10));
}

TEST(StablyCorrect, EpidemicInfectsEveryone) {
    EpidemicProtocol p;
    auto all = [](const Multiset<EpidemicProtocol>& m) {
        return std::all_of(m.begin(), m.end(), [](const auto& a) { return a.message; });
    };
    EXPECT_TRUE(check_stably_correct(p, make_configuration(p, std::vector<bool>{true, false, false}),
                                     std::function<bool(const Multiset<EpidemicProtocol>&)>(all), 100));
    // Nobody infected: never correct.
    EXPECT_FALSE(check_stably_correct(p, make_configuration(p, std::vector<bool>{false, false, false}),
                                      std::function<bool(const Multiset<EpidemicProtocol>&)>(all), 100));
}

TEST(StablyCorrect, FratricideNeverStabilizesWithoutLeaders) {
    FratricideProtocol p;
    auto one = [](const Multiset<FratricideProtocol>& m) {
        return std::count_if(m.begin(), m.end(), [](const auto& a) { return a.message; }) == 1;
    };
    EXPECT_TRUE(check_stably_correct(p, make_configuration(p, std::vector<bool>{true, true, true, true}),
                                     std::function<bool(const Multiset<FratricideProtocol>&)>(one), 100));
}

TEST(Trials, ResultsComeBackInSeedOrder) {
    const auto seeds = seed_range(10, 40);
    const auto out = run_trials(seeds, 4, [](std::uint64_t s) { return s * s; });
    ASSERT_EQ(out.size(), 40u);
    for (std::size_t k = 0; k < out.size(); ++k) EXPECT_EQ(out[k], seeds[k] * seeds[k]);
}

TEST(Trials, PropagatesExceptions) {
    EXPECT_THROW(run_trials(seed_range(0, 8), 2,
                            [](std::uint64_t s) -> int {
                                if (s == 5) throw std::runtime_error("boom");
                                return 0;
                            }),
                 std::runtime_error);
}
