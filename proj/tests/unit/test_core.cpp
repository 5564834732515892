#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "popmsg/popmsg.hpp"

using namespace popmsg;

TEST(Interaction, NullProtocolLeavesAgentsUnchanged) {
    NullProtocol p;
    auto c = make_configuration(p, std::vector<std::uint8_t>{1, 2, 3});
    const auto before = c.agents;
    apply_interaction(c, 2, 0, p);
    EXPECT_EQ(c.agents, before);
    EXPECT_EQ(c.interactions, 1u);
}

TEST(Interaction, EpidemicInfectsResponder) {
    EpidemicProtocol p;
    auto c = make_configuration(p, std::vector<bool>{true, false});
    apply_interaction(c, 0, 1, p);
    EXPECT_TRUE(c.agents[0].message);
    EXPECT_TRUE(c.agents[1].message);
}

TEST(Interaction, SwapShowsSimultaneousUpdate) {
    SwapMessageProtocol p;
    auto c = make_configuration(p, std::vector<std::uint8_t>{1, 3});
    apply_interaction(c, 0, 1, p);
    EXPECT_EQ(c.agents[0].message, 3);
    EXPECT_EQ(c.agents[1].message, 1);
    // A sequential update would have left both agents with the same value.
    EXPECT_NE(c.agents[0].message, c.agents[1].message);
}

TEST(Interaction, RejectsBadIndices) {
    NullProtocol p;
    auto c = make_configuration(p, std::vector<std::uint8_t>{0, 0, 0});
    EXPECT_THROW(apply_interaction(c, 1, 1, p), InvalidInteraction);
    EXPECT_THROW(apply_interaction(c, 0, 3, p), InvalidInteraction);
    EXPECT_THROW(apply_interaction(c, 7, 0, p), InvalidInteraction);
    EXPECT_EQ(c.interactions, 0u);
}

TEST(Interaction, PopulationNeedsTwoAgents) {
    NullProtocol p;
    EXPECT_THROW(make_configuration(p, std::vector<std::uint8_t>{0}), std::invalid_argument);
}

TEST(Interaction, RolesAreDistinct) {
    EXPECT_EQ(opposite(Role::initiator), Role::responder);
    EXPECT_EQ(opposite(Role::responder), Role::initiator);
}

TEST(Interaction, PopulationSizeIsInvariant) {
    junta::JuntaProtocol<> p;
    auto c = make_configuration(p, std::vector<Empty>(17), 3);
    SchedulerRng rng(5);
    for (int t = 0; t < 5000; ++t) step(c, p, rng);
    EXPECT_EQ(c.size(), 17u);
    EXPECT_EQ(c.interactions, 5000u);
}

TEST(Delta, IsPure) {
    counting::CountingProtocol p;
    auto c = make_configuration(p, counting::leader_inputs(12), 1);
    SchedulerRng rng(9);
    for (int t = 0; t < 20000; ++t) {
        const auto [i, j] = rng.draw_pair(c.size());
        const auto m = c.agents[j].message;
        const auto a = delta(p, c.agents[i], m, Role::initiator);
        const auto b = delta(p, c.agents[i], m, Role::initiator);
        ASSERT_EQ(a, b);
        interact(c.agents, i, j, p);
    }
}

// Replacing the partner's internal record by another agent's must not change
// the result: transitions only see the partner's message.
template <class P>
void check_confinement(const P& p, Configuration<P> c, std::uint64_t seed, int steps) {
    SchedulerRng rng(seed);
    std::mt19937_64 pick(seed + 1);
    for (int t = 0; t < steps; ++t) {
        const auto [i, j] = rng.draw_pair(c.size());
        auto perturbed = c.agents;
        const auto k = std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(pick);
        perturbed[j].internal = c.agents[k].internal;
        perturbed[i].internal = c.agents[i].internal;
        auto a = c.agents[i];
        p.update(a, c.agents[j].message, Role::initiator);
        auto b = perturbed[i];
        p.update(b, perturbed[j].message, Role::initiator);
        ASSERT_EQ(a, b) << "step " << t;
        interact(c.agents, i, j, p);
    }
}

TEST(Delta, MessageConfinement) {
    counting::CountingProtocol cp;
    check_confinement(cp, make_configuration(cp, counting::leader_inputs(10), 2), 4, 20000);
    junta::JuntaProtocol<> jp;
    check_confinement(jp, make_configuration(jp, std::vector<Empty>(10), 2), 4, 20000);
    auto bp = broadcast::BroadcastProtocol::gather(broadcast::gather_or());
    check_confinement(bp, make_configuration(bp, std::vector<std::uint64_t>{1, 0, 0, 0, 0}, 2), 4, 20000);
}

template <class P>
void check_alphabet(const P& p, Configuration<P> c, std::uint64_t seed, int steps) {
    const auto alphabet = p.message_alphabet();
    auto member = [&](const typename P::Message& m) {
        return std::find(alphabet.begin(), alphabet.end(), m) != alphabet.end();
    };
    SchedulerRng rng(seed);
    for (const auto& a : c.agents) ASSERT_TRUE(member(a.message));
    for (int t = 0; t < steps; ++t) {
        const auto [i, j] = step(c, p, rng);
        ASSERT_TRUE(member(c.agents[i].message)) << "step " << t;
        ASSERT_TRUE(member(c.agents[j].message)) << "step " << t;
    }
}

TEST(Alphabet, ShippedProtocolsStayInsideDeclaredAlphabet) {
    junta::JuntaProtocol<> jp;
    check_alphabet(jp, make_configuration(jp, std::vector<Empty>(30), 1), 1, 50000);
    counting::CountingProtocol cp({16, 2});
    check_alphabet(cp, make_configuration(cp, counting::leader_inputs(9, {0, 1, 0, 1, 0, 1, 0, 0}), 1), 1, 200000);
    stable::BallsProtocol bp(3);
    check_alphabet(bp, make_configuration(bp, std::vector<Empty>(11), 1), 1, 50000);
    ThreeStateFratricide tp;
    check_alphabet(tp, make_configuration(tp, std::vector<ThreeStateFratricide::Kind>(6)), 1, 5000);
    stable::SceProtocol<LeaderBitBroadcast> sp;
    check_alphabet(sp, make_configuration(sp, std::vector<bool>{true, false, true, false, false}), 1, 50000);
    stable::OpenWrap<FratricideProtocol> wp;
    std::vector<stable::WrapInput<FratricideProtocol>> win(5, {true, false});
    win[0].leader = true;
    check_alphabet(wp, make_configuration(wp, win), 1, 50000);
    auto gp = broadcast::BroadcastProtocol::gather(broadcast::gather_max());
    check_alphabet(gp, make_configuration(gp, std::vector<std::uint64_t>{3, 1, 2, 0}), 1, 200000);
}

TEST(Alphabet, SizeDoesNotDependOnPopulation) {
    counting::CountingProtocol cp;
    const auto a = cp.message_alphabet().size();
    make_configuration(cp, counting::leader_inputs(1000));
    EXPECT_EQ(cp.message_alphabet().size(), a);
    junta::JuntaProtocol<> jp;
    EXPECT_EQ(jp.message_alphabet().size(), 2u);
    EXPECT_EQ(broadcast::BroadcastProtocol::gather(broadcast::gather_or()).message_alphabet().size(), 2u);
}
