#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "popmsg/popmsg.hpp"

using namespace popmsg;
using namespace popmsg::analysis;

TEST(Stats, PercentileNearestRank) {
    const std::vector<double> xs{5, 1, 4, 2, 3};
    EXPECT_EQ(percentile(xs, 0.5), 3.0);
    EXPECT_EQ(percentile(xs, 0.0), 1.0);
    EXPECT_EQ(percentile(xs, 1.0), 5.0);
    EXPECT_EQ(percentile(xs, 0.9), 5.0);
    EXPECT_EQ(percentile({}, 0.5), 0.0);
}

TEST(Stats, Summarize) {
    const auto s = summarize({2, 4, 4, 4, 5, 5, 7, 9});
    EXPECT_EQ(s.count, 8u);
    EXPECT_DOUBLE_EQ(s.mean, 5.0);
    EXPECT_NEAR(s.stddev, std::sqrt(32.0 / 7.0), 1e-12);
    EXPECT_EQ(s.min, 2.0);
    EXPECT_EQ(s.max, 9.0);
}

TEST(Stats, ResummarizeMatchesStored) {
    TrialBatch b;
    for (std::uint64_t k = 0; k < 10; ++k)
        b.trials.push_back({k, 100 + k * k, std::nullopt, k == 3, static_cast<double>(k)});
    b.resummarize();
    const auto first = b.interactions;
    const auto value = b.value;
    b.resummarize();
    EXPECT_EQ(b.interactions, first);
    EXPECT_EQ(b.value, value);
    EXPECT_EQ(b.failures, 1u);
    EXPECT_DOUBLE_EQ(b.value.mean, 4.5);
}

TEST(Epidemic, ExpectationMatchesHarmonicSum) {
    EXPECT_NEAR(epidemic_expectation(100), 512.5604, 1e-3);
    for (std::size_t n : {2u, 3u, 10u, 1000u}) EXPECT_NEAR(epidemic_expectation(n), oracle::epidemic_mean(n), 1e-9);
    EXPECT_NEAR(harmonic(4), 25.0 / 12.0, 1e-12);
}

TEST(Epidemic, TwoAgentsTakeOneInteraction) {
    SchedulerRng rng(1);
    for (int t = 0; t < 10; ++t) EXPECT_EQ(epidemic_time(2, rng), 1u);
}

TEST(Epidemic, MeanAcrossSeedFamilies) {
    for (std::uint64_t seed : {1ULL, 1ULL << 40}) {
        const auto s = epidemic_stats(200, 2000, seed);
        EXPECT_NEAR(s.mean / oracle::epidemic_mean(200), 1.0, 0.03) << seed;
        EXPECT_EQ(s.samples.size(), 2000u);
    }
}

TEST(Epidemic, TailBelowBound) {
    const auto s = epidemic_stats(100, 5000, 7);
    EXPECT_LE(s.tail_one, epidemic_tail_bound(100, 1.0) + 3 * oracle::binomial_sigma(epidemic_tail_bound(100, 1.0), 5000));
    EXPECT_NEAR(epidemic_tail_bound(100, 1.0), 2.5 * std::log(100.0) * 1e-4, 1e-12);
}

TEST(Drift, LargeThresholdNeverExceeded) {
    const auto s = drift_stats(50, 100, 100, 200, 3);
    EXPECT_EQ(s.exceeded, 0u);
    EXPECT_NEAR(s.bound, std::exp(-50.0), 1e-30);
}

TEST(Drift, ZeroThresholdAlmostAlwaysExceeded) {
    // The walk stays non-positive with probability about sqrt(2 / (pi m)).
    const auto s = drift_stats(4, 10000, 0, 500, 3);
    EXPECT_GT(s.frequency, 0.97);
    EXPECT_DOUBLE_EQ(s.bound, 1.0);
}

TEST(Levels, Probability) {
    EXPECT_DOUBLE_EQ(level_probability(0), 0.5);
    EXPECT_DOUBLE_EQ(level_probability(1), 0.25);
    EXPECT_DOUBLE_EQ(level_probability(2), 0.1875);
    double total = 0.0;
    for (unsigned i = 0; i < 12; ++i) total += level_probability(i);
    EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Levels, BandAndExpectation) {
    const auto b = level_band(10000, 1);
    EXPECT_DOUBLE_EQ(b.lower, 1250.0);
    EXPECT_DOUBLE_EQ(b.upper, 5000.0);
    EXPECT_DOUBLE_EQ(10000 * level_probability(1), 2500.0);
    EXPECT_EQ(checked_levels(10000), 3u);
    EXPECT_EQ(checked_levels(65536), 4u);
}

TEST(Levels, HistogramLevelZeroHalf) {
    const auto h = level_histogram(2000, 100, 11);
    ASSERT_EQ(h.counts.size(), 100u);
    EXPECT_NEAR(h.mean_counts[0], 1000.0, 3 * std::sqrt(2000 * 0.25) / std::sqrt(100.0) + 1);
    for (const auto& row : h.counts) {
        std::uint64_t s = 0;
        for (auto v : row) s += v;
        EXPECT_EQ(s, 2000u);
    }
}

TEST(Series, EqualValuesGiveFlatRows) {
    std::vector<Snapshot<EpidemicProtocol>> snaps(3);
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        snaps[k].parallel_time = static_cast<double>(k);
        snaps[k].agents.assign(4, EpidemicProtocol::State{{}, true});
    }
    const auto rows = emit_timeseries(snaps, [](const EpidemicProtocol::State& s) { return s.message ? 1 : 0; });
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.min, 1.0);
        EXPECT_EQ(r.mean, 1.0);
        EXPECT_EQ(r.max, 1.0);
    }
    EXPECT_TRUE(emit_timeseries(std::vector<Snapshot<EpidemicProtocol>>{}, [](const auto&) { return 0; }).empty());
}

TEST(Series, CsvFormat) {
    std::ostringstream out;
    write_csv(out, {"n", "x"}, {{10, 1.0 / 3.0}, {1e7, 2}}, "protocol: epidemic\nseed: 1");
    EXPECT_EQ(out.str(), "# protocol: epidemic\n# seed: 1\nn,x\n10,0.333333\n1e+07,2\n");
    EXPECT_EQ(format_number(123456789.0), "1.23457e+08");
}

TEST(Series, SvgCarriesConfig) {
    std::ostringstream out;
    write_series_svg(out, {{0, 0, 1, 2}, {1, 1, 2, 3}}, "junta", "seed=5");
    const auto s = out.str();
    EXPECT_NE(s.find("<svg"), std::string::npos);
    EXPECT_NE(s.find("<desc>seed=5</desc>"), std::string::npos);
    EXPECT_NE(s.find("</svg>"), std::string::npos);
}
