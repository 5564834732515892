#pragma once

// Monte Carlo validators for the scheduler drift bound and level distribution, plus
// time-series tables with CSV and SVG writers.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "popmsg/runner.hpp"

namespace popmsg::analysis {

struct Stats {
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    double p99 = 0.0;
    friend bool operator==(const Stats&, const Stats&) = default;
};

/// Nearest-rank percentile, q in [0, 1]. Empty input gives 0.
double percentile(std::vector<double> xs, double q);
Stats summarize(const std::vector<double>& xs);

/// One trial of a batch.
struct TrialMetrics {
    std::uint64_t seed = 0;
    std::uint64_t interactions = 0;
    std::optional<std::uint64_t> converged_at;
    bool failed = false;
    /// Protocol-specific scalar (population estimate, junta size, ...).
    double value = 0.0;
};

struct TrialBatch {
    std::string protocol;
    std::uint64_t n = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<TrialMetrics> trials;
    Stats interactions;
    Stats value;
    std::size_t failures = 0;

    /// Recomputes the summaries from `trials`.
    void resummarize();
};

double harmonic(std::uint64_t k);

/// Interactions until a single infection reaches all n agents.
std::uint64_t epidemic_time(std::size_t n, SchedulerRng& rng);

struct EpidemicSummary {
    std::size_t n = 0;
    std::size_t trials = 0;
    double mean = 0.0;
    /// Fraction of trials with T > (1 + delta) E[T], delta = 0.5 and 1.
    double tail_half = 0.0;
    double tail_one = 0.0;
    std::vector<std::uint64_t> samples;
};

/// E[T] = (n-1) H_{n-1}.
double epidemic_expectation(std::size_t n);
/// 2.5 ln(n) n^{-2 delta}.
double epidemic_tail_bound(std::size_t n, double delta);
EpidemicSummary epidemic_stats(std::size_t n, std::size_t trials, std::uint64_t seed, unsigned jobs = 1);

/// Two-way epidemic among a = alpha n infected and b = gamma n susceptible
/// agents, the rest idle; interactions until b + 1 are infected.
struct PartialEpidemicSummary {
    std::size_t n = 0;
    std::size_t infected = 0;
    std::size_t susceptible = 0;
    double mean = 0.0;
    /// n(n-1)/(a+b) (H_b - H_{a-1}).
    double expectation = 0.0;
    /// (5/gamma) n ln(gamma/alpha).
    double bound = 0.0;
    double above_bound = 0.0;
};
PartialEpidemicSummary partial_epidemic_stats(std::size_t n, double alpha, double gamma, std::size_t trials,
                                              std::uint64_t seed, unsigned jobs = 1);

struct DriftSummary {
    std::size_t n = 0;
    std::uint64_t m = 0;
    std::uint64_t b = 0;
    std::size_t trials = 0;
    std::size_t exceeded = 0;
    double frequency = 0.0;
    /// exp(-b^2 / 2m).
    double bound = 0.0;
    /// Binomial standard deviation at the bound.
    double sigma = 0.0;
    [[nodiscard]] bool within(double sigmas = 3.0) const { return frequency <= bound + sigmas * sigma; }
};

/// Largest C_i - C_j over the steps until C_i + C_j reaches m, for agents 0
/// and 1 under the uniform scheduler.
std::int64_t max_drift(std::size_t n, std::uint64_t m, SchedulerRng& rng);
DriftSummary drift_stats(std::size_t n, std::uint64_t m, std::uint64_t b, std::size_t trials, std::uint64_t seed,
                         unsigned jobs = 1);

/// Agents below mu - l and above mu + h after n mu / 2 interactions.
struct ThresholdSummary {
    std::size_t n = 0;
    double mu = 0.0;
    double l = 0.0;
    double h = 0.0;
    double mean_low_fraction = 0.0;
    double mean_high_fraction = 0.0;
    double eps_low = 0.0;
    double eps_high = 0.0;
    double none_low = 0.0;
    double none_high = 0.0;
    /// 1 - n exp(-l^2 / 2mu) and 1 - n exp(-h^2 / 3mu), clamped at 0.
    double none_low_bound = 0.0;
    double none_high_bound = 0.0;
};
ThresholdSummary threshold_stats(std::size_t n, std::uint64_t mu, std::uint64_t l, std::uint64_t h,
                                 std::size_t trials, std::uint64_t seed, unsigned jobs = 1);

/// Pr[level = i] for the geometric level draw.
double level_probability(unsigned i);

struct LevelBand {
    double lower = 0.0;
    double upper = 0.0;
};
/// (n / 2^{2^{i-1}+2}, n / 2^{2^{i-1}}) for i >= 1.
LevelBand level_band(std::uint64_t n, unsigned i);
/// floor(log2 log2 n): the levels whose band is checked.
unsigned checked_levels(std::uint64_t n);

struct LevelHistogram {
    std::uint64_t n = 0;
    std::size_t trials = 0;
    unsigned levels_checked = 0;
    /// counts[t][i]: agents at level i in trial t.
    std::vector<std::vector<std::uint64_t>> counts;
    std::vector<double> mean_counts;
    std::vector<bool> trial_violates;
    std::size_t violating_trials = 0;
    /// max_levels[t]: highest level in trial t.
    std::vector<unsigned> max_levels;
    std::vector<unsigned> admissible_max;
    std::size_t max_in_admissible = 0;
};
LevelHistogram level_histogram(std::uint64_t n, std::size_t trials, std::uint64_t seed, unsigned jobs = 1);

struct SeriesRow {
    double parallel_time = 0.0;
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

/// (parallel time, min, mean, max) of a per-agent field over snapshots.
template <class P, class Field>
std::vector<SeriesRow> emit_timeseries(const std::vector<Snapshot<P>>& snapshots, Field field) {
    std::vector<SeriesRow> rows;
    rows.reserve(snapshots.size());
    for (const auto& s : snapshots) {
        SeriesRow r;
        r.parallel_time = s.parallel_time;
        if (!s.agents.empty()) {
            r.min = std::numeric_limits<double>::infinity();
            r.max = -std::numeric_limits<double>::infinity();
            double sum = 0.0;
            for (const auto& a : s.agents) {
                const double v = static_cast<double>(field(a));
                r.min = std::min(r.min, v);
                r.max = std::max(r.max, v);
                sum += v;
            }
            r.mean = sum / static_cast<double>(s.agents.size());
        }
        rows.push_back(r);
    }
    return rows;
}

/// Six significant digits.
std::string format_number(double x);

/// Comment lines "# ..." carrying `config` (one per line), then the header and
/// rows.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows, std::string_view config = {});
void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows, std::string_view config = {});

/// Standalone SVG line chart of min/mean/max; `config` goes into <desc>.
void write_series_svg(std::ostream& out, const std::vector<SeriesRow>& rows, std::string_view title,
                      std::string_view config = {});

}  // namespace popmsg::analysis
