#include "popmsg/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "popmsg/basic_protocols.hpp"
#include "popmsg/junta.hpp"
#include "popmsg/trials.hpp"

namespace popmsg::analysis {

double percentile(std::vector<double> xs, double q) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const double rank = std::ceil(std::clamp(q, 0.0, 1.0) * static_cast<double>(xs.size()));
    const std::size_t k = rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
    return xs[std::min(k, xs.size() - 1)];
}

Stats summarize(const std::vector<double>& xs) {
    Stats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    s.min = *lo;
    s.max = *hi;
    s.p50 = percentile(xs, 0.5);
    s.p90 = percentile(xs, 0.9);
    s.p99 = percentile(xs, 0.99);
    return s;
}

void TrialBatch::resummarize() {
    std::vector<double> inter;
    std::vector<double> val;
    failures = 0;
    for (const auto& t : trials) {
        inter.push_back(static_cast<double>(t.interactions));
        val.push_back(t.value);
        failures += t.failed ? 1 : 0;
    }
    interactions = summarize(inter);
    value = summarize(val);
}

double harmonic(std::uint64_t k) {
    double h = 0.0;
    for (std::uint64_t i = k; i >= 1; --i) h += 1.0 / static_cast<double>(i);
    return h;
}

std::uint64_t epidemic_time(std::size_t n, SchedulerRng& rng) {
    EpidemicProtocol proto;
    std::vector<bool> in(n, false);
    in[0] = true;
    auto config = make_configuration(proto, in);
    std::size_t infected = 1;
    while (infected < n) {
        const auto [i, j] = rng.draw_pair(n);
        const bool before = config.agents[i].message != config.agents[j].message;
        interact(config.agents, i, j, proto);
        ++config.interactions;
        if (before) ++infected;
    }
    return config.interactions;
}

double epidemic_expectation(std::size_t n) { return static_cast<double>(n - 1) * harmonic(n - 1); }

double epidemic_tail_bound(std::size_t n, double delta) {
    const double dn = static_cast<double>(n);
    return 2.5 * std::log(dn) * std::pow(dn, -2.0 * delta);
}

EpidemicSummary epidemic_stats(std::size_t n, std::size_t trials, std::uint64_t seed, unsigned jobs) {
    EpidemicSummary s;
    s.n = n;
    s.trials = trials;
    s.samples = run_trials(seed_range(seed, trials), jobs, [n](std::uint64_t sd) {
        SchedulerRng rng(sd);
        return epidemic_time(n, rng);
    });
    if (trials == 0) return s;
    const double e = epidemic_expectation(n);
    double sum = 0.0;
    std::size_t half = 0;
    std::size_t one = 0;
    for (auto t : s.samples) {
        const double x = static_cast<double>(t);
        sum += x;
        half += x > 1.5 * e ? 1 : 0;
        one += x > 2.0 * e ? 1 : 0;
    }
    s.mean = sum / static_cast<double>(trials);
    s.tail_half = static_cast<double>(half) / static_cast<double>(trials);
    s.tail_one = static_cast<double>(one) / static_cast<double>(trials);
    return s;
}

PartialEpidemicSummary partial_epidemic_stats(std::size_t n, double alpha, double gamma, std::size_t trials,
                                              std::uint64_t seed, unsigned jobs) {
    PartialEpidemicSummary s;
    s.n = n;
    s.infected = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(alpha * static_cast<double>(n))));
    s.susceptible = static_cast<std::size_t>(std::llround(gamma * static_cast<double>(n)));
    if (s.infected + s.susceptible > n) s.susceptible = n - s.infected;
    const std::size_t a = s.infected;
    const std::size_t b = s.susceptible;
    const double dn = static_cast<double>(n);
    s.expectation = dn * (dn - 1.0) / static_cast<double>(a + b) * (harmonic(b) - harmonic(a - 1));
    s.bound = 5.0 / gamma * dn * std::log(gamma / alpha);

    const auto samples = run_trials(seed_range(seed, trials), jobs, [=](std::uint64_t sd) {
        SchedulerRng rng(sd);
        // 0 idle, 1 susceptible, 2 infected.
        std::vector<std::uint8_t> st(n, 0);
        for (std::size_t k = 0; k < a; ++k) st[k] = 2;
        for (std::size_t k = a; k < a + b; ++k) st[k] = 1;
        std::size_t infected = a;
        std::uint64_t t = 0;
        while (infected < b + 1) {
            const auto [i, j] = rng.draw_pair(n);
            ++t;
            if ((st[i] == 2 && st[j] == 1) || (st[i] == 1 && st[j] == 2)) {
                st[i] = st[j] = 2;
                ++infected;
            }
        }
        return t;
    });
    double sum = 0.0;
    std::size_t above = 0;
    for (auto t : samples) {
        sum += static_cast<double>(t);
        above += static_cast<double>(t) > s.bound ? 1 : 0;
    }
    if (trials > 0) {
        s.mean = sum / static_cast<double>(trials);
        s.above_bound = static_cast<double>(above) / static_cast<double>(trials);
    }
    return s;
}

std::int64_t max_drift(std::size_t n, std::uint64_t m, SchedulerRng& rng) {
    std::int64_t ci = 0;
    std::int64_t cj = 0;
    std::int64_t best = 0;
    while (static_cast<std::uint64_t>(ci + cj) < m) {
        const auto [a, b] = rng.draw_pair(n);
        if (a == 0 || b == 0) ++ci;
        if (a == 1 || b == 1) ++cj;
        best = std::max(best, ci - cj);
    }
    return best;
}

DriftSummary drift_stats(std::size_t n, std::uint64_t m, std::uint64_t b, std::size_t trials, std::uint64_t seed,
                         unsigned jobs) {
    DriftSummary s;
    s.n = n;
    s.m = m;
    s.b = b;
    s.trials = trials;
    const auto drifts = run_trials(seed_range(seed, trials), jobs, [n, m](std::uint64_t sd) {
        SchedulerRng rng(sd);
        return max_drift(n, m, rng);
    });
    for (auto d : drifts) s.exceeded += d > static_cast<std::int64_t>(b) ? 1 : 0;
    s.frequency = trials ? static_cast<double>(s.exceeded) / static_cast<double>(trials) : 0.0;
    s.bound = m == 0 ? 1.0 : std::min(1.0, std::exp(-static_cast<double>(b * b) / (2.0 * static_cast<double>(m))));
    s.sigma = trials ? std::sqrt(s.bound * (1.0 - s.bound) / static_cast<double>(trials)) : 0.0;
    return s;
}

ThresholdSummary threshold_stats(std::size_t n, std::uint64_t mu, std::uint64_t l, std::uint64_t h,
                                 std::size_t trials, std::uint64_t seed, unsigned jobs) {
    ThresholdSummary s;
    s.n = n;
    s.mu = static_cast<double>(mu);
    s.l = static_cast<double>(l);
    s.h = static_cast<double>(h);
    const double dn = static_cast<double>(n);
    s.eps_low = 2.0 * std::sqrt(2.0 * std::log(dn) / dn) + std::exp(-s.l * s.l / (2.0 * s.mu));
    s.eps_high = 2.0 * std::sqrt(2.0 * std::log(dn) / dn) + std::exp(-s.h * s.h / (3.0 * s.mu));
    s.none_low_bound = std::max(0.0, 1.0 - dn * std::exp(-s.l * s.l / (2.0 * s.mu)));
    s.none_high_bound = std::max(0.0, 1.0 - dn * std::exp(-s.h * s.h / (3.0 * s.mu)));

    struct Counts {
        std::size_t low = 0;
        std::size_t high = 0;
    };
    const std::uint64_t steps = static_cast<std::uint64_t>(n) * mu / 2;
    const auto res = run_trials(seed_range(seed, trials), jobs, [=](std::uint64_t sd) {
        SchedulerRng rng(sd);
        std::vector<std::uint64_t> c(n, 0);
        for (std::uint64_t t = 0; t < steps; ++t) {
            const auto [i, j] = rng.draw_pair(n);
            ++c[i];
            ++c[j];
        }
        Counts out;
        for (auto x : c) {
            out.low += x + l < mu ? 1 : 0;
            out.high += x > mu + h ? 1 : 0;
        }
        return out;
    });
    double lo = 0.0;
    double hi = 0.0;
    std::size_t none_lo = 0;
    std::size_t none_hi = 0;
    for (const auto& r : res) {
        lo += static_cast<double>(r.low) / dn;
        hi += static_cast<double>(r.high) / dn;
        none_lo += r.low == 0 ? 1 : 0;
        none_hi += r.high == 0 ? 1 : 0;
    }
    if (trials > 0) {
        const double t = static_cast<double>(trials);
        s.mean_low_fraction = lo / t;
        s.mean_high_fraction = hi / t;
        s.none_low = static_cast<double>(none_lo) / t;
        s.none_high = static_cast<double>(none_hi) / t;
    }
    return s;
}

double level_probability(unsigned i) {
    if (i == 0) return 0.5;
    if (i > 7) return 0.0;
    const double lo = std::ldexp(1.0, -static_cast<int>(1u << (i - 1)));
    const double hi = std::ldexp(1.0, -static_cast<int>(1u << i));
    return lo - hi;
}

LevelBand level_band(std::uint64_t n, unsigned i) {
    const double dn = static_cast<double>(n);
    const int e = static_cast<int>(1u << (i - 1));
    return {std::ldexp(dn, -(e + 2)), std::ldexp(dn, -e)};
}

unsigned checked_levels(std::uint64_t n) {
    if (n < 4) return 0;
    return static_cast<unsigned>(std::floor(std::log2(std::log2(static_cast<double>(n)))));
}

LevelHistogram level_histogram(std::uint64_t n, std::size_t trials, std::uint64_t seed, unsigned jobs) {
    LevelHistogram h;
    h.n = n;
    h.trials = trials;
    h.levels_checked = checked_levels(n);
    h.admissible_max = junta::admissible_door_rounds(n);
    h.counts = run_trials(seed_range(seed, trials), jobs, [n](std::uint64_t sd) {
        InitRng rng(sd);
        std::vector<std::uint64_t> c;
        for (std::uint64_t k = 0; k < n; ++k) {
            const unsigned lv = junta::sample_level(rng);
            if (c.size() <= lv) c.resize(lv + 1, 0);
            ++c[lv];
        }
        return c;
    });
    std::size_t width = h.levels_checked + 1;
    for (const auto& c : h.counts) width = std::max(width, c.size());
    h.mean_counts.assign(width, 0.0);
    for (auto& c : h.counts) {
        c.resize(width, 0);
        for (std::size_t i = 0; i < width; ++i) h.mean_counts[i] += static_cast<double>(c[i]);
        bool bad = false;
        for (unsigned i = 1; i <= h.levels_checked; ++i) {
            const auto band = level_band(n, i);
            const double e = static_cast<double>(c[i]);
            if (!(band.lower < e && e < band.upper)) bad = true;
        }
        h.trial_violates.push_back(bad);
        h.violating_trials += bad ? 1 : 0;
        unsigned top = 0;
        for (std::size_t i = 0; i < width; ++i)
            if (c[i] > 0) top = static_cast<unsigned>(i);
        h.max_levels.push_back(top);
        if (std::find(h.admissible_max.begin(), h.admissible_max.end(), top) != h.admissible_max.end())
            ++h.max_in_admissible;
    }
    if (trials > 0)
        for (auto& m : h.mean_counts) m /= static_cast<double>(trials);
    return h;
}

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

namespace {

void write_comment(std::ostream& out, std::string_view config) {
    if (config.empty()) return;
    std::size_t pos = 0;
    while (pos <= config.size()) {
        const auto end = config.find('\n', pos);
        const auto line = config.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        if (!line.empty()) out << "# " << line << '\n';
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows, std::string_view config) {
    write_comment(out, config);
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << format_number(r[k]);
        out << '\n';
    }
}

void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows, std::string_view config) {
    std::vector<std::vector<double>> table;
    table.reserve(rows.size());
    for (const auto& r : rows) table.push_back({r.parallel_time, r.min, r.mean, r.max});
    write_csv(out, {"parallel_time", "min", "mean", "max"}, table, config);
}

void write_series_svg(std::ostream& out, const std::vector<SeriesRow>& rows, std::string_view title,
                      std::string_view config) {
    constexpr double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!rows.empty()) {
        x0 = rows.front().parallel_time;
        x1 = rows.back().parallel_time;
        y0 = rows.front().min;
        y1 = rows.front().max;
        for (const auto& r : rows) {
            y0 = std::min(y0, r.min);
            y1 = std::max(y1, r.max);
        }
    }
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
        << W << ' ' << H << "\">\n";
    out << "<title>" << xml_escape(title) << "</title>\n";
    if (!config.empty()) out << "<desc>" << xml_escape(config) << "</desc>\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << T / 2 + 5 << "\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(title) << "</text>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">parallel time</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0;
        const double yv = y0 + (y1 - y0) * k / 4.0;
        out << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
            << format_number(xv) << "</text>\n";
        out << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
            << format_number(yv) << "</text>\n";
    }
    struct Line {
        const char* name;
        const char* color;
        double SeriesRow::*field;
    };
    const Line lines[] = {{"max", "#c0392b", &SeriesRow::max},
                          {"mean", "#2c3e50", &SeriesRow::mean},
                          {"min", "#2980b9", &SeriesRow::min}};
    int legend = 0;
    for (const auto& ln : lines) {
        out << "<polyline fill=\"none\" stroke=\"" << ln.color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& r : rows) out << format_number(px(r.parallel_time)) << ',' << format_number(py(r.*ln.field)) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << W - R - 40 << "\" y=\"" << T + 14 * (legend++) << "\" font-size=\"11\" fill=\""
            << ln.color << "\">" << ln.name << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace popmsg::analysis
