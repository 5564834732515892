#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "popmsg/cli/cli.hpp"
#include "popmsg/popmsg.hpp"

namespace popmsg::cli {

using nlohmann::json;

namespace {

double lnn(std::uint64_t n) { return std::log(static_cast<double>(std::max<std::uint64_t>(n, 2))); }

std::uint64_t default_budget(const std::string& protocol, std::uint64_t n) {
    const double dn = static_cast<double>(n);
    if (protocol == "epidemic") return static_cast<std::uint64_t>(100.0 * dn * lnn(n)) + 1000;
    if (protocol == "junta") return 10000 * n;
    if (protocol == "counting") return 100000 * n;
    if (protocol == "sce") return static_cast<std::uint64_t>(20.0 * dn * dn * lnn(n));
    if (protocol == "balls" || protocol == "fratricide")
        return static_cast<std::uint64_t>(50.0 * dn * dn * lnn(n)) + 10000;
    if (protocol.rfind("wrap-", 0) == 0) return 100 * n * n * n + 100000;
    return 20'000'000'000ULL;
}

template <class T>
T param(const ExperimentConfig& cfg, const std::string& key, T fallback) {
    if (!cfg.params.contains(key)) return fallback;
    try {
        return cfg.params.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("parameter '" + key + "' has the wrong type");
    }
}

struct Setup {
    std::uint64_t n;
    std::uint64_t seed;
    std::uint64_t budget;
    RunOptions opt;
};

Setup make_setup(const ExperimentConfig& cfg, std::uint64_t n, std::uint64_t seed) {
    if (n < 2) throw ConfigError("population size must be at least 2");
    Setup s{n, seed, cfg.budget.value_or(default_budget(cfg.protocol, n)), {}};
    s.opt.budget = s.budget;
    if (cfg.stride > 0) {
        s.opt.capture_snapshots = true;
        s.opt.snapshot_stride = cfg.stride;
    }
    return s;
}

template <class P>
void fill(RunResult& r, const ExecutionReport<P>& rep) {
    r.interactions = rep.interactions;
    r.parallel_time = rep.parallel_time.value();
}

// Scheduler and initial-state streams are derived from the same seed but kept
// apart so the scheduler draws do not depend on how many init draws happened.
constexpr std::uint64_t kInitSalt = 0x9e3779b97f4a7c15ULL;

RunResult run_epidemic(const ExperimentConfig&, const Setup& s) {
    EpidemicProtocol p;
    std::vector<bool> in(s.n, false);
    in[0] = true;
    auto c = make_configuration(p, in, s.seed ^ kInitSalt);
    SchedulerRng rng(s.seed);
    std::size_t infected = 1;
    struct Count {
        std::size_t* infected;
        std::size_t n;
        bool before[2] = {false, false};
        void reset(const Configuration<EpidemicProtocol>&) {}
        void before_step(const Configuration<EpidemicProtocol>& c, std::size_t i, std::size_t j) {
            before[0] = c.agents[i].message;
            before[1] = c.agents[j].message;
        }
        void after_step(const Configuration<EpidemicProtocol>& c, std::size_t i, std::size_t j) {
            *infected += (c.agents[i].message && !before[0]) + (c.agents[j].message && !before[1]);
        }
        bool done() const { return *infected == n; }
    } mon{&infected, s.n};
    auto rep = run_until(c, p, mon, rng, s.opt);
    RunResult r;
    fill(r, rep);
    r.converged = rep.stopped;
    r.value = static_cast<double>(rep.interactions);
    r.details["infected"] = infected;
    r.details["expected_interactions"] = analysis::epidemic_expectation(s.n);
    r.series = analysis::emit_timeseries(rep.snapshots, [](const auto& a) { return a.message ? 1.0 : 0.0; });
    return r;
}

RunResult run_junta(const ExperimentConfig& cfg, const Setup& s) {
    const auto base = param<unsigned>(cfg, "base", 2);
    const auto scale = param<std::uint64_t>(cfg, "scale", 16);
    junta::JuntaProtocol<> p(junta::IntervalSchedule(base, scale));
    auto c = make_configuration(p, std::vector<Empty>(s.n), s.seed ^ kInitSalt);
    SchedulerRng rng(s.seed);
    junta::HaltMonitor mon(p);
    auto rep = run_until(c, p, mon, rng, s.opt);
    const auto o = junta::summarize_outcome(p, c);
    const auto adm = junta::admissible_door_rounds(s.n);
    const bool admissible = std::find(adm.begin(), adm.end(), o.door_round) != adm.end();
    RunResult r;
    fill(r, rep);
    r.converged = rep.stopped && o.common_door;
    r.value = static_cast<double>(o.junta_size);
    r.details = {{"all_halted", o.all_halted},    {"common_door", o.common_door},
                 {"door_round", o.door_round},    {"admissible_rounds", adm},
                 {"admissible", admissible},      {"junta_size", o.junta_size},
                 {"max_level", o.max_level},      {"count", o.max_count}};
    r.series = analysis::emit_timeseries(rep.snapshots, [](const junta::Summary& a) { return a.count; });
    return r;
}

RunResult run_counting(const ExperimentConfig& cfg, const Setup& s) {
    counting::Params params;
    params.m = param<unsigned>(cfg, "m", 16);
    params.symbols = param<unsigned>(cfg, "symbols", 1);
    std::vector<std::uint8_t> syms;
    if (cfg.params.contains("inputs")) {
        const auto v = param<std::vector<unsigned>>(cfg, "inputs", {});
        if (v.size() != s.n - 1) throw ConfigError("'inputs' needs one symbol per follower (n - 1 entries)");
        for (unsigned x : v) syms.push_back(static_cast<std::uint8_t>(x));
    } else if (params.symbols > 1) {
        for (std::uint64_t k = 1; k < s.n; ++k) syms.push_back(static_cast<std::uint8_t>(k % params.symbols));
    }
    std::unique_ptr<counting::CountingProtocol> pp;
    std::vector<counting::Input> in;
    try {
        pp = std::make_unique<counting::CountingProtocol>(params);
        in = counting::leader_inputs(s.n, syms);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto& p = *pp;
    auto c = make_configuration(p, in, s.seed ^ kInitSalt);
    SchedulerRng rng(s.seed);
    counting::CountingMonitor mon;
    auto rep = run_until(c, p, mon, rng, s.opt);

    std::vector<std::uint64_t> expected(params.symbols > 1 ? params.symbols : 0, 0);
    for (const auto& x : in)
        if (!x.leader && !expected.empty()) ++expected[x.symbol];
    bool correct = mon.all_terminated();
    for (const auto& a : c.agents)
        correct = correct && a.internal.population == s.n && a.internal.counts == expected;
    const auto& lead = c.agents[0].internal;
    RunResult r;
    fill(r, rep);
    r.converged = correct;
    r.violation = mon.any_failed();
    if (r.violation) r.message = "clock desynchronization detected";
    r.value = lead.population ? static_cast<double>(*lead.population) : 0.0;
    r.details["terminated"] = mon.all_terminated();
    r.details["population"] = lead.population ? json(*lead.population) : json(nullptr);
    r.details["log2_population"] = lead.log2_population ? json(*lead.log2_population) : json(nullptr);
    r.details["counts"] = lead.counts;
    r.details["expected_counts"] = expected;
    r.series = analysis::emit_timeseries(rep.snapshots, [](const counting::Summary& a) { return a.lower; });
    return r;
}

RunResult run_sce(const ExperimentConfig&, const Setup& s) {
    using S = stable::SceProtocol<LeaderBitBroadcast>;
    S p;
    std::mt19937_64 bits(s.seed ^ kInitSalt);
    std::vector<bool> in(s.n);
    for (std::uint64_t k = 0; k < s.n; ++k) in[k] = (bits() & 1u) != 0;
    auto c = make_configuration(p, std::vector<S::Input>(in.begin(), in.end()), s.seed ^ kInitSalt);
    SchedulerRng rng(s.seed);
    auto opt = s.opt;
    opt.check_stride = s.n;
    auto rep = run_until(c, p, NeverStop{}, rng, opt);
    const auto est = stable::leader_estimate(c);
    std::optional<bool> leader_bit;
    for (std::size_t k = 0; k < c.size(); ++k)
        if (c.agents[k].message.role == stable::SceRole::leader) leader_bit = c.agents[k].internal.input;
    bool outputs_ok = est.has_value() && leader_bit.has_value();
    for (const auto& a : c.agents) outputs_ok = outputs_ok && p.output(a) == leader_bit;
    RunResult r;
    fill(r, rep);
    r.converged = outputs_ok && est == s.n - 1;
    r.value = est ? static_cast<double>(*est) : 0.0;
    r.details["leader_estimate"] = est ? json(*est) : json(nullptr);
    r.details["outputs_agree"] = outputs_ok;
    r.series = analysis::emit_timeseries(rep.snapshots, [](const S::State& a) {
        return a.message.role == stable::SceRole::leader ? 1.0 : 0.0;
    });
    return r;
}

RunResult run_balls(const ExperimentConfig& cfg, const Setup& s) {
    const auto unit = param<std::uint32_t>(cfg, "c", 3);
    if (unit < 1) throw ConfigError("'c' must be positive");
    stable::BallsProtocol p(unit);
    auto c = make_configuration(p, std::vector<Empty>(s.n), s.seed ^ kInitSalt);
    SchedulerRng rng(s.seed);
    const std::uint64_t want = p.stable_leader_count(s.n);
    const bool bit = p.predicate(s.n);
    auto stable_now = [&](const Configuration<stable::BallsProtocol>& cc) {
        std::uint64_t leaders = 0;
        std::uint64_t balls = 0;
        for (const auto& a : cc.agents) {
            if (a.message.bit != bit) return false;
            if (a.message.leader) {
                ++leaders;
                balls = a.internal.k;
            }
        }
        return leaders == 1 && balls == want;
    };
    auto opt = s.opt;
    opt.check_stride = s.n;
    auto rep = run_until(c, p, stable_now, rng, opt);
    std::uint64_t leaders = 0;
    std::uint64_t balls = 0;
    for (const auto& a : c.agents)
        if (a.message.leader) {
            ++leaders;
            balls = a.internal.k;
        }
    RunResult r;
    fill(r, rep);
    r.converged = rep.stopped;
    r.value = static_cast<double>(balls);
    r.details = {{"leaders", leaders}, {"leader_balls", balls}, {"expected_leader_balls", want}, {"predicate", bit}};
    r.series = analysis::emit_timeseries(rep.snapshots, [](const auto& a) { return a.message.leader ? 1.0 : 0.0; });
    return r;
}


RunResult run_fratricide(const ExperimentConfig&, const Setup& s) {
    FratricideProtocol p;
    auto c = make_configuration(p, std::vector<bool>(s.n, true), s.seed ^ kInitSalt);
    SchedulerRng rng(s.seed);
    auto one_leader = [](const Configuration<FratricideProtocol>& cc) {
        return std::count_if(cc.agents.begin(), cc.agents.end(), [](const auto& a) { return a.message; }) == 1;
    };
    auto opt = s.opt;
    opt.check_stride = s.n;
    auto rep = run_until(c, p, one_leader, rng, opt);
    RunResult r;
    fill(r, rep);
    r.converged = rep.stopped;
    r.value = static_cast<double>(
        std::count_if(c.agents.begin(), c.agents.end(), [](const auto& a) { return a.message; }));
    r.details["leaders"] = r.value;
    r.series = analysis::emit_timeseries(rep.snapshots, [](const auto& a) { return a.message ? 1.0 : 0.0; });
    return r;
}

template <class P>
RunResult run_wrapped(const Setup& s, const P& inner, std::vector<typename P::Input> inputs,
                      const std::function<bool(const std::vector<typename P::State>&)>& done) {
    stable::OpenWrap<P> w(inner);
    std::vector<stable::WrapInput<P>> in(s.n);
    for (std::size_t k = 0; k < s.n; ++k) in[k] = {inputs[k], k == 0};
    auto c = make_configuration(w, in, s.seed ^ kInitSalt);
    SchedulerRng rng(s.seed);
    stable::TransitionCounter counter;
    auto opt = s.opt;
    opt.check_stride = s.n;
    auto rep = run_until(c, w, [&](const Configuration<stable::OpenWrap<P>>& cc) { return done(w.project(cc)); },
                         rng, opt);
    RunResult r;
    fill(r, rep);
    r.converged = rep.stopped;
    std::size_t leaders = 0;
    for (const auto& a : c.agents) leaders += a.message.leader ? 1 : 0;
    r.details["wrap_leaders"] = leaders;
    r.details["message_bits"] = w.width();
    r.series = analysis::emit_timeseries(rep.snapshots, [](const auto& a) { return a.message.token ? 1.0 : 0.0; });
    return r;
}

RunResult run_wrap_epidemic(const ExperimentConfig&, const Setup& s) {
    std::vector<bool> in(s.n, false);
    in[s.n - 1] = true;
    auto r = run_wrapped<EpidemicProtocol>(s, {}, {in.begin(), in.end()}, [](const auto& ps) {
        return std::all_of(ps.begin(), ps.end(), [](const auto& a) { return a.message; });
    });
    r.value = r.parallel_time;
    return r;
}

RunResult run_wrap_fratricide(const ExperimentConfig&, const Setup& s) {
    std::vector<bool> in(s.n, true);
    auto r = run_wrapped<FratricideProtocol>(s, {}, {in.begin(), in.end()}, [](const auto& ps) {
        return std::count_if(ps.begin(), ps.end(), [](const auto& a) { return a.message; }) == 1;
    });
    r.value = r.parallel_time;
    return r;
}

broadcast::RoundSchedule schedule_param(const ExperimentConfig& cfg, const std::string& shape_default,
                                        std::uint64_t scale_default) {
    const auto shape = param<std::string>(cfg, "schedule", shape_default);
    const auto scale = param<std::uint64_t>(cfg, "scale", scale_default);
    if (scale < 1) throw ConfigError("'scale' must be positive");
    if (shape == "quadratic") return broadcast::RoundSchedule::quadratic(scale);
    if (shape == "linear") return broadcast::RoundSchedule::linear(scale);
    throw ConfigError("'schedule' must be \"quadratic\" or \"linear\"");
}

RunResult run_broadcast(const broadcast::BroadcastProtocol& p, const std::vector<std::uint64_t>& in,
                        std::uint64_t target, const ExperimentConfig& cfg, const Setup& s) {
    using broadcast::Config;
    auto c = make_configuration(p, in, s.seed ^ kInitSalt);
    broadcast::BroadcastMonitor mon(p, target);
    SchedulerRng rng(s.seed);
    auto opt = s.opt;
    opt.confirmation_tail = param<std::uint64_t>(cfg, "tail", 1'000'000);
    opt.check_stride = 1000;
    auto rep = run_until(c, p, mon, rng, opt, Correctness<broadcast::BroadcastProtocol>([&](const Config& cc) {
                             for (const auto& a : cc.agents)
                                 if (a.internal.ctl.output != target) return false;
                             return true;
                         }));
    RunResult r;
    fill(r, rep);
    r.converged = rep.converged_at.has_value();
    r.value = static_cast<double>(mon.rounds_completed());
    const auto lf = mon.last_failure_round();
    const auto leader = broadcast::unique_leader(c);
    r.details["target"] = target;
    r.details["converged_at"] = rep.converged_at ? json(*rep.converged_at) : json(nullptr);
    r.details["rounds"] = mon.rounds_completed();
    r.details["round_failures"] = mon.failures().size();
    r.details["last_failure_round"] = lf ? json(*lf) : json(nullptr);
    r.details["output_changes"] = mon.output_changes();
    r.details["restarts"] = leader ? json(c.agents[*leader].internal.ctl.restarts) : json(nullptr);
    r.series = analysis::emit_timeseries(rep.snapshots, [](const auto& a) { return a.r; });
    return r;
}

RunResult run_gather(const ExperimentConfig& cfg, const Setup& s) {
    const auto fname = param<std::string>(cfg, "function", "or");
    broadcast::GatherFn f;
    if (fname == "or")
        f = broadcast::gather_or();
    else if (fname == "count")
        f = broadcast::gather_count_ones();
    else if (fname == "max")
        f = broadcast::gather_max();
    else
        throw ConfigError("'function' must be one of or, count, max");
    std::vector<std::uint64_t> in(s.n, 0);
    if (cfg.params.contains("inputs")) {
        in = param<std::vector<std::uint64_t>>(cfg, "inputs", {});
        if (in.size() != s.n) throw ConfigError("'inputs' needs one value per agent");
    } else {
        in[s.seed % s.n] = 1;
    }
    auto p = broadcast::BroadcastProtocol::gather(f, schedule_param(cfg, "quadratic", 1));
    return run_broadcast(p, in, f(in), cfg, s);
}

RunResult run_tm(const ExperimentConfig& cfg, const Setup& s) {
    turing::TmSpec spec;
    try {
        if (cfg.params.contains("spec")) {
            std::ifstream f(param<std::string>(cfg, "spec", ""));
            if (!f) throw ConfigError("cannot open TM spec file");
            std::stringstream ss;
            ss << f.rdbuf();
            spec = turing::parse_tm_spec(ss.str());
        } else {
            spec = turing::unary_parity_tm();
        }
    } catch (const turing::TmParseError& e) {
        throw ConfigError(std::string("bad TM spec: ") + e.what());
    }
    const auto sym = spec.symbol_index(param<std::string>(cfg, "input", "1"));
    if (!sym) throw ConfigError("'input' is not a tape symbol of the machine");
    const auto coef = param<std::uint64_t>(cfg, "runtime", 4);
    // Reference verdict from a direct run on the same tape.
    const auto ref = turing::run_machine(spec, std::vector<std::uint32_t>(s.n - 1, *sym), coef * s.n * s.n);
    auto p = broadcast::BroadcastProtocol::turing(spec, schedule_param(cfg, "linear", 25),
                                                  [coef](std::uint64_t n) { return coef * n * n; });
    auto r = run_broadcast(p, broadcast::uniform_inputs(s.n, *sym), ref.result, cfg, s);
    r.details["reference_halted"] = ref.halted;
    r.details["reference_steps"] = ref.steps;
    r.details["result_symbol"] = spec.symbols.at(ref.result);
    return r;
}

using Runner = RunResult (*)(const ExperimentConfig&, const Setup&);

const std::map<std::string, Runner>& runners() {
    static const std::map<std::string, Runner> m = {
        {"epidemic", run_epidemic},         {"junta", run_junta},
        {"counting", run_counting},         {"sce", run_sce},
        {"balls", run_balls},               {"fratricide", run_fratricide},
        {"gather", run_gather},             {"tm", run_tm},
        {"wrap-epidemic", run_wrap_epidemic}, {"wrap-fratricide", run_wrap_fratricide},
    };
    return m;
}

}  // namespace

const std::vector<std::string>& run_protocols() {
    static const std::vector<std::string> v = [] {
        std::vector<std::string> out;
        for (const auto& [k, _] : runners()) out.push_back(k);
        return out;
    }();
    return v;
}

RunResult run_one(const ExperimentConfig& cfg, std::uint64_t n, std::uint64_t seed) {
    const auto it = runners().find(cfg.protocol);
    if (it == runners().end()) throw ConfigError("unknown protocol '" + cfg.protocol + "'");
    const auto s = make_setup(cfg, n, seed);
    RunResult r;
    try {
        r = it->second(cfg, s);
    } catch (const ProtocolViolation& e) {
        r.violation = true;
        r.message = e.what();
    }
    r.protocol = cfg.protocol;
    r.n = n;
    r.seed = seed;
    r.budget = s.budget;
    return r;
}

json to_json(const RunResult& r) {
    json j = {{"protocol", r.protocol},
              {"n", r.n},
              {"seed", r.seed},
              {"budget", r.budget},
              {"interactions", r.interactions},
              {"parallel_time", r.parallel_time},
              {"converged", r.converged},
              {"violation", r.violation},
              {"value", r.value},
              {"details", r.details}};
    if (!r.message.empty()) j["message"] = r.message;
    return j;
}

namespace {

class Logger {
public:
    explicit Logger(const std::string& path) {
        if (path.empty()) return;
        file_.open(path, std::ios::app);
        if (!file_) throw ConfigError("cannot open log file '" + path + "'");
    }
    void event(const std::string& kind, json payload) {
        if (!file_.is_open()) return;
        payload["event"] = kind;
        file_ << payload.dump() << '\n';
        file_.flush();
    }

private:
    std::ofstream file_;
};

std::ofstream open_output(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write '" + path + "'");
    return f;
}

void require_ns(const ExperimentConfig& cfg) {
    if (cfg.protocol.empty()) throw ConfigError("no protocol given");
    if (cfg.ns.empty()) throw ConfigError("no population size given");
}

}  // namespace

int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    require_ns(cfg);
    Logger log(cfg.log);
    const std::string config = cfg.to_json().dump();
    log.event("config", {{"config", cfg.to_json()}});
    json runs = json::array();
    int code = ok;
    const auto seeds = cfg.seed_list();
    for (const auto n : cfg.ns) {
        for (const auto seed : seeds) {
            const auto r = run_one(cfg, n, seed);
            auto j = to_json(r);
            log.event("result", j);
            runs.push_back(j);
            if (r.violation) {
                err << "violation: " << r.message << " (n=" << n << ", seed=" << seed << ")\n";
                code = std::max<int>(code, violation);
            } else if (!r.converged) {
                code = code == ok ? budget_exhausted : code;
            }
            if (!cfg.out.empty() && !r.series.empty()) {
                const std::string stem = cfg.out + "_n" + std::to_string(n) + "_s" + std::to_string(seed);
                auto csv = open_output(stem + ".csv");
                analysis::write_series_csv(csv, r.series, config);
                auto svg = open_output(stem + ".svg");
                analysis::write_series_svg(svg, r.series, cfg.protocol + " n=" + std::to_string(n), config);
            }
        }
    }
    const json report = {{"config", cfg.to_json()}, {"runs", runs}, {"exit_code", code}};
    if (!cfg.out.empty()) {
        auto f = open_output(cfg.out + ".report.json");
        f << report.dump(2) << '\n';
    }
    out << report.dump(2) << '\n';
    return code;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    require_ns(cfg);
    Logger log(cfg.log);
    log.event("config", {{"config", cfg.to_json()}});
    const auto seeds = cfg.seed_list();
    if (seeds.empty()) throw ConfigError("sweep needs at least one trial");
    const bool epidemic = cfg.protocol == "epidemic";

    std::vector<std::string> header = {"n",          "trials",         "converged",        "violations",
                                       "mean_interactions", "mean_parallel_time", "p50_parallel_time",
                                       "p90_parallel_time", "p99_parallel_time", "mean_value", "p99_value"};
    if (epidemic) {
        header.push_back("expected_interactions");
        header.push_back("relative_error");
    }
    std::vector<std::vector<double>> rows;
    json per_n = json::array();
    for (const auto n : cfg.ns) {
        const auto results = run_trials(seeds, cfg.jobs, [&](std::uint64_t seed) { return run_one(cfg, n, seed); });
        std::vector<double> inter, pt, val;
        std::size_t converged = 0, violations = 0;
        for (const auto& r : results) {
            log.event("result", to_json(r));
            if (r.violation) ++violations;
            if (!r.converged) continue;
            ++converged;
            inter.push_back(static_cast<double>(r.interactions));
            pt.push_back(r.parallel_time);
            val.push_back(r.value);
        }
        const auto si = analysis::summarize(inter);
        const auto sp = analysis::summarize(pt);
        const auto sv = analysis::summarize(val);
        std::vector<double> row = {static_cast<double>(n), static_cast<double>(results.size()),
                                   static_cast<double>(converged), static_cast<double>(violations),
                                   si.mean, sp.mean, sp.p50, sp.p90, sp.p99, sv.mean, sv.p99};
        json j = {{"n", n},
                  {"trials", results.size()},
                  {"converged", converged},
                  {"violations", violations},
                  {"success_rate", static_cast<double>(converged) / static_cast<double>(results.size())},
                  {"mean_interactions", si.mean},
                  {"parallel_time", {{"mean", sp.mean}, {"p50", sp.p50}, {"p90", sp.p90}, {"p99", sp.p99}}},
                  {"value", {{"mean", sv.mean}, {"p99", sv.p99}}}};
        if (epidemic) {
            const double e = analysis::epidemic_expectation(n);
            row.push_back(e);
            row.push_back(std::abs(si.mean - e) / e);
            j["expected_interactions"] = e;
            j["relative_error"] = row.back();
        }
        rows.push_back(std::move(row));
        per_n.push_back(std::move(j));
        if (violations > 0) err << "n=" << n << ": " << violations << " run(s) reported a violation\n";
    }
    const json report = {{"config", cfg.to_json()}, {"sweep", per_n}};
    if (!cfg.out.empty()) {
        auto f = open_output(cfg.out + ".report.json");
        f << report.dump(2) << '\n';
        auto csv = open_output(cfg.out + ".csv");
        analysis::write_csv(csv, header, rows, cfg.to_json().dump());
    }
    out << report.dump(2) << '\n';
    return ok;
}

namespace {

struct ReachOutcome {
    std::size_t configurations = 0;
    bool stably_correct = false;
    json extra = json::object();
};

template <class P>
ReachOutcome reach_of(const P& p, const std::vector<typename P::Input>& in,
                      const std::function<bool(const Multiset<P>&)>& correct, std::size_t cap) {
    const auto init = make_configuration(p, in, 0);
    ReachOutcome o;
    o.configurations = reachable_set(p, init, cap).size();
    o.stably_correct = check_stably_correct(p, init, correct, cap);
    return o;
}

template <class P>
ReachOutcome reach_wrapped(const P& inner, const std::vector<typename P::Input>& in,
                           const std::function<bool(const Multiset<P>&)>& correct, std::size_t cap) {
    using W = stable::OpenWrap<P>;
    W w(inner);
    std::vector<stable::WrapInput<P>> win(in.size());
    for (std::size_t k = 0; k < in.size(); ++k) win[k] = {in[k], k == 0};
    const auto direct = reachable_set(inner, make_configuration(inner, in, 0), cap);
    const auto init = make_configuration(w, win, 0);
    const auto wrapped = reachable_set(w, init, cap);
    std::set<Multiset<P>> projected;
    for (const auto& m : wrapped) {
        std::vector<typename P::State> ps;
        for (const auto& a : m) ps.push_back(a.internal.p);
        projected.insert(canonical<P>(std::move(ps)));
    }
    auto wrapped_correct = [&](const Multiset<W>& m) {
        std::vector<typename P::State> ps;
        for (const auto& a : m) ps.push_back(a.internal.p);
        return correct(canonical<P>(std::move(ps)));
    };
    ReachOutcome o;
    o.configurations = wrapped.size();
    o.stably_correct = check_stably_correct(w, init, std::function<bool(const Multiset<W>&)>(wrapped_correct), cap);
    o.extra = {{"direct_configurations", direct.size()},
               {"projected_configurations", projected.size()},
               {"projection_matches", projected == direct}};
    return o;
}

bool all_infected(const Multiset<EpidemicProtocol>& m) {
    return std::all_of(m.begin(), m.end(), [](const auto& a) { return a.message; });
}
bool one_leader(const Multiset<FratricideProtocol>& m) {
    return std::count_if(m.begin(), m.end(), [](const auto& a) { return a.message; }) == 1;
}

ReachOutcome reach_dispatch(const ExperimentConfig& cfg, std::uint64_t n) {
    if (n < 2) throw ConfigError("population size must be at least 2");
    const std::string& p = cfg.protocol;
    std::vector<bool> one_infected(n, false);
    one_infected[n - 1] = true;
    const std::vector<bool> all(n, true);
    if (p == "null")
        return reach_of<NullProtocol>({}, std::vector<std::uint8_t>(n, 0),
                                      [](const Multiset<NullProtocol>&) { return true; }, cfg.cap);
    if (p == "epidemic")
        return reach_of<EpidemicProtocol>({}, {one_infected.begin(), one_infected.end()}, all_infected, cfg.cap);
    if (p == "fratricide")
        return reach_of<FratricideProtocol>({}, {all.begin(), all.end()}, one_leader, cfg.cap);
    if (p == "fratricide3") {
        using T = ThreeStateFratricide;
        return reach_of<T>({}, std::vector<T::Kind>(n, T::Kind::leader),
                           [](const Multiset<T>& m) {
                               return std::count_if(m.begin(), m.end(),
                                                    [](const auto& a) { return a.message == T::Kind::leader; }) == 1;
                           },
                           cfg.cap);
    }
    if (p == "balls") {
        stable::BallsProtocol b(param<std::uint32_t>(cfg, "c", 3));
        const auto want = b.stable_leader_count(n);
        const bool bit = b.predicate(n);
        return reach_of<stable::BallsProtocol>(b, std::vector<Empty>(n),
                                               [&](const Multiset<stable::BallsProtocol>& m) {
                                                   std::uint64_t leaders = 0;
                                                   std::uint64_t balls = 0;
                                                   for (const auto& a : m) {
                                                       if (a.message.bit != bit) return false;
                                                       if (a.message.leader) {
                                                           ++leaders;
                                                           balls = a.internal.k;
                                                       }
                                                   }
                                                   return leaders == 1 && balls == want;
                                               },
                                               cfg.cap);
    }
    if (p == "wrap-epidemic")
        return reach_wrapped<EpidemicProtocol>({}, {one_infected.begin(), one_infected.end()}, all_infected, cfg.cap);
    if (p == "wrap-fratricide")
        return reach_wrapped<FratricideProtocol>({}, {all.begin(), all.end()}, one_leader, cfg.cap);
    throw ConfigError("unknown protocol for reach '" + p + "'");
}

}  // namespace

const std::vector<std::string>& reach_protocols() {
    static const std::vector<std::string> v = {"balls",       "epidemic",      "fratricide",     "fratricide3",
                                               "null",        "wrap-epidemic", "wrap-fratricide"};
    return v;
}

int cmd_reach(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    require_ns(cfg);
    Logger log(cfg.log);
    json results = json::array();
    int code = ok;
    for (const auto n : cfg.ns) {
        json j = {{"n", n}};
        try {
            const auto o = reach_dispatch(cfg, n);
            j["configurations"] = o.configurations;
            j["stably_correct"] = o.stably_correct;
            j.update(o.extra);
            if (!o.stably_correct) code = std::max<int>(code, violation);
        } catch (const ReachabilityOverflow& e) {
            err << e.what() << '\n';
            j["overflow"] = true;
            j["partial_configurations"] = e.partial_count();
            code = overflow;
        }
        log.event("reach", j);
        results.push_back(j);
        if (code == overflow) break;
    }
    const json report = {{"config", cfg.to_json()}, {"reach", results}, {"exit_code", code}};
    if (!cfg.out.empty()) {
        auto f = open_output(cfg.out + ".report.json");
        f << report.dump(2) << '\n';
    }
    out << report.dump(2) << '\n';
    return code;
}

}  // namespace popmsg::cli
