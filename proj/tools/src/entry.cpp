#include <algorithm>
#include <ostream>

#include "CLI11.hpp"
#include "popmsg/cli/cli.hpp"

namespace popmsg::cli {

namespace {

struct Flags {
    std::string config;
    std::string protocol;
    std::vector<std::uint64_t> ns;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds;
    std::size_t trials = 1;
    std::uint64_t budget = 0;
    double stride = 0.0;
    std::string out;
    unsigned jobs = 1;
    std::string log;
    std::size_t cap = 1000000;
    std::string params;
};

void add_flags(CLI::App& sub, Flags& f) {
    sub.add_option("--config", f.config, "JSON config file");
    sub.add_option("--protocol,-p", f.protocol, "protocol id");
    sub.add_option("--n,-n", f.ns, "population size(s)")->delimiter(',');
    sub.add_option("--seed", f.seed, "first seed");
    sub.add_option("--seeds", f.seeds, "explicit seed list")->delimiter(',');
    sub.add_option("--trials", f.trials, "number of seeds starting at --seed");
    sub.add_option("--budget", f.budget, "interaction budget per run");
    sub.add_option("--stride", f.stride, "snapshot stride in parallel time (0 = off)");
    sub.add_option("--out,-o", f.out, "output path prefix");
    sub.add_option("--jobs,-j", f.jobs, "worker threads for sweeps");
    sub.add_option("--log", f.log, "JSON-lines log file");
    sub.add_option("--cap", f.cap, "reachability configuration cap");
    sub.add_option("--params", f.params, "protocol parameters as a JSON object");
}

ExperimentConfig merge(const CLI::App& sub, const Flags& f) {
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
    if (given("--protocol")) c.protocol = f.protocol;
    if (given("--n")) c.ns = f.ns;
    if (given("--seed")) c.seed = f.seed;
    if (given("--seeds")) c.seeds = f.seeds;
    if (given("--trials")) c.trials = f.trials;
    if (given("--budget")) c.budget = f.budget;
    if (given("--stride")) {
        if (f.stride < 0) throw ConfigError("--stride must be non-negative");
        c.stride = f.stride;
    }
    if (given("--out")) c.out = f.out;
    if (given("--jobs")) c.jobs = f.jobs;
    if (given("--log")) c.log = f.log;
    if (given("--cap")) c.cap = f.cap;
    if (given("--params")) {
        nlohmann::json p;
        try {
            p = nlohmann::json::parse(f.params);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("--params is not valid JSON: ") + e.what());
        }
        if (!p.is_object()) throw ConfigError("--params must be a JSON object");
        c.params.update(p);
    }
    return c;
}

}  // namespace

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Population protocols with constant-size messages"};
    app.require_subcommand(1);
    Flags run_f, sweep_f, reach_f;
    auto* run = app.add_subcommand("run", "execute single runs");
    auto* sweep = app.add_subcommand("sweep", "aggregate trials over population sizes");
    auto* reach = app.add_subcommand("reach", "exhaustive reachability for tiny populations");
    add_flags(*run, run_f);
    add_flags(*sweep, sweep_f);
    add_flags(*reach, reach_f);

    std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rev.begin(), rev.end());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return bad_config;
    }

    try {
        if (run->parsed()) return cmd_run(merge(*run, run_f), out, err);
        if (sweep->parsed()) return cmd_sweep(merge(*sweep, sweep_f), out, err);
        return cmd_reach(merge(*reach, reach_f), out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return bad_config;
    }
}

}  // namespace popmsg::cli
