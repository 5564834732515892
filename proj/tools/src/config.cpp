#include <fstream>
#include <set>
#include <sstream>

#include "popmsg/cli/cli.hpp"

namespace popmsg::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kKeys = {"protocol", "n",   "seed",   "seeds", "trials", "budget",
                                     "stride",   "out", "jobs",   "log",   "cap",    "params"};

std::uint64_t as_count(const json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("'" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

}  // namespace

std::vector<std::uint64_t> ExperimentConfig::seed_list() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out(trials);
    for (std::size_t t = 0; t < trials; ++t) out[t] = seed + t;
    return out;
}

json ExperimentConfig::to_json() const {
    json j;
    j["protocol"] = protocol;
    j["n"] = ns;
    if (!seeds.empty()) j["seeds"] = seeds;
    j["seed"] = seed;
    j["trials"] = trials;
    if (budget) j["budget"] = *budget;
    j["stride"] = stride;
    if (!out.empty()) j["out"] = out;
    j["jobs"] = jobs;
    if (!log.empty()) j["log"] = log;
    j["cap"] = cap;
    j["params"] = params;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!kKeys.count(k)) throw ConfigError("unknown config key '" + k + "'");

    ExperimentConfig c;
    if (j.contains("protocol")) {
        if (!j["protocol"].is_string()) throw ConfigError("'protocol' must be a string");
        c.protocol = j["protocol"].get<std::string>();
    }
    if (j.contains("n")) {
        const auto& v = j["n"];
        if (v.is_array()) {
            for (const auto& x : v) c.ns.push_back(as_count(x, "n"));
        } else {
            c.ns.push_back(as_count(v, "n"));
        }
    }
    if (j.contains("seeds")) {
        if (!j["seeds"].is_array()) throw ConfigError("'seeds' must be an array");
        for (const auto& x : j["seeds"]) c.seeds.push_back(as_count(x, "seeds"));
    }
    if (j.contains("seed")) c.seed = as_count(j["seed"], "seed");
    if (j.contains("trials")) c.trials = as_count(j["trials"], "trials");
    if (j.contains("budget")) c.budget = as_count(j["budget"], "budget");
    if (j.contains("stride")) {
        if (!j["stride"].is_number() || j["stride"].get<double>() < 0)
            throw ConfigError("'stride' must be a non-negative number");
        c.stride = j["stride"].get<double>();
    }
    if (j.contains("out")) {
        if (!j["out"].is_string()) throw ConfigError("'out' must be a string");
        c.out = j["out"].get<std::string>();
    }
    if (j.contains("jobs")) c.jobs = static_cast<unsigned>(as_count(j["jobs"], "jobs"));
    if (j.contains("log")) {
        if (!j["log"].is_string()) throw ConfigError("'log' must be a string");
        c.log = j["log"].get<std::string>();
    }
    if (j.contains("cap")) c.cap = as_count(j["cap"], "cap");
    if (j.contains("params")) {
        if (!j["params"].is_object()) throw ConfigError("'params' must be an object");
        c.params = j["params"];
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed config '" + path + "': " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

}  // namespace popmsg::cli
