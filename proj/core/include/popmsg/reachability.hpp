#pragma once

// Exhaustive reachability over configurations taken up to agent permutation.
// Intended for tiny populations; a cap guards against state-space blowup.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "popmsg/model.hpp"

namespace popmsg {

template <Protocol P>
using Multiset = std::vector<typename P::State>;

class ReachabilityOverflow : public std::runtime_error {
public:
    ReachabilityOverflow(std::size_t partial, std::size_t cap)
        : std::runtime_error("reachable set exceeds cap of " + std::to_string(cap) +
                             " configurations (explored " + std::to_string(partial) + ")"),
          partial_(partial) {}
    [[nodiscard]] std::size_t partial_count() const noexcept { return partial_; }

private:
    std::size_t partial_;
};

template <Protocol P>
Multiset<P> canonical(std::vector<typename P::State> agents) {
    std::sort(agents.begin(), agents.end());
    return agents;
}

/// All distinct successors of a multiset under one ordered-pair interaction.
template <Protocol P>
std::vector<Multiset<P>> successors(const P& proto, const Multiset<P>& config) {
    std::set<Multiset<P>> out;
    // Sorted input: the first index of each run of equal states stands for
    // the whole run; a pair within one run uses its first two copies.
    std::vector<std::size_t> firsts;
    for (std::size_t k = 0; k < config.size(); ++k)
        if (k == 0 || !(config[k] == config[k - 1])) firsts.push_back(k);
    for (std::size_t i : firsts) {
        for (std::size_t jf : firsts) {
            std::size_t j = jf;
            if (jf == i) {
                if (i + 1 >= config.size() || !(config[i + 1] == config[i])) continue;
                j = i + 1;
            }
            auto next = config;
            const auto seen_by_i = next[j].message;
            const auto seen_by_j = next[i].message;
            proto.update(next[i], seen_by_i, Role::initiator);
            proto.update(next[j], seen_by_j, Role::responder);
            out.insert(canonical<P>(std::move(next)));
        }
    }
    return {out.begin(), out.end()};
}

template <Protocol P>
struct ReachabilityGraph {
    std::vector<Multiset<P>> nodes;
    std::vector<std::vector<std::size_t>> edges;
};

template <Protocol P>
ReachabilityGraph<P> reachability_graph(const P& proto, const std::vector<typename P::State>& initial,
                                        std::size_t cap) {
    if (initial.size() < 2) throw std::invalid_argument("population needs at least two agents");
    ReachabilityGraph<P> g;
    std::map<Multiset<P>, std::size_t> index;
    auto intern = [&](Multiset<P> m) -> std::size_t {
        auto it = index.find(m);
        if (it != index.end()) return it->second;
        if (g.nodes.size() >= cap) throw ReachabilityOverflow(g.nodes.size(), cap);
        const std::size_t id = g.nodes.size();
        index.emplace(m, id);
        g.nodes.push_back(std::move(m));
        g.edges.emplace_back();
        return id;
    };
    intern(canonical<P>(initial));
    for (std::size_t cur = 0; cur < g.nodes.size(); ++cur) {
        for (auto& succ : successors(proto, g.nodes[cur])) {
            const std::size_t id = intern(std::move(succ));
            g.edges[cur].push_back(id);
        }
    }
    return g;
}

template <Protocol P>
std::set<Multiset<P>> reachable_set(const P& proto, const std::vector<typename P::State>& initial,
                                    std::size_t cap) {
    auto g = reachability_graph(proto, initial, cap);
    return {std::make_move_iterator(g.nodes.begin()), std::make_move_iterator(g.nodes.end())};
}

template <Protocol P>
std::set<Multiset<P>> reachable_set(const P& proto, const Configuration<P>& initial,
                                    std::size_t cap) {
    return reachable_set(proto, initial.agents, cap);
}

/// True iff every fair execution from `initial` stabilizes to correct outputs:
/// every reachable configuration can reach the set of configurations from
/// which no incorrect configuration is reachable.
template <Protocol P>
bool check_stably_correct(const P& proto, const std::vector<typename P::State>& initial,
                          const std::function<bool(const Multiset<P>&)>& correct, std::size_t cap) {
    const auto g = reachability_graph(proto, initial, cap);
    const std::size_t count = g.nodes.size();
    std::vector<std::vector<std::size_t>> reverse(count);
    for (std::size_t u = 0; u < count; ++u)
        for (std::size_t v : g.edges[u]) reverse[v].push_back(u);

    auto backward_closure = [&](std::vector<char> seed) {
        std::deque<std::size_t> queue;
        for (std::size_t u = 0; u < count; ++u)
            if (seed[u]) queue.push_back(u);
        while (!queue.empty()) {
            const std::size_t v = queue.front();
            queue.pop_front();
            for (std::size_t u : reverse[v]) {
                if (!seed[u]) {
                    seed[u] = 1;
                    queue.push_back(u);
                }
            }
        }
        return seed;
    };

    std::vector<char> bad(count);
    for (std::size_t u = 0; u < count; ++u) bad[u] = correct(g.nodes[u]) ? 0 : 1;
    const auto reaches_bad = backward_closure(std::move(bad));

    std::vector<char> stable(count);
    for (std::size_t u = 0; u < count; ++u) stable[u] = reaches_bad[u] ? 0 : 1;
    const auto reaches_stable = backward_closure(std::move(stable));

    return std::all_of(reaches_stable.begin(), reaches_stable.end(), [](char c) { return c != 0; });
}

template <Protocol P>
bool check_stably_correct(const P& proto, const Configuration<P>& initial,
                          const std::function<bool(const Multiset<P>&)>& correct, std::size_t cap) {
    return check_stably_correct(proto, initial.agents, correct, cap);
}

}  // namespace popmsg
