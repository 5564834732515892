#include <benchmark/benchmark.h>

#include "popmsg/popmsg.hpp"

using namespace popmsg;

namespace {

void BM_DrawPair(benchmark::State& state) {
    SchedulerRng rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(rng.draw_pair(n));
}
BENCHMARK(BM_DrawPair)->Arg(100)->Arg(100000);

template <class P>
void steps(benchmark::State& state, const P& proto, Configuration<P> config) {
    SchedulerRng rng(7);
    for (auto _ : state) benchmark::DoNotOptimize(step(config, proto, rng));
    state.SetItemsProcessed(state.iterations());
}

void BM_EpidemicStep(benchmark::State& state) {
    EpidemicProtocol p;
    std::vector<bool> in(static_cast<std::size_t>(state.range(0)), false);
    in[0] = true;
    steps(state, p, make_configuration(p, in));
}
BENCHMARK(BM_EpidemicStep)->Arg(1000)->Arg(100000);

void BM_JuntaStep(benchmark::State& state) {
    junta::JuntaProtocol<> p;
    steps(state, p, make_configuration(p, std::vector<Empty>(static_cast<std::size_t>(state.range(0)))));
}
BENCHMARK(BM_JuntaStep)->Arg(1000)->Arg(100000);

void BM_CountingStep(benchmark::State& state) {
    counting::CountingProtocol p;
    steps(state, p, make_configuration(p, counting::leader_inputs(static_cast<std::size_t>(state.range(0)))));
}
BENCHMARK(BM_CountingStep)->Arg(100)->Arg(10000);

void BM_BroadcastStep(benchmark::State& state) {
    auto p = broadcast::BroadcastProtocol::gather(broadcast::gather_or());
    std::vector<std::uint64_t> in(static_cast<std::size_t>(state.range(0)), 0);
    in[0] = 1;
    steps(state, p, make_configuration(p, in));
}
BENCHMARK(BM_BroadcastStep)->Arg(10)->Arg(1000);

void BM_BroadcastMonitored(benchmark::State& state) {
    auto p = broadcast::BroadcastProtocol::gather(broadcast::gather_or());
    std::vector<std::uint64_t> in(static_cast<std::size_t>(state.range(0)), 0);
    in[0] = 1;
    auto c = make_configuration(p, in);
    broadcast::BroadcastMonitor mon(p, 1);
    SchedulerRng rng(3);
    const std::uint64_t chunk = 100000;
    for (auto _ : state) {
        RunOptions opt;
        opt.budget = chunk;
        run_until(c, p, mon, rng, opt);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(chunk));
}
BENCHMARK(BM_BroadcastMonitored)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
