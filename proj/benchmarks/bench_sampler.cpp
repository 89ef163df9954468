#include <benchmark/benchmark.h>

#include "lscp/mcmc.hpp"

using namespace lscp;

namespace {

struct Setup {
  ChainContext ctx;
  std::vector<std::vector<Point>> data;
};

Setup make_setup(int r, double target_aux) {
  const Window w(0, 10, 0, 10);
  Engine eng(11);
  ModelSpec model;
  model.window = w;
  model.r = r;
  SamplerConfig cfg;
  cfg.target_aux = target_aux;
  cfg.seed = 11;
  return {make_context(model, cfg), {uniform_points(w, 500, eng)}};
}

void BM_Sweep(benchmark::State& state) {
  const Setup s = make_setup(static_cast<int>(state.range(0)), static_cast<double>(state.range(1)));
  ChainState chain = initialize(s.data, s.ctx);
  for (auto _ : state) step(chain, s.ctx);
  state.counters["aux_points"] = static_cast<double>(chain.layers[0].aux.size());
}
BENCHMARK(BM_Sweep)->Args({900, 1000})->Args({2500, 1000})->Args({2500, 6000})->Unit(benchmark::kMillisecond);

void BM_BetaBlock(benchmark::State& state) {
  const Setup s = make_setup(2500, static_cast<double>(state.range(0)));
  ChainState chain = initialize(s.data, s.ctx);
  for (auto _ : state) {
    ++chain.iteration;
    update_beta(chain, s.ctx);
  }
}
BENCHMARK(BM_BetaBlock)->Arg(1000)->Arg(6000)->Unit(benchmark::kMillisecond);

void BM_AuxBlock(benchmark::State& state) {
  const Setup s = make_setup(2500, static_cast<double>(state.range(0)));
  ChainState chain = initialize(s.data, s.ctx);
  for (auto _ : state) {
    ++chain.iteration;
    update_aux(chain, s.ctx);
    virtual_update(chain);
  }
}
BENCHMARK(BM_AuxBlock)->Arg(1000)->Arg(6000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
