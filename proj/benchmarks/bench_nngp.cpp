#include <memory>

#include <benchmark/benchmark.h>

#include "lscp/estimator.hpp"
#include "lscp/nngp.hpp"

using namespace lscp;

namespace {

std::shared_ptr<const NngpPrior> prior_for(int r, int m) {
  auto grid = std::make_shared<ReferenceGrid>(Window(0, 10, 0, 10), r, m);
  return std::make_shared<NngpPrior>(grid, CovarianceSpec{1.0, 1.0, 1.95});
}

void BM_GridConstruction(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(prior_for(r, 16));
}
BENCHMARK(BM_GridConstruction)->Arg(400)->Arg(2500)->Unit(benchmark::kMillisecond);

void BM_SampleGrid(benchmark::State& state) {
  const auto prior = prior_for(static_cast<int>(state.range(0)), 16);
  Engine eng(1);
  for (auto _ : state) benchmark::DoNotOptimize(prior->sample_grid(eng));
  state.SetItemsProcessed(state.iterations() * prior->grid().size());
}
BENCHMARK(BM_SampleGrid)->Arg(400)->Arg(2500);

void BM_Nearest(benchmark::State& state) {
  const auto prior = prior_for(2500, static_cast<int>(state.range(0)));
  Engine eng(2);
  const Window w(0, 10, 0, 10);
  for (auto _ : state) benchmark::DoNotOptimize(prior->grid().nearest_set(w.sample(eng)));
}
BENCHMARK(BM_Nearest)->Arg(8)->Arg(16)->Arg(32);

void BM_OffgridConditional(benchmark::State& state) {
  const auto prior = prior_for(2500, static_cast<int>(state.range(0)));
  Engine eng(3);
  const Window w(0, 10, 0, 10);
  for (auto _ : state) benchmark::DoNotOptimize(prior->conditional_at(w.sample(eng)));
}
BENCHMARK(BM_OffgridConditional)->Arg(8)->Arg(16)->Arg(32);

void BM_DrawOffgrid(benchmark::State& state) {
  const auto prior = prior_for(2500, 16);
  Engine eng(4);
  const Eigen::VectorXd g = prior->sample_grid(eng);
  const auto pts = uniform_points(Window(0, 10, 0, 10), static_cast<std::size_t>(state.range(0)), eng);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(draw_offgrid(*prior, g, pts, {4, StreamTag::kAux, i++, 0}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DrawOffgrid)->Arg(1000)->Arg(6000);

void BM_PcnProposal(benchmark::State& state) {
  const auto prior = prior_for(2500, 16);
  Engine eng(5);
  LatentField f;
  f.grid = prior->sample_grid(eng);
  const auto pts = uniform_points(Window(0, 10, 0, 10), static_cast<std::size_t>(state.range(0)), eng);
  extend_offgrid(f, *prior, pts, Provenance::kData, {5, StreamTag::kInit, 0, 0});
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pcn_propose(f, *prior, 0.1, eng, {5, StreamTag::kBetaOffgrid, i++, 0}));
}
BENCHMARK(BM_PcnProposal)->Arg(1000)->Arg(6000)->Unit(benchmark::kMillisecond);

void BM_LogMHat(benchmark::State& state) {
  const RateVector rate({1.0, 4.0, 12.0});
  const std::vector<long> counts{300, 400, 250};
  for (auto _ : state) benchmark::DoNotOptimize(log_m_hat(rate, 1.5, counts, 100.0));
}
BENCHMARK(BM_LogMHat);

}  // namespace
