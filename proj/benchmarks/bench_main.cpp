#include <benchmark/benchmark.h>

#include <vector>

#include "pemfreq/aggregator.hpp"
#include "pemfreq/fleet.hpp"
#include "pemfreq/grid.hpp"

using namespace pemfreq;

namespace {

NetworkModel two_area() {
  NetworkModel net;
  AreaParams a;
  a.base_power_mw = 12800.0;
  a.damping_mw_per_hz = 200.0;
  a.droop_hz_per_mw = 0.0002;
  net.areas = {a, a};
  net.tie_lines = {{0, 1, 2000.0}};
  return net;
}

void BM_FleetStep(benchmark::State& state) {
  FleetParams p;
  p.n_devices = state.range(0);
  Fleet fleet(p, ControlPolicy{}, 1);
  fleet.init_uniform(0.25 * p.n_devices * p.packet_power_mw);
  const std::vector<double> df = {0.0};
  long k = 0;
  for (auto _ : state) {
    const FleetStepResult res = fleet.step(df, k++, true);
    fleet.commit_accepts(res.requests);
  }
  state.SetItemsProcessed(state.iterations() * p.n_devices);
}
BENCHMARK(BM_FleetStep)->Arg(10000)->Arg(100000)->Arg(400000);

void BM_GridStep(benchmark::State& state) {
  const NetworkModel net = two_area();
  GridState st = GridState::zero(2, 0.1);
  const std::vector<double> load = {500.0, 0.0};
  const std::vector<double> pem = {0.0, -100.0};
  for (auto _ : state) swing_turbine_step(st, net, load, pem, 4);
}
BENCHMARK(BM_GridStep);

void BM_HistogramAdvance(benchmark::State& state) {
  TimerHistogram h(1800);
  std::int64_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(h.advance(q));
    q = (q + 7) % 40;
  }
}
BENCHMARK(BM_HistogramAdvance);

void BM_AggregatorEventStep(benchmark::State& state) {
  Aggregator agg(1800, 0.0045);
  agg.histogram() =
      TimerHistogram::from_bins(std::vector<std::int64_t>(1800, 35));
  for (auto _ : state) {
    benchmark::DoNotOptimize(agg.advance(35, true, 0.4));
  }
}
BENCHMARK(BM_AggregatorEventStep);

}  // namespace

BENCHMARK_MAIN();
