#include <benchmark/benchmark.h>

#include "fedwire/energy_opt.hpp"
#include "fedwire/fl_sim.hpp"
#include "fedwire/harness.hpp"
#include "fedwire/time_opt.hpp"

using namespace fedwire;

namespace {

NetworkScenario scenario(int K) {
  harness::ScenarioConfig c;
  c.K = K;
  c.seed = 7;
  return harness::gen_scenario(c);
}

const FlParams kFl{1.0, 0.5, 0.1, 0.1, 1e-3};

void BM_RequiredBandwidth(benchmark::State& st) {
  const auto sc = scenario(static_cast<int>(st.range(0)));
  const auto co = IterationCoefficients::from(kFl, sc);
  const double T = 2.0 * time_opt::min_completion_time(sc, co).T_star;
  const Exec exec = st.range(1) ? Exec::parallel : Exec::serial;
  for (auto _ : st) benchmark::DoNotOptimize(time_opt::required_bandwidth(sc, co, T, 0.5, exec));
}
BENCHMARK(BM_RequiredBandwidth)->ArgsProduct({{50, 1000}, {0, 1}});

void BM_MinCompletionTime(benchmark::State& st) {
  const auto sc = scenario(static_cast<int>(st.range(0)));
  const auto co = IterationCoefficients::from(kFl, sc);
  time_opt::Options opt;
  opt.exec = st.range(1) ? Exec::parallel : Exec::serial;
  for (auto _ : st) benchmark::DoNotOptimize(time_opt::min_completion_time(sc, co, opt).T_star);
}
BENCHMARK(BM_MinCompletionTime)->ArgsProduct({{50}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_MinimizeEnergy(benchmark::State& st) {
  const auto sc = scenario(50);
  const auto co = IterationCoefficients::from(kFl, sc);
  const auto ts = time_opt::min_completion_time(sc, co);
  energy_opt::Options opt;
  opt.exec = st.range(0) ? Exec::parallel : Exec::serial;
  for (auto _ : st)
    benchmark::DoNotOptimize(
        energy_opt::minimize_energy(sc, kFl, 2.0 * ts.T_star, ts.allocation, opt).report.breakdown.total_energy);
}
BENCHMARK(BM_MinimizeEnergy)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DaneRound(benchmark::State& st) {
  const auto pool = fl_sim::make_synthetic({6000, 10, 0.1, fl_sim::LossKind::linear_regression, 1});
  const auto users = fl_sim::partition(pool, 12, {}, 1);
  const auto c = fl_sim::estimate_curvature(fl_sim::LossModel{}, users);
  fl_sim::DaneConfig cfg;
  cfg.fl = {c.lipschitz, c.strong_convexity, c.strong_convexity / c.lipschitz, 1.0 / c.lipschitz, 1e-3};
  cfg.local_stop = fl_sim::LocalStop::accuracy(0.1);
  cfg.max_rounds = 3;
  cfg.exec = st.range(0) ? Exec::parallel : Exec::serial;
  for (auto _ : st) benchmark::DoNotOptimize(fl_sim::run_dane(fl_sim::LossModel{}, users, cfg).global_loss.back());
}
BENCHMARK(BM_DaneRound)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
