// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "rsd/gibbs.hpp"
#include "rsd/kernels.hpp"
#include "rsd/simgen.hpp"

namespace {

struct Fixture {
  rsd::Dataset data;
  rsd::MCMCState state;
  rsd::LabelMatrix labels;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    const rsd::sim::SimScenario sc = rsd::sim::generate_scenario(
        {6, rsd::sim::Level::low, rsd::sim::Level::high, 30, 10, 100.0, 3});
    out.data = sc.train;
    rsd::HyperParams hp;
    rsd::RngStream rng(5);
    out.state = rsd::init_state(out.data, hp, rng, rsd::InitKind::spatial);
    rsd::update_parameters(out.state, out.data, hp, rng);
    out.labels.resize(400, out.data.n());
    for (Eigen::Index l = 0; l < out.labels.rows(); ++l) {
      rsd::sweep(out.state, out.data, hp, rng);
      for (Eigen::Index i = 0; i < out.data.n(); ++i) out.labels(l, i) = out.state.g[i];
    }
    return out;
  }();
  return f;
}

void BM_SegmentWeightsSerial(benchmark::State& s) {
  const Fixture& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(rsd::serial::segment_log_weights(f.state, f.data));
}
void BM_SegmentWeightsParallel(benchmark::State& s) {
  const Fixture& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(rsd::parallel::segment_log_weights(f.state, f.data));
}
void BM_ComponentWeightsSerial(benchmark::State& s) {
  const Fixture& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(rsd::serial::component_log_weights(f.state, f.data));
}
void BM_ComponentWeightsParallel(benchmark::State& s) {
  const Fixture& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(rsd::parallel::component_log_weights(f.state, f.data));
}
void BM_CoclusteringSerial(benchmark::State& s) {
  const Fixture& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(rsd::serial::coclustering(f.labels));
}
void BM_CoclusteringParallel(benchmark::State& s) {
  const Fixture& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(rsd::parallel::coclustering(f.labels));
}
void BM_BinderSerial(benchmark::State& s) {
  const Fixture& f = fixture();
  const Eigen::MatrixXd d = rsd::parallel::coclustering(f.labels);
  for (auto _ : s) benchmark::DoNotOptimize(rsd::serial::binder_losses(f.labels, d));
}
void BM_BinderParallel(benchmark::State& s) {
  const Fixture& f = fixture();
  const Eigen::MatrixXd d = rsd::parallel::coclustering(f.labels);
  for (auto _ : s) benchmark::DoNotOptimize(rsd::parallel::binder_losses(f.labels, d));
}

}  // namespace

BENCHMARK(BM_SegmentWeightsSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SegmentWeightsParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ComponentWeightsSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ComponentWeightsParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CoclusteringSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoclusteringParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BinderSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BinderParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
