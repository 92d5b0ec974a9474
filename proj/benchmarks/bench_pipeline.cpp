#include <benchmark/benchmark.h>

#include "hctn/gmm.hpp"
#include "hctn/gpam.hpp"
#include "hctn/hypergraph.hpp"
#include "hctn/isolation_forest.hpp"
#include "hctn/model.hpp"
#include "hctn/synth.hpp"
#include "hctn/train.hpp"

using namespace hctn;

namespace {

SparseQoSTensor bench_tensor() {
  SynthSpec spec;
  spec.users = 40;
  spec.services = 60;
  spec.time_steps = 8;
  spec.density = 0.4;
  spec.seed = 77;
  return generate_synthetic(spec);
}

}  // namespace

static void BM_masked_nmf(benchmark::State& state) {
  SparseQoSTensor data = bench_tensor();
  MaskedNmfOptions opts;
  opts.rank = 8;
  opts.max_iters = static_cast<std::size_t>(state.range(0));
  opts.rel_tol = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(masked_nmf(data.slice(7), 40, 60, opts).objective_history.back());
  }
}
BENCHMARK(BM_masked_nmf)->Arg(20)->Arg(100);

static void BM_build_snapshot(benchmark::State& state) {
  SparseQoSTensor data = bench_tensor();
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_snapshot(data, 7).adjacency_norm.raw());
  }
}
BENCHMARK(BM_build_snapshot);

static void BM_gdi(benchmark::State& state) {
  SparseQoSTensor data = bench_tensor();
  for (auto _ : state) {
    benchmark::DoNotOptimize(gdi(data, 7).users.data());
  }
}
BENCHMARK(BM_gdi);

static void BM_local_features(benchmark::State& state) {
  SparseQoSTensor data = bench_tensor();
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_local_features(data, 8, 4).front().raw());
  }
}
BENCHMARK(BM_local_features);

static void BM_forward_pass(benchmark::State& state) {
  SparseQoSTensor data = bench_tensor();
  Hyperparams hp;
  hp.window = 4;
  hp.f1 = 4;
  hp.f2 = 16;
  hp.f4 = 8;
  hp.layers = 2;
  hp.heads = 2;
  hp.dropout = 0.0;
  hp.nmf_iters = 20;
  ModelInputs inputs = prepare_inputs(data, 7, hp);
  HctnModel model(40, 60, hp);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(inputs, false, 0).qhat->value.raw());
  }
}
BENCHMARK(BM_forward_pass);

static void BM_train_epoch(benchmark::State& state) {
  SparseQoSTensor data = bench_tensor();
  SplitSpec split;
  split.train_fraction = 0.3;
  split.target_time = 7;
  split.window = 4;
  Hyperparams hp;
  hp.window = 4;
  hp.f1 = 4;
  hp.f2 = 16;
  hp.f4 = 8;
  hp.layers = 1;
  hp.heads = 2;
  hp.dropout = 0.0;
  hp.nmf_iters = 20;
  hp.max_epochs = static_cast<std::size_t>(state.range(0));
  hp.patience = hp.max_epochs;
  TrainOptions opts{hp, split, 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_model(data, opts).best_epoch);
  }
}
BENCHMARK(BM_train_epoch)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_iforest_score(benchmark::State& state) {
  SparseQoSTensor data = bench_tensor();
  const std::vector<QoSRecord> records = data.all_records();
  IsolationForestOptions opts;
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_records(records, opts).front());
  }
}
BENCHMARK(BM_iforest_score)->Unit(benchmark::kMillisecond);
