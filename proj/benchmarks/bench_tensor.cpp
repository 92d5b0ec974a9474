#include <benchmark/benchmark.h>

#include "hctn/autograd.hpp"
#include "hctn/nn.hpp"
#include "hctn/rng.hpp"

using namespace hctn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform_real(rng, -1.0, 1.0);
  return t;
}

}  // namespace

static void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  NodePtr a = constant(random_tensor({n, n}, rng));
  NodePtr b = constant(random_tensor({n, n}, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b)->value.raw());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

static void BM_dense_stack_forward_backward(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  ParamRegistry reg;
  Dense d1(32, 64, "d1", reg, rng), d2(64, 32, "d2", reg, rng);
  NodePtr x = constant(random_tensor({rows, 32}, rng));
  for (auto _ : state) {
    NodePtr loss = mean_all(square(d2.forward(relu(d1.forward(x)))));
    backward(loss);
    for (const auto& p : reg.all()) p->zero_grad();
    benchmark::DoNotOptimize(loss->value[0]);
  }
}
BENCHMARK(BM_dense_stack_forward_backward)->Arg(64)->Arg(512);

static void BM_softmax_rows(benchmark::State& state) {
  Rng rng(3);
  NodePtr x = constant(random_tensor({256, 64}, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(softmax_rows(x)->value.raw());
  }
}
BENCHMARK(BM_softmax_rows);

static void BM_conv1d(benchmark::State& state) {
  Rng rng(4);
  NodePtr x = constant(random_tensor({128, 8}, rng));
  NodePtr w = constant(random_tensor({3, 8, 8}, rng));
  NodePtr b = constant(random_tensor({1, 8}, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv1d_same(x, w, b)->value.raw());
  }
}
BENCHMARK(BM_conv1d);

static void BM_batch_norm_train(benchmark::State& state) {
  Rng rng(5);
  ParamRegistry reg;
  BatchNorm bn(64, "bn", reg);
  NodePtr x = constant(random_tensor({512, 64}, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bn.forward(x, true)->value.raw());
  }
}
BENCHMARK(BM_batch_norm_train);
