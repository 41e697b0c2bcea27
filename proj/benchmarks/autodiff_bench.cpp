#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "synthcse/autodiff/graph.hpp"
#include "synthcse/common/rng.hpp"
#include "synthcse/contrastive/loss.hpp"

namespace {

using synthcse::Rng;
using synthcse::autodiff::Graph;
using synthcse::autodiff::Tensor;

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng, bool requires_grad) {
  std::vector<double> data(rows * cols);
  for (double& v : data) v = rng.uniform(-1.0, 1.0);
  return Tensor({rows, cols}, std::move(data), requires_grad);
}

void BM_MatmulForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_matrix(n, n, rng, false);
  const Tensor b = random_matrix(n, n, rng, false);
  for (auto _ : state) {
    Graph g;
    const auto out = g.matmul(g.input(a), g.input(b));
    benchmark::DoNotOptimize(g.value(out).data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_MatmulForward)->RangeMultiplier(2)->Range(16, 128);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor a = random_matrix(n, n, rng, true);
  const Tensor b = random_matrix(n, n, rng, true);
  for (auto _ : state) {
    Graph g;
    const auto a_id = g.input(a);
    g.backward(g.sum(g.matmul(a_id, g.input(b))));
    benchmark::DoNotOptimize(g.grad(a_id).data());
  }
}
BENCHMARK(BM_MatmulBackward)->RangeMultiplier(2)->Range(16, 128);

// Forward plus backward of the supervised objective on pre-pooled embeddings,
// batch size on the x axis.
void BM_SupervisedLoss(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t kDim = 32;
  Rng rng(3);
  const Tensor h = random_matrix(m, kDim, rng, true);
  const Tensor p = random_matrix(m, kDim, rng, true);
  const Tensor n = random_matrix(m, kDim, rng, true);
  for (auto _ : state) {
    Graph g;
    const auto h_id = g.input(h);
    const auto loss = synthcse::contrastive::supervised_loss(g, h_id, g.input(p), g.input(n), 0.05);
    g.backward(loss);
    benchmark::DoNotOptimize(g.grad(h_id).data());
  }
}
BENCHMARK(BM_SupervisedLoss)->RangeMultiplier(2)->Range(8, 128);

}  // namespace
