#include <benchmark/benchmark.h>

#include <string>

#include "synthcse/adapter/lora.hpp"
#include "synthcse/common/rng.hpp"

namespace {

namespace ad = synthcse::adapter;

ad::Matrix random_matrix(std::size_t rows, std::size_t cols, synthcse::Rng& rng) {
  ad::Matrix m = ad::Matrix::zeros(rows, cols);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Four projection entries per layer, square hidden x hidden weights.
ad::LoraAdapter random_adapter(std::size_t layers, std::size_t hidden, std::size_t rank, std::uint64_t seed) {
  synthcse::Rng rng(seed);
  ad::LoraAdapter a;
  a.rank = rank;
  a.alpha = 2.0 * static_cast<double>(rank);
  for (std::size_t l = 0; l < layers; ++l) {
    for (const char* proj : {"query", "key", "value", "output"}) {
      a.entries["layer" + std::to_string(l) + "." + proj] = {random_matrix(rank, hidden, rng),
                                                             random_matrix(hidden, rank, rng)};
    }
  }
  return a;
}

void BM_Compose(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto ta = random_adapter(4, hidden, 8, 1);
  const auto la_tgt = random_adapter(4, hidden, 8, 2);
  const auto la_src = random_adapter(4, hidden, 8, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ad::compose_adamergex(ta, la_tgt, la_src, 0.5));
}
BENCHMARK(BM_Compose)->Arg(64)->Arg(256)->Arg(768);

void BM_LoraDelta(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto a = random_adapter(1, hidden, 8, 4);
  for (auto _ : state) benchmark::DoNotOptimize(ad::lora_delta(a, "layer0.query"));
}
BENCHMARK(BM_LoraDelta)->Arg(64)->Arg(256);

void BM_SerializeRoundTrip(benchmark::State& state) {
  const auto a = random_adapter(4, static_cast<std::size_t>(state.range(0)), 8, 5);
  std::size_t bytes = 0;
  for (auto _ : state) {
    const std::string blob = ad::serialize_adapter(a);
    bytes = blob.size();
    benchmark::DoNotOptimize(ad::parse_adapter(blob));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_SerializeRoundTrip)->Arg(64)->Arg(256);

}  // namespace
