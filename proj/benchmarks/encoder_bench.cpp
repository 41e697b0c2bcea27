#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "synthcse/common/rng.hpp"
#include "synthcse/encoder/encoder.hpp"
#include "synthcse/encoder/vocab.hpp"
#include "synthcse/synth/toy_language.hpp"

namespace {

namespace enc = synthcse::encoder;
namespace toy = synthcse::synth::toy;

std::vector<std::string> toy_sentences(std::size_t n) {
  synthcse::Rng rng(11);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(toy::realize(toy::random_meaning(rng), rng));
  return out;
}

// Inference throughput of the default-sized model, sentences per batch on the x axis.
void BM_EncodeTexts(benchmark::State& state) {
  const auto texts = toy_sentences(static_cast<std::size_t>(state.range(0)));
  const enc::Vocab vocab = enc::Vocab::build(texts);
  enc::EncoderConfig cfg;
  cfg.vocab_size = vocab.size();
  const enc::EncoderParams params = enc::init_params(cfg, 5);
  for (auto _ : state) {
    auto out = enc::encode_texts(params, vocab, texts, cfg.pooling);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeTexts)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Tokenize(benchmark::State& state) {
  const auto texts = toy_sentences(256);
  const enc::Vocab vocab = enc::Vocab::build(texts);
  for (auto _ : state) {
    for (const auto& t : texts) benchmark::DoNotOptimize(enc::tokenize(t, vocab, 32));
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_Tokenize);

}  // namespace
