#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "synthcse/synth/generator.hpp"
#include "synthcse/synth/prompts.hpp"
#include "synthcse/synth/records.hpp"

namespace synthcse::synth {

// prompting: few-shot prompts from the example pools in the anchor language.
// adapter_composition: zero-shot prompts in the anchor language, served by a
//   composed task-language adapter.
// xl_lora: zero-shot prompts asking for English output.
enum class Strategy { kPrompting, kAdapterComposition, kXlLora };
enum class PromptingVariant { kSeparate, kCombined };

std::string_view strategy_name(Strategy strategy);
Strategy parse_strategy(std::string_view name);
std::string_view variant_name(PromptingVariant variant);
PromptingVariant parse_variant(std::string_view name);
Source source_for(Strategy strategy);

struct SynthConfig {
  Strategy strategy = Strategy::kPrompting;
  PromptingVariant variant = PromptingVariant::kSeparate;
  std::uint64_t seed = 0;
  std::size_t max_retries = 2;
  std::size_t parallelism = 1;
  std::size_t max_tokens = 128;
  double temperature = 0.7;
  PromptPools pools = default_prompt_pools();

  void validate() const;
};

struct TripletOutcome {
  std::optional<Triplet> triplet;
  RejectRecord reject;  // meaningful when triplet is empty
  std::size_t attempts = 0;
};

// Up to max_retries + 1 attempts; an attempt fails on transport errors,
// empty or unparseable output, or positive == negative.
TripletOutcome generate_triplet(const AnchorRecord& anchor, std::size_t anchor_index, GeneratorClient& client,
                                const SynthConfig& config);

struct SynthSummary {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> reasons;
};

// Writes accepted triplets and rejects in anchor order. Both outputs are
// opened before the first request, so an unwritable path fails without
// contacting the generator.
SynthSummary synthesize_dataset(std::span<const AnchorRecord> anchors, GeneratorClient& client,
                                const SynthConfig& config, const std::filesystem::path& dataset_path,
                                const std::filesystem::path& rejects_path);

}  // namespace synthcse::synth
