#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthcse/synth/records.hpp"

namespace synthcse::synth {

enum class PromptStrategy { kSyncsePartial, kZeroShotPositive, kZeroShotNegative };

struct PromptExample {
  std::string premise;
  std::string output;
};

inline constexpr std::size_t kExamplePoolSize = 18;
inline constexpr std::size_t kOpeningCount = 4;
inline constexpr std::size_t kExamplesPerPrompt = 5;

struct PromptSpec {
  PromptStrategy strategy = PromptStrategy::kSyncsePartial;
  std::vector<PromptExample> example_pool;
  std::vector<std::string> opening_variants;
  // Final instruction before the anchor; "{language}" is replaced by the
  // target language name.
  std::string closing_template;
  std::string target_language = "en";
  std::uint64_t seed = 0;

  // syncse_partial requires exactly 18 examples and 4 openings.
  void validate() const;
};

// What a prompt builder chose, for provenance metadata.
struct BuiltPrompt {
  std::string text;
  std::size_t opening = 0;
  std::vector<std::size_t> examples;
};

BuiltPrompt build_syncse_prompt_detailed(std::string_view anchor, const PromptSpec& spec);
std::string build_syncse_prompt(std::string_view anchor, const PromptSpec& spec);

// Fixed instruction template with the output language and premise
// substituted in one pass, so braces inside the anchor are never expanded.
std::string build_zero_shot_prompt(std::string_view anchor, Kind kind, std::string_view output_language);

// Example pools and wording for the three prompting variants: entailment
// only, contradiction only, and both in one response. The shipped pools are
// written for this project; they are not the ones used in any published run.
struct PromptPools {
  PromptSpec positive;
  PromptSpec negative;
  PromptSpec combined;
};

PromptPools default_prompt_pools();
PromptPools prompt_pools_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PromptPools& pools);
PromptPools load_prompt_pools(const std::filesystem::path& path);

// Combined-variant responses carry both sentences on lines prefixed
// "Positive:" and "Negative:".
struct CombinedOutput {
  std::string positive;
  std::string negative;
};
std::optional<CombinedOutput> parse_combined_output(std::string_view text);

}  // namespace synthcse::synth
