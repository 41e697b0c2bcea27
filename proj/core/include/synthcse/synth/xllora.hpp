#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "synthcse/synth/generator.hpp"
#include "synthcse/synth/records.hpp"

namespace synthcse::synth {

class QualityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SftConfig {
  std::size_t target_size = 10000;
  std::uint64_t seed = 0;
  // Admit machine-translated triples and pairs (tagged quality=machine).
  bool allow_machine_translation = false;
  std::size_t max_retries = 2;
  std::size_t max_tokens = 128;
  double temperature = 0.7;
};

struct SftResult {
  std::vector<SftExample> examples;
  std::size_t warnings = 0;
  std::vector<std::string> warning_messages;
  std::size_t generator_calls = 0;
};

// Step 1 turns each provided triple into a positive and a negative example
// (input order). Step 2 walks the parallel pairs in a seeded order, asks the
// generator for an English entailment and contradiction of the English side,
// and pairs each with a prompt built around the foreign side. Stops at
// target_size. Machine-quality input without allow_machine_translation
// throws QualityError before any request.
SftResult build_xllora_sft(std::span<const XnliTriple> triples, std::span<const ParallelPair> pairs,
                           GeneratorClient& en_generator, const SftConfig& config);

}  // namespace synthcse::synth
