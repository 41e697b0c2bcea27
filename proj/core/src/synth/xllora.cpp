#include "synthcse/synth/xllora.hpp"

#include <numeric>

#include "synthcse/common/rng.hpp"
#include "synthcse/common/text.hpp"
#include "synthcse/synth/prompts.hpp"

namespace synthcse::synth {

namespace {

void check_quality(Quality q, bool allow, const std::string& what) {
  if (q == Quality::kMachine && !allow) {
    throw QualityError(what + " is machine translated; pass the allow-machine-translation option to use it");
  }
}

// The generator fills the output slot from the English side; the training
// prompt swaps in the foreign sentence and keeps English as output language.
SftExample make_example(const std::string& anchor, const std::string& target, Kind kind,
                        nlohmann::ordered_json meta) {
  SftExample e;
  e.prompt = build_zero_shot_prompt(anchor, kind, "en");
  e.target = target;
  e.kind = kind;
  e.meta = std::move(meta);
  return e;
}

std::optional<std::string> request_english(GeneratorClient& client, const std::string& english, Kind kind,
                                           std::uint64_t seed, const SftConfig& config, std::size_t& calls,
                                           std::string& failure) {
  for (std::size_t attempt = 0; attempt <= config.max_retries; ++attempt) {
    GenerationRequest req;
    req.prompt = build_zero_shot_prompt(english, kind, "en");
    req.max_tokens = config.max_tokens;
    req.temperature = config.temperature;
    req.seed = mix_seed(seed, attempt);
    ++calls;
    try {
      std::string text = trim(client.generate(req).text);
      if (!text.empty()) return text;
      failure = "empty_output";
    } catch (const TransportError& e) {
      failure = std::string("transport_error: ") + e.what();
    }
  }
  return std::nullopt;
}

}  // namespace

SftResult build_xllora_sft(std::span<const XnliTriple> triples, std::span<const ParallelPair> pairs,
                           GeneratorClient& en_generator, const SftConfig& config) {
  for (std::size_t i = 0; i < triples.size(); ++i) {
    check_quality(triples[i].quality, config.allow_machine_translation, "triple " + std::to_string(i));
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    check_quality(pairs[i].quality, config.allow_machine_translation, "parallel pair " + std::to_string(i));
    pairs[i].validate();
  }

  SftResult result;
  auto warn = [&](std::string message) {
    ++result.warnings;
    result.warning_messages.push_back(std::move(message));
  };
  auto push = [&](SftExample e) {
    if (result.examples.size() >= config.target_size) return;
    if (e.prompt.find(e.target) != std::string::npos) {
      warn("dropped " + std::string(kind_name(e.kind)) + " example: target occurs in prompt");
      return;
    }
    result.examples.push_back(std::move(e));
  };

  for (std::size_t i = 0; i < triples.size() && result.examples.size() < config.target_size; ++i) {
    const XnliTriple& t = triples[i];
    const auto meta = [&] {
      nlohmann::ordered_json m;
      m["step"] = 1;
      m["source_index"] = i;
      m["anchor_lang"] = t.anchor_lang;
      m["quality"] = quality_name(t.quality);
      return m;
    };
    push(make_example(t.anchor, t.positive, Kind::kPositive, meta()));
    push(make_example(t.anchor, t.negative, Kind::kNegative, meta()));
  }

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  rng.shuffle(order);

  for (std::size_t idx : order) {
    if (result.examples.size() >= config.target_size) break;
    const ParallelPair& p = pairs[idx];
    const std::uint64_t pair_seed = mix_seed(config.seed, idx);
    for (Kind kind : {Kind::kPositive, Kind::kNegative}) {
      if (result.examples.size() >= config.target_size) break;
      std::string failure;
      const auto target = request_english(en_generator, p.english, kind,
                                          mix_seed(pair_seed, kind == Kind::kPositive ? 1 : 2), config,
                                          result.generator_calls, failure);
      if (!target) {
        warn("parallel pair " + std::to_string(idx) + " " + std::string(kind_name(kind)) + ": " + failure);
        continue;
      }
      nlohmann::ordered_json meta;
      meta["step"] = 2;
      meta["source_index"] = idx;
      meta["anchor_lang"] = p.foreign_lang;
      meta["quality"] = quality_name(p.quality);
      push(make_example(p.foreign, *target, kind, std::move(meta)));
    }
  }

  if (result.examples.size() < config.target_size) {
    warn("source material exhausted: built " + std::to_string(result.examples.size()) + " of " +
         std::to_string(config.target_size) + " examples");
  }
  return result;
}

}  // namespace synthcse::synth
