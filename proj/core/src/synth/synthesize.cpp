#include "synthcse/synth/synthesize.hpp"

#include <atomic>
#include <mutex>
#include <thread>
#include <vector>

#include "synthcse/common/atomic_file.hpp"
#include "synthcse/common/rng.hpp"
#include "synthcse/common/text.hpp"

namespace synthcse::synth {

std::string_view strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::kPrompting: return "prompting";
    case Strategy::kAdapterComposition: return "adapter_composition";
    case Strategy::kXlLora: return "xl_lora";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::kPrompting, Strategy::kAdapterComposition, Strategy::kXlLora}) {
    if (strategy_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) +
                              "' (expected prompting, adapter_composition or xl_lora)");
}

std::string_view variant_name(PromptingVariant variant) {
  return variant == PromptingVariant::kSeparate ? "separate" : "combined";
}

PromptingVariant parse_variant(std::string_view name) {
  if (name == "separate") return PromptingVariant::kSeparate;
  if (name == "combined") return PromptingVariant::kCombined;
  throw std::invalid_argument("unknown prompting variant '" + std::string(name) + "'");
}

Source source_for(Strategy strategy) {
  switch (strategy) {
    case Strategy::kPrompting: return Source::kPrompting;
    case Strategy::kAdapterComposition: return Source::kAdapterComposition;
    case Strategy::kXlLora: return Source::kXlLora;
  }
  return Source::kMock;
}

void SynthConfig::validate() const {
  if (parallelism == 0) throw std::invalid_argument("synth: parallelism must be at least 1");
  if (max_tokens == 0) throw std::invalid_argument("synth: max_tokens must be positive");
  if (strategy == Strategy::kPrompting) {
    pools.positive.validate();
    pools.negative.validate();
    pools.combined.validate();
  }
}

namespace {

enum : std::uint64_t { kPositiveStream = 1, kNegativeStream = 2, kCombinedStream = 3 };

struct Attempt {
  std::string positive;
  std::string negative;
  nlohmann::ordered_json prompts = nlohmann::ordered_json::array();
};

std::string request(GeneratorClient& client, const std::string& prompt, std::uint64_t seed,
                    const SynthConfig& config) {
  GenerationRequest req;
  req.prompt = prompt;
  req.max_tokens = config.max_tokens;
  req.temperature = config.temperature;
  req.seed = seed;
  return trim(client.generate(req).text);
}

nlohmann::ordered_json describe(const BuiltPrompt& built, std::string_view pool) {
  nlohmann::ordered_json j;
  j["pool"] = pool;
  j["opening"] = built.opening;
  j["examples"] = built.examples;
  return j;
}

// Throws TransportError; returns empty strings on unusable output.
Attempt run_attempt(const AnchorRecord& anchor, std::uint64_t prompt_seed, std::uint64_t gen_seed,
                    GeneratorClient& client, const SynthConfig& config) {
  Attempt a;
  if (config.strategy == Strategy::kPrompting) {
    auto spec_for = [&](const PromptSpec& base) {
      PromptSpec spec = base;
      spec.target_language = anchor.lang;
      spec.seed = prompt_seed;
      return spec;
    };
    if (config.variant == PromptingVariant::kCombined) {
      const BuiltPrompt built = build_syncse_prompt_detailed(anchor.text, spec_for(config.pools.combined));
      a.prompts.push_back(describe(built, "combined"));
      const auto parsed = parse_combined_output(request(client, built.text, mix_seed(gen_seed, kCombinedStream), config));
      if (parsed) {
        a.positive = parsed->positive;
        a.negative = parsed->negative;
      }
      return a;
    }
    const BuiltPrompt pos = build_syncse_prompt_detailed(anchor.text, spec_for(config.pools.positive));
    const BuiltPrompt neg = build_syncse_prompt_detailed(anchor.text, spec_for(config.pools.negative));
    a.prompts.push_back(describe(pos, "positive"));
    a.prompts.push_back(describe(neg, "negative"));
    a.positive = request(client, pos.text, mix_seed(gen_seed, kPositiveStream), config);
    a.negative = request(client, neg.text, mix_seed(gen_seed, kNegativeStream), config);
    return a;
  }
  const std::string out_lang = config.strategy == Strategy::kXlLora ? "en" : anchor.lang;
  a.positive = request(client, build_zero_shot_prompt(anchor.text, Kind::kPositive, out_lang),
                       mix_seed(gen_seed, kPositiveStream), config);
  a.negative = request(client, build_zero_shot_prompt(anchor.text, Kind::kNegative, out_lang),
                       mix_seed(gen_seed, kNegativeStream), config);
  return a;
}

}  // namespace

TripletOutcome generate_triplet(const AnchorRecord& anchor, std::size_t anchor_index, GeneratorClient& client,
                                const SynthConfig& config) {
  TripletOutcome out;
  Triplet& partial = out.reject.partial;
  partial.anchor = anchor.text;
  partial.anchor_lang = anchor.lang;
  partial.pair_lang = config.strategy == Strategy::kXlLora ? "en" : anchor.lang;
  partial.source = source_for(config.strategy);

  if (trim(anchor.text).empty()) {
    out.reject.reason = "empty_anchor";
    return out;
  }

  const std::uint64_t anchor_seed = mix_seed(config.seed, anchor_index);
  const std::uint64_t prompt_seed = mix_seed(anchor_seed, 0x70726f6d7074ULL);
  std::string reason = "no_attempt";
  for (std::size_t attempt = 0; attempt <= config.max_retries; ++attempt) {
    ++out.attempts;
    const std::uint64_t gen_seed = mix_seed(anchor_seed, attempt + 1);
    Attempt a;
    try {
      a = run_attempt(anchor, prompt_seed, gen_seed, client, config);
    } catch (const TransportError&) {
      reason = "transport_error";
      continue;
    }
    partial.positive = a.positive;
    partial.negative = a.negative;
    if (a.positive.empty() || a.negative.empty()) {
      reason = "empty_output";
      continue;
    }
    if (a.positive == a.negative) {
      reason = "identical_pair";
      continue;
    }
    Triplet t = partial;
    t.meta["anchor_index"] = anchor_index;
    t.meta["strategy"] = strategy_name(config.strategy);
    if (config.strategy == Strategy::kPrompting) t.meta["variant"] = variant_name(config.variant);
    t.meta["prompt_seed"] = prompt_seed;
    t.meta["generation_seed"] = gen_seed;
    t.meta["attempts"] = out.attempts;
    if (!a.prompts.empty()) t.meta["prompts"] = a.prompts;
    t.validate();
    out.triplet = std::move(t);
    return out;
  }
  partial.meta["anchor_index"] = anchor_index;
  partial.meta["attempts"] = out.attempts;
  out.reject.reason = reason;
  return out;
}

SynthSummary synthesize_dataset(std::span<const AnchorRecord> anchors, GeneratorClient& client,
                                const SynthConfig& config, const std::filesystem::path& dataset_path,
                                const std::filesystem::path& rejects_path) {
  config.validate();
  if (anchors.empty()) throw std::invalid_argument("synth: no anchors");
  AtomicFile dataset(dataset_path);
  AtomicFile rejects(rejects_path);

  SynthSummary summary;
  std::vector<std::optional<TripletOutcome>> slots(anchors.size());
  std::size_t next_to_write = 0;
  std::mutex mu;
  std::atomic<std::size_t> next_to_claim{0};

  // Flushes the contiguous prefix of finished outcomes. Caller holds mu.
  auto drain = [&] {
    while (next_to_write < slots.size() && slots[next_to_write]) {
      const TripletOutcome& o = *slots[next_to_write];
      if (o.triplet) {
        dataset.stream() << to_json(*o.triplet).dump() << '\n';
        ++summary.accepted;
      } else {
        rejects.stream() << to_json(o.reject).dump() << '\n';
        ++summary.rejected;
        ++summary.reasons[o.reject.reason];
      }
      slots[next_to_write].reset();
      ++next_to_write;
    }
  };

  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next_to_claim.fetch_add(1);
      if (i >= anchors.size()) return;
      try {
        TripletOutcome o = generate_triplet(anchors[i], i, client, config);
        std::lock_guard lock(mu);
        slots[i] = std::move(o);
        drain();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next_to_claim.store(anchors.size());
        return;
      }
    }
  };

  const std::size_t n_threads = std::min(config.parallelism, anchors.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  dataset.commit();
  rejects.commit();
  return summary;
}

}  // namespace synthcse::synth
