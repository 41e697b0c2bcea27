#include "synthcse/synth/prompts.hpp"

#include <stdexcept>

#include "synthcse/common/atomic_file.hpp"
#include "synthcse/common/rng.hpp"
#include "synthcse/common/text.hpp"

namespace synthcse::synth {

namespace {

// Replaces each "{name}" placeholder in a single left-to-right pass.
std::string substitute(std::string_view tmpl, std::string_view name, std::string_view value) {
  const std::string key = "{" + std::string(name) + "}";
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t hit = tmpl.find(key, pos);
    if (hit == std::string_view::npos) break;
    out.append(tmpl.substr(pos, hit - pos));
    out.append(value);
    pos = hit + key.size();
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string zero_shot_template(Kind kind) {
  const std::string label = kind == Kind::kPositive ? "entailment" : "contradiction";
  return "You are an expert at natural language inference. Given a premise, you should return an " + label +
         " sentence example (in {language}) to the premise. Return only the " + label +
         " sentence example without any preamble or explanation. Premise: {premise}.";
}

struct Seed {
  const char* premise;
  const char* entailment;
  const char* contradiction;
};

// Shared premises for all three pools.
constexpr Seed kSeeds[kExamplePoolSize] = {
    {"A woman is slicing tomatoes in a small kitchen.", "Someone is preparing vegetables.",
     "The woman is asleep on the sofa."},
    {"Two boys are kicking a ball across a muddy field.", "Children are playing outside.",
     "The boys are sitting quietly in a classroom."},
    {"The old bridge was closed after the storm damaged it.", "A storm caused damage to the bridge.",
     "The bridge stayed open because the storm missed it."},
    {"A man in a red jacket is waiting at the bus stop.", "A person is waiting for a bus.",
     "The man is driving his own car to work."},
    {"The museum opens at nine and closes at five.", "The museum has fixed opening hours.",
     "The museum is open all night."},
    {"She finished the marathon in under four hours.", "She completed a long race.",
     "She dropped out of the race after the first mile."},
    {"The children built a sandcastle near the water.", "Kids made something out of sand.",
     "The children stayed home and never saw the beach."},
    {"A dog is sleeping under the kitchen table.", "An animal is resting indoors.",
     "The dog is chasing a cat through the garden."},
    {"The farmer sold all of his apples at the market.", "The farmer found buyers for his fruit.",
     "Nobody bought any apples from the farmer."},
    {"The train was delayed by heavy snow.", "Bad weather slowed the train down.",
     "The train arrived early on a sunny day."},
    {"A group of friends is sharing a pizza.", "Some people are eating together.",
     "The friends are arguing and refuse to eat."},
    {"The teacher handed back the graded exams.", "Students received their test results.",
     "The teacher lost all of the exams."},
    {"An elderly couple is walking along the beach.", "Two older people are taking a walk.",
     "A young couple is swimming far from the shore."},
    {"The company hired twenty new engineers this year.", "The company grew its engineering staff.",
     "The company laid off all of its engineers."},
    {"A cyclist is riding up a steep hill.", "Someone is on a bicycle.",
     "The cyclist is coasting down a flat road."},
    {"The baby laughed when the puppy licked her hand.", "The baby was amused by the puppy.",
     "The baby cried because the puppy bit her."},
    {"Rain fell all afternoon and flooded the street.", "The street got wet from the rain.",
     "The street stayed dry all day."},
    {"A chef is tasting soup from a large pot.", "Someone is checking the flavor of food.",
     "The chef is washing dishes in the sink."},
};

PromptSpec make_pool(Kind kind) {
  PromptSpec spec;
  spec.strategy = PromptStrategy::kSyncsePartial;
  const bool pos = kind == Kind::kPositive;
  for (const Seed& s : kSeeds) spec.example_pool.push_back({s.premise, pos ? s.entailment : s.contradiction});
  if (pos) {
    spec.opening_variants = {
        "Rewrite the premise as a sentence that must be true whenever the premise is true.",
        "Write a sentence that follows from the premise, using different wording where you can.",
        "Give a shorter or more general statement that the premise entails.",
        "Describe the same situation as the premise in a new sentence that stays faithful to it.",
    };
    spec.closing_template =
        "Now write one entailment sentence for the premise below. Write it in {language}, keeping names, numbers "
        "and culturally specific details as they are. Return only the sentence.";
  } else {
    spec.opening_variants = {
        "Write a sentence that cannot be true if the premise is true.",
        "Change the premise into a sentence that contradicts it while staying on the same topic.",
        "Give a statement about the same scene that the premise rules out.",
        "Describe a situation that conflicts with the premise, using fresh wording rather than simple negation.",
    };
    spec.closing_template =
        "Now write one contradiction sentence for the premise below. Write it in {language}, keeping names, "
        "numbers and culturally specific details as they are. Return only the sentence.";
  }
  return spec;
}

PromptSpec make_combined_pool() {
  PromptSpec spec;
  spec.strategy = PromptStrategy::kSyncsePartial;
  for (const Seed& s : kSeeds) {
    spec.example_pool.push_back({s.premise, std::string("Positive: ") + s.entailment + "\nNegative: " + s.contradiction});
  }
  spec.opening_variants = {
      "For each premise, write one sentence it entails and one sentence it contradicts.",
      "Produce a faithful restatement and a conflicting statement for the premise.",
      "Give an entailed sentence and a contradicting sentence that stay on the premise's topic.",
      "Write two sentences about the premise: one that must be true and one that cannot be true.",
  };
  spec.closing_template =
      "Now write one entailment and one contradiction for the premise below, both in {language}, keeping names, "
      "numbers and culturally specific details as they are. Answer with two lines, \"Positive:\" then "
      "\"Negative:\".";
  return spec;
}

PromptSpec spec_from_json(const nlohmann::json& j) {
  PromptSpec spec;
  spec.strategy = PromptStrategy::kSyncsePartial;
  for (const auto& e : j.at("examples")) {
    spec.example_pool.push_back({e.at("premise").get<std::string>(), e.at("output").get<std::string>()});
  }
  spec.opening_variants = j.at("openings").get<std::vector<std::string>>();
  spec.closing_template = j.at("closing").get<std::string>();
  spec.validate();
  return spec;
}

nlohmann::json spec_to_json(const PromptSpec& spec) {
  nlohmann::json examples = nlohmann::json::array();
  for (const PromptExample& e : spec.example_pool) examples.push_back({{"premise", e.premise}, {"output", e.output}});
  return {{"openings", spec.opening_variants}, {"examples", examples}, {"closing", spec.closing_template}};
}

}  // namespace

void PromptSpec::validate() const {
  if (strategy != PromptStrategy::kSyncsePartial) return;
  if (example_pool.size() != kExamplePoolSize) {
    throw std::invalid_argument("prompt spec: example pool must have " + std::to_string(kExamplePoolSize) +
                                " entries, got " + std::to_string(example_pool.size()));
  }
  if (opening_variants.size() != kOpeningCount) {
    throw std::invalid_argument("prompt spec: need " + std::to_string(kOpeningCount) + " opening variants, got " +
                                std::to_string(opening_variants.size()));
  }
}

BuiltPrompt build_syncse_prompt_detailed(std::string_view anchor, const PromptSpec& spec) {
  if (spec.strategy != PromptStrategy::kSyncsePartial) {
    throw std::invalid_argument("build_syncse_prompt: spec strategy must be syncse_partial");
  }
  spec.validate();
  Rng rng(spec.seed);
  BuiltPrompt built;
  built.opening = rng.index(kOpeningCount);
  built.examples = rng.sample_without_replacement(kExamplePoolSize, kExamplesPerPrompt);

  std::string& text = built.text;
  text = spec.opening_variants[built.opening];
  text += "\n\n";
  for (std::size_t idx : built.examples) {
    const PromptExample& e = spec.example_pool[idx];
    text += "Example premise: " + e.premise + "\nOutput: " + e.output + "\n\n";
  }
  text += substitute(spec.closing_template, "language", language_name(spec.target_language));
  text += "\nPremise: ";
  text += anchor;
  text += '.';
  return built;
}

std::string build_syncse_prompt(std::string_view anchor, const PromptSpec& spec) {
  return build_syncse_prompt_detailed(anchor, spec).text;
}

std::string build_zero_shot_prompt(std::string_view anchor, Kind kind, std::string_view output_language) {
  const std::string tmpl = zero_shot_template(kind);
  // Language first, then the premise; the premise goes in last so its
  // contents are never scanned for placeholders.
  const std::string with_language = substitute(tmpl, "language", language_name(output_language));
  const std::size_t slot = with_language.rfind("{premise}");
  std::string out = with_language.substr(0, slot);
  out += anchor;
  out += with_language.substr(slot + std::string_view("{premise}").size());
  return out;
}

PromptPools default_prompt_pools() {
  return {make_pool(Kind::kPositive), make_pool(Kind::kNegative), make_combined_pool()};
}

PromptPools prompt_pools_from_json(const nlohmann::json& j) {
  return {spec_from_json(j.at("positive")), spec_from_json(j.at("negative")), spec_from_json(j.at("combined"))};
}

nlohmann::json to_json(const PromptPools& pools) {
  return {{"positive", spec_to_json(pools.positive)},
          {"negative", spec_to_json(pools.negative)},
          {"combined", spec_to_json(pools.combined)}};
}

PromptPools load_prompt_pools(const std::filesystem::path& path) {
  try {
    return prompt_pools_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("prompt pools '" + path.string() + "': " + e.what());
  }
}

std::optional<CombinedOutput> parse_combined_output(std::string_view text) {
  std::optional<std::string> pos, neg;
  for (const std::string& raw : split(text, '\n')) {
    const std::string line = trim(raw);
    const std::string lower = to_lower_ascii(line);
    if (lower.rfind("positive:", 0) == 0) {
      pos = trim(std::string_view(line).substr(9));
    } else if (lower.rfind("negative:", 0) == 0) {
      neg = trim(std::string_view(line).substr(9));
    }
  }
  if (!pos || !neg || pos->empty() || neg->empty()) return std::nullopt;
  return CombinedOutput{*pos, *neg};
}

}  // namespace synthcse::synth
