#include "synthcse/synth/toy_language.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "synthcse/common/text.hpp"

namespace synthcse::synth::toy {

namespace {

using Forms = std::vector<std::vector<std::string>>;

const Forms& table(Slot slot) {
  static const Forms kAdjectives = {
      {"happy", "glad"},  {"sad", "unhappy"},    {"big", "large"},    {"small", "little"},
      {"fast", "quick"},  {"slow", "sluggish"},  {"young", "youthful"}, {"old", "elderly"},
      {"calm", "peaceful"}, {"angry", "furious"}, {"rich", "wealthy"}, {"poor", "needy"},
  };
  static const Forms kSubjects = {
      {"dog", "hound"},  {"cat", "kitty"},   {"man", "gentleman"}, {"woman", "lady"},
      {"child", "kid"},  {"farmer", "grower"}, {"teacher", "tutor"}, {"doctor", "physician"},
  };
  static const Forms kVerbs = {
      {"likes", "enjoys"},  {"hates", "dislikes"},   {"opens", "unlocks"}, {"closes", "shuts"},
      {"finds", "discovers"}, {"loses", "misplaces"}, {"builds", "constructs"}, {"breaks", "destroys"},
      {"buys", "purchases"}, {"sells", "vends"},      {"accepts", "takes"}, {"refuses", "rejects"},
  };
  static const Forms kObjects = {
      {"box", "crate"},  {"car", "automobile"}, {"door", "gate"},     {"book", "novel"},
      {"house", "home"}, {"gift", "present"},   {"letter", "note"},   {"picture", "photo"},
  };
  static const Forms kPlaces = {
      {"forest", "woods"}, {"city", "town"},     {"shop", "store"},
      {"street", "road"},  {"school", "academy"}, {"river", "stream"},
  };
  switch (slot) {
    case Slot::kAdjective: return kAdjectives;
    case Slot::kSubject: return kSubjects;
    case Slot::kVerb: return kVerbs;
    case Slot::kObject: return kObjects;
    case Slot::kPlace: return kPlaces;
  }
  throw std::logic_error("unknown slot");
}

const std::map<std::string, WordInfo, std::less<>>& index() {
  static const auto kIndex = [] {
    std::map<std::string, WordInfo, std::less<>> m;
    for (Slot slot : {Slot::kAdjective, Slot::kSubject, Slot::kVerb, Slot::kObject, Slot::kPlace}) {
      const Forms& t = table(slot);
      for (std::size_t c = 0; c < t.size(); ++c) {
        for (std::size_t f = 0; f < t[c].size(); ++f) {
          const bool fresh = m.emplace(t[c][f], WordInfo{slot, static_cast<int>(c), static_cast<int>(f)}).second;
          if (!fresh) throw std::logic_error("toy lexicon word '" + t[c][f] + "' is ambiguous");
        }
      }
    }
    return m;
  }();
  return kIndex;
}

bool has_antonyms(Slot slot) { return slot == Slot::kAdjective || slot == Slot::kVerb; }

const std::string& pick(Slot slot, int sense, Rng& rng) {
  const auto& f = forms(slot, sense);
  return f[rng.index(f.size())];
}

int other_concept(Slot slot, int sense, Rng& rng, bool avoid_antonym) {
  const int n = static_cast<int>(concept_count(slot));
  for (;;) {
    const int c = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
    if (c == sense) continue;
    if (avoid_antonym && c == antonym(slot, sense)) continue;
    return c;
  }
}

double pair_penalty(Slot slot, int a, int b, double differ) {
  if (a == b) return 0.0;
  if (has_antonyms(slot) && antonym(slot, a) == b) return 2.0;
  return differ;
}

}  // namespace

std::size_t concept_count(Slot slot) { return table(slot).size(); }

const std::vector<std::string>& forms(Slot slot, int sense) {
  const Forms& t = table(slot);
  if (sense < 0 || static_cast<std::size_t>(sense) >= t.size()) throw std::out_of_range("toy sense out of range");
  return t[static_cast<std::size_t>(sense)];
}

int antonym(Slot slot, int sense) {
  if (!has_antonyms(slot)) return -1;
  return sense ^ 1;
}

std::optional<WordInfo> lookup(std::string_view word) {
  const auto& m = index();
  const auto it = m.find(word);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

Meaning random_meaning(Rng& rng, double place_probability) {
  Meaning m;
  m.adjective = static_cast<int>(rng.index(concept_count(Slot::kAdjective)));
  m.subject = static_cast<int>(rng.index(concept_count(Slot::kSubject)));
  m.verb = static_cast<int>(rng.index(concept_count(Slot::kVerb)));
  m.object = static_cast<int>(rng.index(concept_count(Slot::kObject)));
  m.place = rng.bernoulli(place_probability) ? static_cast<int>(rng.index(concept_count(Slot::kPlace))) : -1;
  return m;
}

std::string realize(const Meaning& meaning, Rng& rng, double reorder_probability) {
  std::string core = "the " + pick(Slot::kAdjective, meaning.adjective, rng) + " " +
                     pick(Slot::kSubject, meaning.subject, rng) + " " + pick(Slot::kVerb, meaning.verb, rng) +
                     " the " + pick(Slot::kObject, meaning.object, rng);
  if (meaning.place < 0) return core;
  const std::string place = "in the " + pick(Slot::kPlace, meaning.place, rng);
  if (rng.bernoulli(reorder_probability)) return place + " " + core;
  return core + " " + place;
}

std::optional<Meaning> parse(std::string_view text) {
  const std::vector<std::string> tokens = word_tokens(text);
  std::optional<int> adjective, subject, verb, object, place;
  bool negate_next_verb = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (t == "the" || t == "in") continue;
    if (t == "not") {
      if (negate_next_verb) return std::nullopt;
      negate_next_verb = true;
      continue;
    }
    const auto info = lookup(t);
    if (!info) return std::nullopt;
    if (negate_next_verb && info->slot != Slot::kVerb) return std::nullopt;
    std::optional<int>* target = nullptr;
    switch (info->slot) {
      case Slot::kAdjective: target = &adjective; break;
      case Slot::kSubject: target = &subject; break;
      case Slot::kVerb: target = &verb; break;
      case Slot::kObject: target = &object; break;
      case Slot::kPlace: target = &place; break;
    }
    if (target->has_value()) return std::nullopt;
    int sense = info->sense;
    if (negate_next_verb) {
      sense = antonym(Slot::kVerb, sense);
      negate_next_verb = false;
    }
    *target = sense;
  }
  if (negate_next_verb || !adjective || !subject || !verb || !object) return std::nullopt;
  return Meaning{*adjective, *subject, *verb, *object, place.value_or(-1)};
}

double similarity(const Meaning& a, const Meaning& b) {
  double penalty = 0.0;
  penalty += pair_penalty(Slot::kSubject, a.subject, b.subject, 1.5);
  penalty += pair_penalty(Slot::kObject, a.object, b.object, 1.0);
  penalty += a.place == b.place ? 0.0 : 0.5;
  penalty += pair_penalty(Slot::kAdjective, a.adjective, b.adjective, 1.0);
  penalty += pair_penalty(Slot::kVerb, a.verb, b.verb, 1.0);
  return std::clamp(5.0 - penalty, 0.0, 5.0);
}

std::vector<std::string> sentences(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(realize(random_meaning(rng), rng));
  return out;
}

std::vector<ScoredPair> sts_pairs(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ScoredPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Meaning a = random_meaning(rng);
    Meaning b = a;
    if (rng.bernoulli(0.1)) {
      b = random_meaning(rng);
    } else {
      if (rng.bernoulli(0.3)) b.subject = other_concept(Slot::kSubject, a.subject, rng, false);
      if (rng.bernoulli(0.3)) b.object = other_concept(Slot::kObject, a.object, rng, false);
      if (rng.bernoulli(0.25)) {
        b.place = a.place < 0 || rng.bernoulli(0.3) ? -1 : other_concept(Slot::kPlace, a.place, rng, false);
        if (b.place < 0 && a.place < 0) b.place = static_cast<int>(rng.index(concept_count(Slot::kPlace)));
      }
      const double adj = rng.uniform();
      if (adj < 0.25) {
        b.adjective = antonym(Slot::kAdjective, a.adjective);
      } else if (adj < 0.4) {
        b.adjective = other_concept(Slot::kAdjective, a.adjective, rng, true);
      }
      const double verb = rng.uniform();
      if (verb < 0.25) {
        b.verb = antonym(Slot::kVerb, a.verb);
      } else if (verb < 0.4) {
        b.verb = other_concept(Slot::kVerb, a.verb, rng, true);
      }
    }
    std::string sa = realize(a, rng);
    std::string sb = realize(b, rng);
    out.push_back({std::move(sa), std::move(sb), similarity(a, b)});
  }
  return out;
}

}  // namespace synthcse::synth::toy
