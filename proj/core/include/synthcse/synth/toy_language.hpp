#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synthcse/common/rng.hpp"

// A small synthetic English fragment with known semantics. Sentences have the
// shape "the ADJ SUBJ VERB the OBJ [in the PLACE]", optionally with the place
// phrase fronted. Every content word has two surface forms; adjective and
// verb senses come in antonym pairs (2k, 2k+1). Graded similarity between
// two meanings serves as a gold STS score.
namespace synthcse::synth::toy {

enum class Slot { kAdjective, kSubject, kVerb, kObject, kPlace };

struct Meaning {
  int adjective = 0;
  int subject = 0;
  int verb = 0;
  int object = 0;
  int place = -1;  // -1: no place phrase

  bool operator==(const Meaning&) const = default;
};

struct WordInfo {
  Slot slot;
  int sense;
  int form;
};

std::size_t concept_count(Slot slot);
const std::vector<std::string>& forms(Slot slot, int sense);
// Antonym sense for adjectives and verbs, -1 for other slots.
int antonym(Slot slot, int sense);
std::optional<WordInfo> lookup(std::string_view word);

Meaning random_meaning(Rng& rng, double place_probability = 0.7);

// Surface forms are drawn independently per word; reorder_probability is the
// chance of fronting the place phrase when there is one.
std::string realize(const Meaning& meaning, Rng& rng, double reorder_probability = 0.3);

// Inverse of realize(). "not" directly before the verb flips it to its
// antonym. Returns nullopt for anything outside the fragment.
std::optional<Meaning> parse(std::string_view text);

// Gold similarity on [0, 5].
double similarity(const Meaning& a, const Meaning& b);

std::vector<std::string> sentences(std::size_t count, std::uint64_t seed);

struct ScoredPair {
  std::string a;
  std::string b;
  double score;  // [0, 5]
};

// Pairs built by editing a random meaning; about one pair in ten is unrelated.
std::vector<ScoredPair> sts_pairs(std::size_t count, std::uint64_t seed);

}  // namespace synthcse::synth::toy
