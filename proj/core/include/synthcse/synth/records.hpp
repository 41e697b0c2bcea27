#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace synthcse::synth {

enum class Source { kAnnotated, kPrompting, kAdapterComposition, kXlLora, kMock };
enum class Quality { kHuman, kMachine };
enum class Kind { kPositive, kNegative };

std::string_view source_name(Source source);
Source parse_source(std::string_view name);
std::string_view quality_name(Quality quality);
Quality parse_quality(std::string_view name);
std::string_view kind_name(Kind kind);

// Display name for a language code ("hi" -> "Hindi"); unknown codes and
// names that are already spelled out are returned unchanged.
std::string language_name(std::string_view code_or_name);

struct Triplet {
  std::string anchor;
  std::string positive;
  std::string negative;
  std::string anchor_lang;
  std::string pair_lang;
  Source source = Source::kMock;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  // anchor, positive, negative nonempty; positive != negative; xl_lora
  // triplets carry English pairs.
  void validate() const;
};

struct RejectRecord {
  Triplet partial;  // whatever was produced before giving up
  std::string reason;
};

struct AnchorRecord {
  std::string text;
  std::string lang;
};

// A foreign-language anchor with human (or machine) translated English
// positive and negative, as in a translated NLI test set.
struct XnliTriple {
  std::string anchor;
  std::string anchor_lang;
  std::string positive;
  std::string negative;
  Quality quality = Quality::kHuman;
};

struct ParallelPair {
  std::string english;
  std::string foreign;
  std::string foreign_lang;
  Quality quality = Quality::kHuman;

  void validate() const;
};

struct SftExample {
  std::string prompt;
  std::string target;
  Kind kind = Kind::kPositive;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  // The target must not occur anywhere in the prompt.
  void validate() const;
};

nlohmann::ordered_json to_json(const Triplet& t);
Triplet triplet_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RejectRecord& r);
nlohmann::ordered_json to_json(const SftExample& e);
SftExample sft_from_json(const nlohmann::json& j);

// One JSON object per line. Blank lines are skipped; a malformed line throws
// with its 1-based line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

std::vector<Triplet> load_triplets(const std::filesystem::path& path);
void write_triplets(const std::filesystem::path& path, std::span<const Triplet> triplets);

// JSONL objects with "text" and optional "lang", or plain text lines (which
// take default_lang).
std::vector<AnchorRecord> load_anchors(const std::filesystem::path& path, std::string_view default_lang = "en");
std::vector<XnliTriple> load_xnli_triples(const std::filesystem::path& path);
std::vector<ParallelPair> load_parallel_pairs(const std::filesystem::path& path);
std::vector<SftExample> load_sft(const std::filesystem::path& path);
void write_sft(const std::filesystem::path& path, std::span<const SftExample> examples);

}  // namespace synthcse::synth
