#include "synthcse/synth/records.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include "synthcse/common/atomic_file.hpp"
#include "synthcse/common/text.hpp"

namespace synthcse::synth {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view source_name(Source source) {
  switch (source) {
    case Source::kAnnotated: return "annotated";
    case Source::kPrompting: return "prompting";
    case Source::kAdapterComposition: return "adapter_composition";
    case Source::kXlLora: return "xl_lora";
    case Source::kMock: return "mock";
  }
  return "unknown";
}

Source parse_source(std::string_view name) {
  for (Source s : {Source::kAnnotated, Source::kPrompting, Source::kAdapterComposition, Source::kXlLora, Source::kMock}) {
    if (source_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown triplet source '" + std::string(name) + "'");
}

std::string_view quality_name(Quality quality) { return quality == Quality::kHuman ? "human" : "machine"; }

Quality parse_quality(std::string_view name) {
  if (name == "human") return Quality::kHuman;
  if (name == "machine") return Quality::kMachine;
  throw std::invalid_argument("unknown translation quality '" + std::string(name) + "'");
}

std::string_view kind_name(Kind kind) { return kind == Kind::kPositive ? "positive" : "negative"; }

std::string language_name(std::string_view code_or_name) {
  static const std::map<std::string, std::string, std::less<>> kNames = {
      {"af", "Afrikaans"}, {"am", "Amharic"},  {"ar", "Arabic"},     {"de", "German"},    {"en", "English"},
      {"es", "Spanish"},   {"fr", "French"},   {"ha", "Hausa"},      {"hi", "Hindi"},     {"id", "Indonesian"},
      {"ig", "Igbo"},      {"kin", "Kinyarwanda"}, {"mr", "Marathi"}, {"ru", "Russian"},  {"sw", "Swahili"},
      {"te", "Telugu"},    {"th", "Thai"},     {"tr", "Turkish"},    {"ur", "Urdu"},      {"vi", "Vietnamese"},
      {"yo", "Yoruba"},    {"zh", "Chinese"},  {"ary", "Moroccan Arabic"}, {"arq", "Algerian Arabic"},
  };
  const auto it = kNames.find(code_or_name);
  return it == kNames.end() ? std::string(code_or_name) : it->second;
}

void Triplet::validate() const {
  if (trim(anchor).empty()) throw std::invalid_argument("triplet: empty anchor");
  if (trim(positive).empty()) throw std::invalid_argument("triplet: empty positive for anchor '" + anchor + "'");
  if (trim(negative).empty()) throw std::invalid_argument("triplet: empty negative for anchor '" + anchor + "'");
  if (positive == negative) throw std::invalid_argument("triplet: positive equals negative for anchor '" + anchor + "'");
  if (source == Source::kXlLora && pair_lang != "en") {
    throw std::invalid_argument("triplet: xl_lora pairs must be English, got pair_lang '" + pair_lang + "'");
  }
}

void ParallelPair::validate() const {
  if (trim(english).empty() || trim(foreign).empty()) {
    throw std::invalid_argument("parallel pair: both sides must be nonempty");
  }
}

void SftExample::validate() const {
  if (trim(target).empty()) throw std::invalid_argument("sft example: empty target");
  if (prompt.find(target) != std::string::npos) {
    throw std::invalid_argument("sft example: target '" + target + "' occurs in its prompt");
  }
}

ordered_json to_json(const Triplet& t) {
  ordered_json j;
  j["anchor"] = t.anchor;
  j["positive"] = t.positive;
  j["negative"] = t.negative;
  j["anchor_lang"] = t.anchor_lang;
  j["pair_lang"] = t.pair_lang;
  j["source"] = source_name(t.source);
  j["meta"] = t.meta;
  return j;
}

Triplet triplet_from_json(const json& j) {
  Triplet t;
  t.anchor = j.at("anchor").get<std::string>();
  t.positive = j.value("positive", "");
  t.negative = j.value("negative", "");
  t.anchor_lang = j.value("anchor_lang", "en");
  t.pair_lang = j.value("pair_lang", t.anchor_lang);
  t.source = parse_source(j.value("source", "annotated"));
  if (j.contains("meta")) t.meta = ordered_json::parse(j.at("meta").dump());
  return t;
}

ordered_json to_json(const RejectRecord& r) {
  ordered_json j = to_json(r.partial);
  j["reason"] = r.reason;
  return j;
}

ordered_json to_json(const SftExample& e) {
  ordered_json j;
  j["prompt"] = e.prompt;
  j["target"] = e.target;
  j["kind"] = kind_name(e.kind);
  j["meta"] = e.meta;
  return j;
}

SftExample sft_from_json(const json& j) {
  SftExample e;
  e.prompt = j.at("prompt").get<std::string>();
  e.target = j.at("target").get<std::string>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind != "positive" && kind != "negative") throw std::invalid_argument("sft example: unknown kind '" + kind + "'");
  e.kind = kind == "positive" ? Kind::kPositive : Kind::kNegative;
  if (j.contains("meta")) e.meta = ordered_json::parse(j.at("meta").dump());
  return e;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

namespace {

template <typename T, typename F>
std::vector<T> load_rows(const std::filesystem::path& path, F&& convert) {
  std::vector<T> out;
  std::size_t row = 0;
  for (const json& j : read_jsonl(path)) {
    ++row;
    try {
      out.push_back(convert(j));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ": record " + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
void write_rows(const std::filesystem::path& path, std::span<const T> rows) {
  AtomicFile file(path);
  for (const T& r : rows) file.stream() << to_json(r).dump() << '\n';
  file.commit();
}

}  // namespace

std::vector<Triplet> load_triplets(const std::filesystem::path& path) {
  return load_rows<Triplet>(path, [](const json& j) { return triplet_from_json(j); });
}

void write_triplets(const std::filesystem::path& path, std::span<const Triplet> triplets) {
  for (const Triplet& t : triplets) t.validate();
  write_rows(path, triplets);
}

std::vector<AnchorRecord> load_anchors(const std::filesystem::path& path, std::string_view default_lang) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open anchors file '" + path.string() + "'");
  std::vector<AnchorRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '{') {
      try {
        const json j = json::parse(t);
        out.push_back({j.at("text").get<std::string>(), j.value("lang", std::string(default_lang))});
      } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    } else {
      out.push_back({t, std::string(default_lang)});
    }
  }
  return out;
}

std::vector<XnliTriple> load_xnli_triples(const std::filesystem::path& path) {
  return load_rows<XnliTriple>(path, [](const json& j) {
    XnliTriple t;
    t.anchor = j.at("anchor").get<std::string>();
    t.anchor_lang = j.at("anchor_lang").get<std::string>();
    t.positive = j.at("positive").get<std::string>();
    t.negative = j.at("negative").get<std::string>();
    t.quality = parse_quality(j.value("quality", "human"));
    return t;
  });
}

std::vector<ParallelPair> load_parallel_pairs(const std::filesystem::path& path) {
  return load_rows<ParallelPair>(path, [](const json& j) {
    ParallelPair p;
    p.english = j.at("english").get<std::string>();
    p.foreign = j.at("foreign").get<std::string>();
    p.foreign_lang = j.at("foreign_lang").get<std::string>();
    p.quality = parse_quality(j.value("quality", "human"));
    p.validate();
    return p;
  });
}

std::vector<SftExample> load_sft(const std::filesystem::path& path) {
  return load_rows<SftExample>(path, [](const json& j) { return sft_from_json(j); });
}

void write_sft(const std::filesystem::path& path, std::span<const SftExample> examples) {
  for (const SftExample& e : examples) e.validate();
  write_rows(path, examples);
}

}  // namespace synthcse::synth
