#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthcse/encoder/encoder.hpp"
#include "synthcse/encoder/vocab.hpp"
#include "synthcse/eval/metrics.hpp"

namespace synthcse::eval {

inline constexpr double kPositiveThreshold = 0.8;

struct StsPair {
  std::string sentence_a;
  std::string sentence_b;
  double gold_score = 0.0;
  double scale_min = 0.0;
  double scale_max = 5.0;

  double normalized_score() const { return (gold_score - scale_min) / (scale_max - scale_min); }
  void validate() const;
};

struct RetrievalTask {
  std::map<std::string, std::string> queries;
  std::map<std::string, std::string> corpus;
  std::map<std::string, std::set<std::string>> qrels;

  // Every qrels query and document id must exist.
  void validate() const;
};

std::vector<StsPair> load_sts(const std::filesystem::path& path);
void write_sts(const std::filesystem::path& path, std::span<const StsPair> pairs);
// Tab-separated "id<TAB>text" and "query_id<TAB>doc_id" files.
RetrievalTask load_retrieval(const std::filesystem::path& queries, const std::filesystem::path& corpus,
                             const std::filesystem::path& qrels);

struct EvalReport {
  std::string task;  // "sts" or "retrieval"
  std::map<std::string, double> metrics;
  std::map<std::string, std::size_t> counts;
  nlohmann::json config = nlohmann::json::object();
  std::string dataset_fingerprint;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// Cosine of each pair against gold; alignment over pairs with normalized
// gold >= 0.8 (omitted when there are none); uniformity over the distinct
// sentences.
EvalReport sts_eval(const encoder::EncoderParams& params, const encoder::Vocab& vocab, std::span<const StsPair> pairs,
                    encoder::Pooling pooling);

// Score-descending ranking of doc ids; equal scores go to the smaller id.
std::vector<std::string> rank_by_cosine(const Embedding& query, const std::map<std::string, Embedding>& corpus);

EvalReport retrieval_eval(const encoder::EncoderParams& params, const encoder::Vocab& vocab, const RetrievalTask& task,
                          std::size_t k, encoder::Pooling pooling);

std::string sts_fingerprint(std::span<const StsPair> pairs);
std::string retrieval_fingerprint(const RetrievalTask& task);

}  // namespace synthcse::eval
