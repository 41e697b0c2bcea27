#include "synthcse/eval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "synthcse/common/atomic_file.hpp"
#include "synthcse/common/hash.hpp"
#include "synthcse/common/text.hpp"

namespace synthcse::eval {

using nlohmann::json;

void StsPair::validate() const {
  if (!(scale_max > scale_min)) throw std::invalid_argument("sts pair: scale_max must exceed scale_min");
  if (!std::isfinite(gold_score)) throw std::invalid_argument("sts pair: non-finite gold score");
}

void RetrievalTask::validate() const {
  for (const auto& [qid, docs] : qrels) {
    if (queries.count(qid) == 0) throw std::invalid_argument("retrieval task: qrels query '" + qid + "' unknown");
    for (const std::string& d : docs) {
      if (corpus.count(d) == 0) {
        throw std::invalid_argument("retrieval task: qrels doc '" + d + "' for query '" + qid + "' not in corpus");
      }
    }
  }
  if (corpus.empty()) throw std::invalid_argument("retrieval task: empty corpus");
}

std::vector<StsPair> load_sts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open STS file '" + path.string() + "'");
  std::vector<StsPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      StsPair p;
      p.sentence_a = j.at("sentence_a").get<std::string>();
      p.sentence_b = j.at("sentence_b").get<std::string>();
      p.gold_score = j.at("gold_score").get<double>();
      p.scale_min = j.value("scale_min", 0.0);
      p.scale_max = j.value("scale_max", 5.0);
      p.validate();
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_sts(const std::filesystem::path& path, std::span<const StsPair> pairs) {
  AtomicFile file(path);
  for (const StsPair& p : pairs) {
    nlohmann::ordered_json j;
    j["sentence_a"] = p.sentence_a;
    j["sentence_b"] = p.sentence_b;
    j["gold_score"] = p.gold_score;
    j["scale_min"] = p.scale_min;
    j["scale_max"] = p.scale_max;
    file.stream() << j.dump() << '\n';
  }
  file.commit();
}

namespace {

std::vector<std::pair<std::string, std::string>> read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected a tab-separated pair");
    }
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::vector<double>> embed(const encoder::EncoderParams& params, const encoder::Vocab& vocab,
                                       const std::vector<std::string>& texts, encoder::Pooling pooling) {
  return encoder::encode_texts(params, vocab, texts, pooling);
}

json encoder_summary(const encoder::EncoderParams& params, encoder::Pooling pooling) {
  const auto& c = params.config;
  return {{"pooling", encoder::pooling_name(pooling)}, {"hidden", c.hidden_dim},   {"layers", c.num_layers},
          {"heads", c.num_heads},                     {"vocab", c.vocab_size}, {"max_seq_len", c.max_seq_len}};
}

}  // namespace

RetrievalTask load_retrieval(const std::filesystem::path& queries, const std::filesystem::path& corpus,
                             const std::filesystem::path& qrels) {
  RetrievalTask task;
  for (auto& [id, text] : read_tsv(queries)) {
    if (!task.queries.emplace(id, text).second) throw std::runtime_error("duplicate query id '" + id + "'");
  }
  for (auto& [id, text] : read_tsv(corpus)) {
    if (!task.corpus.emplace(id, text).second) throw std::runtime_error("duplicate doc id '" + id + "'");
  }
  for (auto& [qid, did] : read_tsv(qrels)) task.qrels[trim(qid)].insert(trim(did));
  task.validate();
  return task;
}

json EvalReport::to_json() const {
  json j;
  j["task"] = task;
  j["metrics"] = metrics;
  j["counts"] = counts;
  j["config"] = config;
  j["dataset_fingerprint"] = dataset_fingerprint;
  return j;
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  r.task = j.at("task").get<std::string>();
  r.metrics = j.at("metrics").get<std::map<std::string, double>>();
  r.counts = j.value("counts", std::map<std::string, std::size_t>{});
  r.config = j.value("config", json::object());
  r.dataset_fingerprint = j.value("dataset_fingerprint", "");
  return r;
}

std::string sts_fingerprint(std::span<const StsPair> pairs) {
  std::uint64_t h = fnv1a64("sts");
  for (const StsPair& p : pairs) {
    h = fnv1a64(p.sentence_a + '\t' + p.sentence_b + '\t' + format_double(p.gold_score) + '\t' +
                    format_double(p.scale_min) + '\t' + format_double(p.scale_max) + '\n',
                h);
  }
  return to_hex(h);
}

std::string retrieval_fingerprint(const RetrievalTask& task) {
  std::uint64_t h = fnv1a64("retrieval");
  for (const auto& [id, text] : task.queries) h = fnv1a64("q\t" + id + '\t' + text + '\n', h);
  for (const auto& [id, text] : task.corpus) h = fnv1a64("d\t" + id + '\t' + text + '\n', h);
  for (const auto& [qid, docs] : task.qrels) {
    for (const std::string& d : docs) h = fnv1a64("r\t" + qid + '\t' + d + '\n', h);
  }
  return to_hex(h);
}

EvalReport sts_eval(const encoder::EncoderParams& params, const encoder::Vocab& vocab, std::span<const StsPair> pairs,
                    encoder::Pooling pooling) {
  if (pairs.empty()) throw std::invalid_argument("sts_eval: no pairs");
  // Embed each distinct sentence once.
  std::map<std::string, std::size_t> slot;
  std::vector<std::string> texts;
  for (const StsPair& p : pairs) {
    p.validate();
    for (const std::string* s : {&p.sentence_a, &p.sentence_b}) {
      if (slot.emplace(*s, texts.size()).second) texts.push_back(*s);
    }
  }
  const auto emb = embed(params, vocab, texts, pooling);

  std::vector<double> predicted, gold;
  std::vector<Embedding> pos_a, pos_b;
  for (const StsPair& p : pairs) {
    const Embedding& a = emb[slot.at(p.sentence_a)];
    const Embedding& b = emb[slot.at(p.sentence_b)];
    predicted.push_back(cosine(a, b));
    gold.push_back(p.gold_score);
    if (p.normalized_score() >= kPositiveThreshold) {
      pos_a.push_back(a);
      pos_b.push_back(b);
    }
  }

  EvalReport r;
  r.task = "sts";
  r.metrics["spearman"] = spearman(predicted, gold);
  if (!pos_a.empty()) r.metrics["align"] = alignment(pos_a, pos_b);
  if (emb.size() >= 2) r.metrics["uniform"] = uniformity(emb);
  r.counts["pairs"] = pairs.size();
  r.counts["positive_pairs"] = pos_a.size();
  r.counts["sentences"] = texts.size();
  r.config = encoder_summary(params, pooling);
  r.dataset_fingerprint = sts_fingerprint(pairs);
  return r;
}

std::vector<std::string> rank_by_cosine(const Embedding& query, const std::map<std::string, Embedding>& corpus) {
  std::vector<std::pair<double, const std::string*>> scored;
  scored.reserve(corpus.size());
  for (const auto& [id, emb] : corpus) scored.emplace_back(cosine(query, emb), &id);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  std::vector<std::string> out;
  out.reserve(scored.size());
  for (const auto& s : scored) out.push_back(*s.second);
  return out;
}

EvalReport retrieval_eval(const encoder::EncoderParams& params, const encoder::Vocab& vocab, const RetrievalTask& task,
                          std::size_t k, encoder::Pooling pooling) {
  if (k == 0) throw std::invalid_argument("retrieval_eval: k must be at least 1");
  task.validate();
  std::vector<std::string> doc_ids, doc_texts;
  for (const auto& [id, text] : task.corpus) {
    doc_ids.push_back(id);
    doc_texts.push_back(text);
  }
  const auto doc_emb = embed(params, vocab, doc_texts, pooling);
  std::map<std::string, Embedding> corpus;
  for (std::size_t i = 0; i < doc_ids.size(); ++i) corpus.emplace(doc_ids[i], doc_emb[i]);

  std::vector<std::string> query_ids, query_texts;
  for (const auto& [id, text] : task.queries) {
    query_ids.push_back(id);
    query_texts.push_back(text);
  }
  const auto query_emb = embed(params, vocab, query_texts, pooling);

  double ndcg_total = 0.0, recall_total = 0.0;
  std::size_t scored = 0, skipped = 0;
  static const std::set<std::string> kNone;
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    const auto it = task.qrels.find(query_ids[q]);
    const std::set<std::string>& relevant = it == task.qrels.end() ? kNone : it->second;
    const auto ranked = rank_by_cosine(query_emb[q], corpus);
    const auto n = ndcg_at_k(ranked, relevant, k);
    const auto r = recall_at_k(ranked, relevant, k);
    if (!n || !r) {
      ++skipped;
      continue;
    }
    ndcg_total += *n;
    recall_total += *r;
    ++scored;
  }

  EvalReport rep;
  rep.task = "retrieval";
  const std::string suffix = "@" + std::to_string(k);
  if (scored > 0) {
    rep.metrics["ndcg" + suffix] = ndcg_total / static_cast<double>(scored);
    rep.metrics["recall" + suffix] = recall_total / static_cast<double>(scored);
  }
  rep.counts["queries_scored"] = scored;
  rep.counts["queries_without_relevant"] = skipped;
  rep.counts["documents"] = corpus.size();
  rep.config = encoder_summary(params, pooling);
  rep.config["k"] = k;
  rep.dataset_fingerprint = retrieval_fingerprint(task);
  return rep;
}

}  // namespace synthcse::eval
