#include <cmath>
#include <fstream>

#include "metric_oracles.hpp"
#include "synthcse/encoder/encoder.hpp"
#include "synthcse/eval/aggregate.hpp"
#include "synthcse/eval/harness.hpp"
#include "synthcse/eval/metrics.hpp"
#include "synthcse/synth/toy_language.hpp"
#include "test_support.hpp"

namespace synthcse::eval {
namespace {

using synthcse::testing::random_vector;

std::vector<Embedding> random_embeddings(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<Embedding> out(n);
  for (auto& e : out) e = random_vector(rng, d);
  return out;
}

// ---- spearman --------------------------------------------------------------

TEST(Spearman, HandExamples) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(spearman(x, x), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{9, 7, 5, 1}), -1.0);
  EXPECT_NEAR(spearman(x, std::vector<double>{2, 1, 4, 3}), 0.6, 1e-12);
}

TEST(Spearman, TiesShareAverageRanks) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 10, 30}), (std::vector<double>{1.5, 3, 1.5, 4}));
}

TEST(Spearman, ZeroVarianceIsAnError) {
  EXPECT_THROW(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), std::domain_error);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
  EXPECT_THROW(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Spearman, MatchesOracleWithTies) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(15);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.index(5));
      y[i] = static_cast<double>(rng.index(5));
    }
    x[0] = 0;
    x[1] = 1;
    y[0] = 4;
    y[1] = 3;
    EXPECT_NEAR(spearman(x, y), oracle::spearman(x, y), 1e-10);
  }
}

TEST(Spearman, SymmetricAndMonotoneInvariant) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.index(10);
    const auto x = random_vector(rng, n), y = random_vector(rng, n);
    std::vector<double> fx(n);
    for (std::size_t i = 0; i < n; ++i) fx[i] = std::exp(3 * x[i]) + 7;
    EXPECT_EQ(spearman(x, y), spearman(y, x));
    EXPECT_NEAR(spearman(fx, y), spearman(x, y), 1e-12);
  }
}

// ---- dice ------------------------------------------------------------------

TEST(Dice, HandExamples) {
  EXPECT_EQ(dice("the cat sat", "the cat sat"), 1.0);
  EXPECT_EQ(dice("a b", "c d"), 0.0);
  EXPECT_NEAR(dice("the cat sat", "the cat ran"), 0.6667, 1e-4);
  EXPECT_EQ(dice("", ""), 1.0);
  EXPECT_EQ(dice("The CAT, sat.", "the cat sat"), 1.0);
}

TEST(Dice, MatchesOracle) {
  const std::vector<std::string> words = {"the", "The", "cat,", "dog", "runs.", "ran", "(a)", "b", "don't"};
  Rng rng(3);
  auto sentence = [&] {
    std::string s;
    const std::size_t n = rng.index(6);
    for (std::size_t i = 0; i < n; ++i) s += words[rng.index(words.size())] + (rng.bernoulli(0.2) ? "  " : " ");
    return s;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const std::string a = sentence(), b = sentence();
    EXPECT_EQ(dice(a, b), oracle::dice(a, b)) << a << " | " << b;
    EXPECT_EQ(dice(a, b), dice(b, a));
    EXPECT_EQ(dice(a, b) == 1.0, oracle::word_set(a) == oracle::word_set(b));
  }
}

// ---- alignment and uniformity ---------------------------------------------

TEST(Alignment, HandExamples) {
  const std::vector<Embedding> xs = {{1, 0}, {0, 3}};
  EXPECT_EQ(alignment(xs, xs), 0.0);
  const std::vector<Embedding> ys = {{-2, 0}, {0, -1}};
  EXPECT_NEAR(alignment(xs, ys), 4.0, 1e-12);
  const std::vector<Embedding> zero = {{0, 0}, {1, 1}};
  EXPECT_THROW(alignment(xs, zero), std::domain_error);
}

TEST(Uniformity, HandExamples) {
  const std::vector<Embedding> same = {{1, 2}, {2, 4}, {0.5, 1}};
  EXPECT_NEAR(uniformity(same), 0.0, 1e-12);
  const std::vector<Embedding> antipodal = {{0, 1}, {0, -1}};
  EXPECT_NEAR(uniformity(antipodal), -8.0, 1e-12);
  EXPECT_THROW(uniformity(std::vector<Embedding>{{1, 0}}), std::invalid_argument);
}

TEST(AlignmentUniformity, MatchOracles) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(6), d = 1 + rng.index(5);
    const auto xs = random_embeddings(rng, n, d), ys = random_embeddings(rng, n, d);
    const double a = alignment(xs, ys), u = uniformity(xs);
    EXPECT_NEAR(a, oracle::alignment(xs, ys), 1e-12);
    EXPECT_NEAR(u, oracle::uniformity(xs), 1e-12);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(u, 0.0);
  }
}

// ---- ranking metrics -------------------------------------------------------

TEST(Ranking, HandExamples) {
  const std::vector<std::string> ranked = {"a", "b", "c", "d", "e"};
  EXPECT_EQ(*ndcg_at_k(ranked, {"a", "b"}, 10), 1.0);
  EXPECT_EQ(*ndcg_at_k(ranked, {"z"}, 10), 0.0);
  EXPECT_NEAR(*ndcg_at_k(ranked, {"b"}, 10), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_NEAR(*ndcg_at_k(ranked, {"b"}, 10), 0.6309, 1e-4);
  EXPECT_EQ(*recall_at_k(ranked, {"a", "c"}, 10), 1.0);
  EXPECT_EQ(*recall_at_k(ranked, {"y", "z"}, 10), 0.0);
  EXPECT_EQ(*recall_at_k(ranked, {"a", "c", "y", "z"}, 10), 0.5);
  EXPECT_FALSE(ndcg_at_k(ranked, {}, 10));
  EXPECT_FALSE(recall_at_k(ranked, {}, 10));
}

TEST(Ranking, MatchesOraclesAndIsLabelInvariant) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(12), k = 1 + rng.index(12);
    std::vector<std::string> ranked;
    for (std::size_t i = 0; i < n; ++i) ranked.push_back("d" + std::to_string(i));
    rng.shuffle(ranked);
    std::set<std::string> rel;
    for (std::size_t i = 0; i < n + 3; ++i)
      if (rng.bernoulli(0.3)) rel.insert("d" + std::to_string(i));
    EXPECT_EQ(ndcg_at_k(ranked, rel, k), oracle::ndcg(ranked, rel, k));
    EXPECT_EQ(recall_at_k(ranked, rel, k), oracle::recall(ranked, rel, k));

    std::vector<std::string> relabeled;
    std::set<std::string> rel2;
    for (const auto& d : ranked) relabeled.push_back("x" + d);
    for (const auto& d : rel) rel2.insert("x" + d);
    EXPECT_EQ(ndcg_at_k(relabeled, rel2, k), ndcg_at_k(ranked, rel, k));
    EXPECT_EQ(recall_at_k(relabeled, rel2, k), recall_at_k(ranked, rel, k));
  }
}

TEST(Ranking, CosineRankingMatchesBruteForce) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(20);
    std::map<std::string, Embedding> corpus;
    std::vector<Embedding> pool = random_embeddings(rng, 4, 3);
    for (std::size_t i = 0; i < n; ++i) {
      // Draw from a small pool so exact ties occur.
      corpus["doc" + std::to_string(rng.index(100))] = rng.bernoulli(0.5) ? pool[rng.index(4)] : random_vector(rng, 3);
    }
    const Embedding q = random_vector(rng, 3);
    std::vector<std::pair<std::string, double>> remaining;
    for (const auto& [id, e] : corpus) remaining.emplace_back(id, cosine(q, e));
    std::vector<std::string> want;
    while (!remaining.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < remaining.size(); ++i) {
        const auto& [id, s] = remaining[i];
        if (s > remaining[best].second || (s == remaining[best].second && id < remaining[best].first)) best = i;
      }
      want.push_back(remaining[best].first);
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    }
    EXPECT_EQ(rank_by_cosine(q, corpus), want);
  }
}

// ---- harness ---------------------------------------------------------------

struct Model {
  encoder::EncoderParams params;
  encoder::Vocab vocab;
};

Model random_model(const std::vector<std::string>& texts) {
  Model m;
  m.vocab = encoder::Vocab::build(texts);
  encoder::EncoderConfig c;
  c.vocab_size = m.vocab.size();
  c.hidden_dim = 8;
  c.num_layers = 1;
  c.num_heads = 2;
  c.ffn_dim = 8;
  c.max_seq_len = 16;
  m.params = encoder::init_params(c, 77);
  return m;
}

std::vector<StsPair> toy_sts(std::size_t n) {
  std::vector<StsPair> out;
  for (const auto& p : synth::toy::sts_pairs(n, 31)) out.push_back({p.a, p.b, p.score, 0.0, 5.0});
  return out;
}

std::vector<std::string> all_sentences(const std::vector<StsPair>& pairs) {
  std::vector<std::string> out;
  for (const auto& p : pairs) out.insert(out.end(), {p.sentence_a, p.sentence_b});
  return out;
}

TEST(StsEval, OwnCosinesAsGoldGiveOne) {
  auto pairs = toy_sts(60);
  const Model m = random_model(all_sentences(pairs));
  const auto emb = encoder::encode_texts(m.params, m.vocab, all_sentences(pairs), encoder::Pooling::kAfl);
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].gold_score = 2.5 * (1.0 + cosine(emb[2 * i], emb[2 * i + 1]));
  const EvalReport r = sts_eval(m.params, m.vocab, pairs, encoder::Pooling::kAfl);
  EXPECT_NEAR(r.metrics.at("spearman"), 1.0, 1e-12);
  EXPECT_EQ(r.counts.at("pairs"), 60u);
}

TEST(StsEval, ShuffledGoldIsUncorrelated) {
  auto pairs = toy_sts(200);
  const Model m = random_model(all_sentences(pairs));
  std::vector<double> gold;
  for (const auto& p : pairs) gold.push_back(p.gold_score);
  Rng rng(8);
  rng.shuffle(gold);
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].gold_score = gold[i];
  const EvalReport r = sts_eval(m.params, m.vocab, pairs, encoder::Pooling::kAfl);
  EXPECT_LT(std::abs(r.metrics.at("spearman")), 0.2);
}

TEST(StsEval, AlignmentOnlyOverHighGoldPairs) {
  auto pairs = toy_sts(40);
  for (auto& p : pairs) p.gold_score = 1.0;
  const Model m = random_model(all_sentences(pairs));
  pairs[0].gold_score = 4.5;
  pairs[1].gold_score = 3.0;
  const EvalReport r = sts_eval(m.params, m.vocab, pairs, encoder::Pooling::kAvg);
  EXPECT_EQ(r.counts.at("positive_pairs"), 1u);
  const auto e = encoder::encode_texts(m.params, m.vocab,
                                       std::vector<std::string>{pairs[0].sentence_a, pairs[0].sentence_b},
                                       encoder::Pooling::kAvg);
  EXPECT_NEAR(r.metrics.at("align"), oracle::alignment({e[0]}, {e[1]}), 1e-12);
  for (auto& p : pairs) p.gold_score = 1.0;
  pairs[0].gold_score = 2.0;
  EXPECT_FALSE(sts_eval(m.params, m.vocab, pairs, encoder::Pooling::kAvg).metrics.contains("align"));
}

TEST(StsEval, ReportJsonRoundTrip) {
  const auto pairs = toy_sts(20);
  const Model m = random_model(all_sentences(pairs));
  const EvalReport r = sts_eval(m.params, m.vocab, pairs, encoder::Pooling::kAfl);
  const EvalReport back = EvalReport::from_json(nlohmann::json::parse(r.to_json().dump()));
  EXPECT_EQ(back.metrics, r.metrics);
  EXPECT_EQ(back.counts, r.counts);
  EXPECT_EQ(back.task, "sts");
}

TEST(StsEval, FileRoundTrip) {
  synthcse::testing::TempDir dir;
  const auto pairs = toy_sts(10);
  write_sts(dir / "sts.jsonl", pairs);
  const auto back = load_sts(dir / "sts.jsonl");
  ASSERT_EQ(back.size(), pairs.size());
  EXPECT_EQ(back[3].sentence_b, pairs[3].sentence_b);
  EXPECT_EQ(back[3].gold_score, pairs[3].gold_score);
  EXPECT_EQ(sts_fingerprint(back), sts_fingerprint(pairs));
}

RetrievalTask self_retrieval(const std::vector<std::string>& texts) {
  RetrievalTask t;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const std::string id = "s" + std::to_string(i);
    t.queries[id] = texts[i];
    t.corpus[id] = texts[i];
    t.qrels[id] = {id};
  }
  return t;
}

TEST(RetrievalEval, SelfRetrievalIsPerfect) {
  const auto texts = synth::toy::sentences(30, 12);
  const Model m = random_model(texts);
  const EvalReport r = retrieval_eval(m.params, m.vocab, self_retrieval(texts), 1, encoder::Pooling::kAfl);
  EXPECT_EQ(r.metrics.at("recall@1"), 1.0);
  EXPECT_EQ(r.metrics.at("ndcg@1"), 1.0);
  EXPECT_EQ(r.counts.at("queries_scored"), 30u);
}

TEST(RetrievalEval, QueriesWithoutRelevantDocsAreCounted) {
  const auto texts = synth::toy::sentences(10, 13);
  const Model m = random_model(texts);
  RetrievalTask t = self_retrieval(texts);
  t.qrels.erase("s3");
  t.qrels["s4"].clear();
  const EvalReport a = retrieval_eval(m.params, m.vocab, t, 5, encoder::Pooling::kAfl);
  EXPECT_EQ(a.counts.at("queries_scored"), 8u);
  EXPECT_EQ(a.counts.at("queries_without_relevant"), 2u);
  EXPECT_EQ(a.to_json().dump(), retrieval_eval(m.params, m.vocab, t, 5, encoder::Pooling::kAfl).to_json().dump());
}

TEST(RetrievalEval, HandBuiltCorpus) {
  // d1 repeats the query verbatim, so it has to come first.
  const std::vector<std::string> docs = {"alpha beta", "gamma delta", "alpha beta gamma", "zeta eta", "theta iota"};
  std::vector<std::string> all = docs;
  all.push_back("alpha beta");
  Model m = random_model(all);
  RetrievalTask t;
  for (std::size_t i = 0; i < docs.size(); ++i) t.corpus["d" + std::to_string(i + 1)] = docs[i];
  t.queries["q"] = "alpha beta";
  t.qrels["q"] = {"d3", "d4"};
  const auto qe = encoder::encode_texts(m.params, m.vocab, std::vector<std::string>{"alpha beta"}, encoder::Pooling::kAfl);
  const auto de = encoder::encode_texts(m.params, m.vocab, docs, encoder::Pooling::kAfl);
  std::map<std::string, Embedding> corpus;
  for (std::size_t i = 0; i < docs.size(); ++i) corpus["d" + std::to_string(i + 1)] = de[i];
  const auto ranked = rank_by_cosine(qe[0], corpus);
  EXPECT_EQ(ranked.front(), "d1");
  const EvalReport r = retrieval_eval(m.params, m.vocab, t, 3, encoder::Pooling::kAfl);
  EXPECT_EQ(r.metrics.at("ndcg@3"), *oracle::ndcg(ranked, t.qrels["q"], 3));
  EXPECT_EQ(r.metrics.at("recall@3"), *oracle::recall(ranked, t.qrels["q"], 3));
}

TEST(RetrievalEval, FilesAndValidation) {
  synthcse::testing::TempDir dir;
  std::ofstream(dir / "q.tsv") << "q1\tthe dog\n";
  std::ofstream(dir / "c.tsv") << "d1\tthe dog\nd2\tthe cat\n";
  std::ofstream(dir / "r.tsv") << "q1\td1\n";
  const RetrievalTask t = load_retrieval(dir / "q.tsv", dir / "c.tsv", dir / "r.tsv");
  EXPECT_EQ(t.corpus.size(), 2u);
  EXPECT_EQ(t.qrels.at("q1"), std::set<std::string>{"d1"});
  std::ofstream(dir / "r2.tsv") << "q1\td9\n";
  EXPECT_THROW(load_retrieval(dir / "q.tsv", dir / "c.tsv", dir / "r2.tsv"), std::invalid_argument);
}

// ---- aggregation -----------------------------------------------------------

TEST(Aggregate, CsvRowRoundTrip) {
  AggregateRow row{"sup", "toy", 3, "sts", "abc", {{"spearman", 0.1 + 0.2}, {"uniform", -2.5}}};
  const AggregateRow back = parse_csv_row(to_csv_row(row));
  EXPECT_EQ(back.metrics, row.metrics);
  EXPECT_EQ(back.seed, 3u);
  EXPECT_EQ(back.fingerprint, "abc");
}

TEST(Aggregate, MeanAndPopulationStdOverFourSeeds) {
  synthcse::testing::TempDir dir;
  const std::vector<double> values = {0.70, 0.72, 0.74, 0.76};
  for (std::size_t s = 0; s < values.size(); ++s) {
    append_aggregate(dir / "agg.csv", {"sup", "toy", s, "sts", "f", {{"spearman", values[s]}}});
  }
  // A rerun of seed 0 replaces the earlier row.
  append_aggregate(dir / "agg.csv", {"sup", "toy", 0, "sts", "f", {{"spearman", 0.70}}});
  const auto rows = load_aggregate(dir / "agg.csv");
  EXPECT_EQ(rows.size(), 5u);
  const auto summary = summarize(rows);
  ASSERT_EQ(summary.size(), 1u);
  EXPECT_EQ(summary[0].n, 4u);
  EXPECT_NEAR(summary[0].mean, 0.73, 1e-12);
  EXPECT_NEAR(summary[0].std, std::sqrt(0.0005), 1e-12);
  EXPECT_NE(summary_csv(summary).find("0.7300 \xC2\xB1 0.0224"), std::string::npos) << summary_csv(summary);
}

}  // namespace
}  // namespace synthcse::eval
