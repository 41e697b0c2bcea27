#include <cmath>
#include <sstream>

#include "synthcse/contrastive/loss.hpp"
#include "synthcse/contrastive/trainer.hpp"
#include "synthcse/synth/toy_language.hpp"
#include "test_support.hpp"

namespace synthcse::contrastive {
namespace {

using autodiff::Tensor;
using synthcse::testing::random_vector;
using Rows = std::vector<std::vector<double>>;

Rows random_rows(Rng& rng, std::size_t m, std::size_t d) {
  Rows r(m);
  for (auto& row : r) row = random_vector(rng, d, -2, 2);
  return r;
}

Tensor to_tensor(const Rows& rows) {
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return Tensor::matrix(rows.size(), rows[0].size(), flat);
}

double cos_sim(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / std::sqrt(aa * bb);
}

// Direct transcription of the objective; negatives may be empty.
double oracle_loss(const Rows& a, const Rows& p, const Rows& n, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double denom = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      denom += std::exp(cos_sim(a[i], p[j]) / tau);
      if (!n.empty()) denom += std::exp(cos_sim(a[i], n[j]) / tau);
    }
    total += -std::log(std::exp(cos_sim(a[i], p[i]) / tau) / denom);
  }
  return total / static_cast<double>(a.size());
}

double sup(const Rows& a, const Rows& p, const Rows& n, double tau) {
  Graph g;
  return g.value(supervised_loss(g, g.input(to_tensor(a)), g.input(to_tensor(p)), g.input(to_tensor(n)), tau)).data[0];
}

double unsup(const Rows& a, const Rows& p, double tau) {
  Graph g;
  return g.value(unsupervised_loss(g, g.input(to_tensor(a)), g.input(to_tensor(p)), tau)).data[0];
}

TEST(SupervisedLoss, UniformSimilaritiesGiveLogTwoM) {
  for (std::size_t m : {2u, 4u, 8u}) {
    const Rows same(m, {0.3, -1.2, 2.0});
    EXPECT_NEAR(sup(same, same, same, 0.05), std::log(2.0 * static_cast<double>(m)), 1e-9) << m;
  }
  const Rows four(4, {1, 1});
  EXPECT_NEAR(sup(four, four, four, 0.05), 2.0794, 1e-4);
}

TEST(SupervisedLoss, SinglePairClosedForm) {
  const double got = sup({{1, 0}}, {{2, 0}}, {{-3, 0}}, 1.0);
  EXPECT_NEAR(got, std::log1p(std::exp(-2.0)), 1e-9);
  EXPECT_NEAR(got, 0.1269, 1e-4);
}

TEST(SupervisedLoss, MatchesScalarOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Rows a = random_rows(rng, 3, 4), p = random_rows(rng, 3, 4), n = random_rows(rng, 3, 4);
    EXPECT_NEAR(sup(a, p, n, 0.05), oracle_loss(a, p, n, 0.05), 1e-10);
  }
}

TEST(SupervisedLoss, ScaleInvariant) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Rows a = random_rows(rng, 3, 4), p = random_rows(rng, 3, 4), n = random_rows(rng, 3, 4);
    const double base = sup(a, p, n, 0.1);
    const double s = rng.uniform(0.01, 100.0);
    for (Rows* r : {&a, &p, &n})
      for (auto& row : *r)
        for (double& v : row) v *= s;
    EXPECT_NEAR(sup(a, p, n, 0.1), base, 1e-9);
  }
}

Rows random_orthogonal(Rng& rng, std::size_t d) {
  Rows q = random_rows(rng, d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0;
      for (std::size_t k = 0; k < d; ++k) dot += q[i][k] * q[j][k];
      for (std::size_t k = 0; k < d; ++k) q[i][k] -= dot * q[j][k];
    }
    double norm = 0;
    for (double v : q[i]) norm += v * v;
    for (double& v : q[i]) v /= std::sqrt(norm);
  }
  return q;
}

Rows rotate(const Rows& x, const Rows& q) {
  Rows out(x.size(), std::vector<double>(q.size(), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j)
      for (std::size_t k = 0; k < q.size(); ++k) out[i][j] += x[i][k] * q[k][j];
  return out;
}

TEST(SupervisedLoss, RotationInvariant) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Rows a = random_rows(rng, 3, 4), p = random_rows(rng, 3, 4), n = random_rows(rng, 3, 4);
    const Rows q = random_orthogonal(rng, 4);
    EXPECT_NEAR(sup(rotate(a, q), rotate(p, q), rotate(n, q), 0.1), sup(a, p, n, 0.1), 1e-9);
  }
}

TEST(SupervisedLoss, BatchPermutationInvariant) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + rng.index(6);
    const Rows a = random_rows(rng, m, 4), p = random_rows(rng, m, 4), n = random_rows(rng, m, 4);
    std::vector<std::size_t> perm(m);
    for (std::size_t i = 0; i < m; ++i) perm[i] = i;
    rng.shuffle(perm);
    Rows pa, pp, pn;
    for (std::size_t i : perm) {
      pa.push_back(a[i]);
      pp.push_back(p[i]);
      pn.push_back(n[i]);
    }
    EXPECT_NEAR(sup(pa, pp, pn, 0.2), sup(a, p, n, 0.2), 1e-12);
  }
}

TEST(SupervisedLoss, GradientCheck) {
  EXPECT_LT(supervised_loss_grad_error(100, 1, 1.0), 1e-4);
  EXPECT_LT(supervised_loss_grad_error(100, 2, 0.2), 1e-4);
}

TEST(SupervisedLoss, RejectsBadInputs) {
  const Rows ok = {{1, 0}, {0, 1}};
  EXPECT_THROW(sup(ok, ok, {{1, 0}, {0, 0}}, 0.1), std::domain_error);
  EXPECT_THROW(sup(ok, ok, {{1, 0, 0}, {0, 1, 0}}, 0.1), autodiff::ShapeError);
  EXPECT_THROW(sup(ok, ok, ok, 0.0), std::invalid_argument);
}

TEST(UnsupervisedLoss, MatchesScalarOracle) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Rows a = random_rows(rng, 3, 4), p = random_rows(rng, 3, 4);
    EXPECT_NEAR(unsup(a, p, 0.05), oracle_loss(a, p, {}, 0.05), 1e-10);
  }
}

TEST(UnsupervisedLoss, IdenticalViewsGiveLogTwo) {
  const Rows same(2, {0.5, 0.25, -1.0});
  EXPECT_NEAR(unsup(same, same, 0.05), std::log(2.0), 1e-12);
}

encoder::EncoderConfig small_config(std::size_t vocab, double keep) {
  encoder::EncoderConfig c;
  c.vocab_size = vocab;
  c.hidden_dim = 8;
  c.num_layers = 1;
  c.num_heads = 2;
  c.ffn_dim = 8;
  c.max_seq_len = 12;
  c.dropout_keep = keep;
  return c;
}

TEST(UnsupervisedLoss, DropoutViewsAreSeeded) {
  const std::vector<std::string> texts = {"the glad dog likes the box", "the sad cat hates the book"};
  const encoder::Vocab vocab = encoder::Vocab::build(texts);
  const encoder::EncoderParams params = encoder::init_params(small_config(vocab.size(), 0.8), 1);
  std::vector<encoder::TokenizedText> batch;
  for (const auto& t : texts) batch.push_back(encoder::tokenize(t, vocab, 12));
  auto run = [&](std::uint64_t seed) {
    Graph g;
    encoder::EncoderGraph model(g, params, false);
    return g.value(unsupervised_loss(g, model, batch, encoder::Pooling::kAfl, 0.05, seed)).data[0];
  };
  EXPECT_EQ(run(3), run(3));
  EXPECT_NE(run(3), run(4));
  EXPECT_GT(run(3), 0.0);
}

TEST(UnsupervisedLoss, RejectsKeepOneAndTinyBatches) {
  const std::vector<std::string> texts = {"a b", "c d"};
  const encoder::Vocab vocab = encoder::Vocab::build(texts);
  std::vector<encoder::TokenizedText> batch;
  for (const auto& t : texts) batch.push_back(encoder::tokenize(t, vocab, 12));
  {
    const auto params = encoder::init_params(small_config(vocab.size(), 1.0), 1);
    Graph g;
    encoder::EncoderGraph model(g, params, false);
    EXPECT_THROW(unsupervised_loss(g, model, batch, encoder::Pooling::kAvg, 0.05, 1), std::invalid_argument);
  }
  const auto params = encoder::init_params(small_config(vocab.size(), 0.9), 1);
  Graph g;
  encoder::EncoderGraph model(g, params, false);
  EXPECT_THROW(unsupervised_loss(g, model, std::span(batch).first(1), encoder::Pooling::kAvg, 0.05, 1),
               std::invalid_argument);
}

struct ToyData {
  std::vector<TextTriplet> triplets;
  encoder::Vocab vocab;
};

// Positive: a re-realisation of the same meaning. Negative: adjective flipped.
ToyData toy_data(std::size_t n) {
  Rng rng(123);
  ToyData d;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n; ++i) {
    synth::toy::Meaning m = synth::toy::random_meaning(rng);
    TextTriplet t;
    t.anchor = synth::toy::realize(m, rng);
    t.positive = synth::toy::realize(m, rng);
    m.adjective = synth::toy::antonym(synth::toy::Slot::kAdjective, m.adjective);
    t.negative = synth::toy::realize(m, rng);
    texts.insert(texts.end(), {t.anchor, t.positive, t.negative});
    d.triplets.push_back(std::move(t));
  }
  d.vocab = encoder::Vocab::build(texts);
  return d;
}

TrainConfig quick_config(TrainMode mode, std::size_t epochs) {
  TrainConfig c;
  c.batch_size = 8;
  c.epochs = epochs;
  c.seed = 5;
  c.mode = mode;
  return c;
}

TEST(Train, ZeroEpochsReturnsInitUnchanged) {
  const ToyData d = toy_data(16);
  const auto init = encoder::init_params(small_config(d.vocab.size(), 0.9), 2);
  const TrainResult r = train(d.triplets, d.vocab, quick_config(TrainMode::kSupervised, 0), init);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.params.token_embedding.data, init.token_embedding.data);
  EXPECT_EQ(r.params.layers[0].query.data, init.layers[0].query.data);
}

TEST(Train, BitIdenticalAcrossRuns) {
  const ToyData d = toy_data(24);
  const auto init = encoder::init_params(small_config(d.vocab.size(), 0.9), 2);
  for (TrainMode mode : {TrainMode::kSupervised, TrainMode::kUnsupervised}) {
    const TrainResult a = train(d.triplets, d.vocab, quick_config(mode, 2), init);
    const TrainResult b = train(d.triplets, d.vocab, quick_config(mode, 2), init);
    EXPECT_EQ(a.history, b.history);
    const auto na = a.params.named();
    const auto nb = b.params.named();
    for (std::size_t i = 0; i < na.size(); ++i) EXPECT_EQ(na[i].second->data, nb[i].second->data) << na[i].first;
  }
}

TEST(Train, SupervisedLossDecreases) {
  const ToyData d = toy_data(64);
  const auto init = encoder::init_params(small_config(d.vocab.size(), 0.9), 3);
  const TrainResult r = train(d.triplets, d.vocab, quick_config(TrainMode::kSupervised, 8), init);
  ASSERT_EQ(r.history.size(), 8u);
  EXPECT_LT(r.history.back(), r.history.front());
}

TEST(Train, RejectsInvalidSetups) {
  const ToyData d = toy_data(8);
  const auto keep_one = encoder::init_params(small_config(d.vocab.size(), 1.0), 1);
  EXPECT_THROW(train(d.triplets, d.vocab, quick_config(TrainMode::kUnsupervised, 1), keep_one), std::invalid_argument);
  auto missing = d.triplets;
  missing[3].negative.clear();
  const auto init = encoder::init_params(small_config(d.vocab.size(), 0.9), 1);
  EXPECT_THROW(train(missing, d.vocab, quick_config(TrainMode::kSupervised, 1), init), std::invalid_argument);
  EXPECT_NO_THROW(train(missing, d.vocab, quick_config(TrainMode::kUnsupervised, 1), init));
  EXPECT_THROW(train({}, d.vocab, quick_config(TrainMode::kSupervised, 1), init), std::invalid_argument);
}

TEST(Train, HistoryCsvFormat) {
  std::ostringstream out;
  const std::vector<double> h = {2.5, 1.25};
  write_history_csv(out, h);
  EXPECT_EQ(out.str(), "epoch,mean_loss\n1,2.5\n2,1.25\n");
}

}  // namespace
}  // namespace synthcse::contrastive
