#include "synthcse/contrastive/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "synthcse/common/rng.hpp"
#include "synthcse/contrastive/loss.hpp"

namespace synthcse::contrastive {

using encoder::TokenizedText;

std::string_view mode_name(TrainMode mode) {
  return mode == TrainMode::kSupervised ? "supervised" : "unsupervised";
}

TrainMode parse_mode(std::string_view name) {
  if (name == "supervised") return TrainMode::kSupervised;
  if (name == "unsupervised") return TrainMode::kUnsupervised;
  throw std::invalid_argument("unknown training mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("train config: temperature must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("train config: learning_rate must be positive");
  }
  if (batch_size < 2) throw std::invalid_argument("train config: batch_size must be at least 2");
}

TrainingError::TrainingError(std::size_t e, std::size_t b, const std::string& what)
    : std::runtime_error(what), epoch(e), batch(b) {}

TrainResult train(std::span<const TextTriplet> dataset, const encoder::Vocab& vocab, const TrainConfig& config,
                  encoder::EncoderParams init) {
  config.validate();
  init.validate();
  if (init.config.vocab_size != vocab.size()) {
    throw std::invalid_argument("train: params expect a vocabulary of " + std::to_string(init.config.vocab_size) +
                                " tokens but the vocabulary has " + std::to_string(vocab.size()));
  }
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  const bool supervised = config.mode == TrainMode::kSupervised;
  if (!supervised && init.config.dropout_keep >= 1.0) {
    throw std::invalid_argument("train: unsupervised mode needs dropout_keep < 1");
  }

  TrainResult result{std::move(init), {}};
  if (config.epochs == 0) return result;

  const std::size_t max_len = result.params.config.max_seq_len;
  std::vector<TokenizedText> anchors, positives, negatives;
  anchors.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const TextTriplet& t = dataset[i];
    anchors.push_back(encoder::tokenize(t.anchor, vocab, max_len));
    if (supervised) {
      if (t.positive.empty() || t.negative.empty()) {
        throw std::invalid_argument("train: supervised mode needs a positive and a negative for every example (row " +
                                    std::to_string(i) + ")");
      }
      positives.push_back(encoder::tokenize(t.positive, vocab, max_len));
      negatives.push_back(encoder::tokenize(t.negative, vocab, max_len));
    }
  }

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffler(mix_seed(config.seed, epoch));
    shuffler.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t m = std::min(config.batch_size, order.size() - start);
      if (m < 2) break;
      const std::uint64_t batch_seed = mix_seed(mix_seed(config.seed, 0x5eed0000ULL + epoch), batches);

      autodiff::Graph g;
      encoder::EncoderGraph model(g, result.params, true);
      std::vector<TokenizedText> sentences;
      autodiff::NodeId loss;
      if (supervised) {
        sentences.reserve(3 * m);
        for (std::size_t i = 0; i < m; ++i) sentences.push_back(anchors[order[start + i]]);
        for (std::size_t i = 0; i < m; ++i) sentences.push_back(positives[order[start + i]]);
        for (std::size_t i = 0; i < m; ++i) sentences.push_back(negatives[order[start + i]]);
        const autodiff::NodeId pooled = model.encode(sentences, config.pooling, batch_seed);
        auto rows = [m](std::size_t block) {
          std::vector<std::size_t> r(m);
          std::iota(r.begin(), r.end(), block * m);
          return r;
        };
        loss = supervised_loss(g, g.index_select(pooled, rows(0)), g.index_select(pooled, rows(1)),
                               g.index_select(pooled, rows(2)), config.temperature);
      } else {
        sentences.reserve(m);
        for (std::size_t i = 0; i < m; ++i) sentences.push_back(anchors[order[start + i]]);
        loss = unsupervised_loss(g, model, sentences, config.pooling, config.temperature, batch_seed);
      }

      const double value = g.value(loss).data[0];
      if (!std::isfinite(value)) {
        throw TrainingError(epoch, batches,
                            "train: non-finite loss in epoch " + std::to_string(epoch + 1) + ", batch " +
                                std::to_string(batches));
      }
      g.backward(loss);

      const auto& nodes = model.parameter_nodes();
      auto named = result.params.named();
      for (std::size_t p = 0; p < named.size(); ++p) {
        const std::vector<double>& grad = g.grad(nodes[p]);
        std::vector<double>& data = named[p].second->data;
        for (std::size_t i = 0; i < data.size(); ++i) data[i] -= config.learning_rate * grad[i];
      }

      loss_sum += value;
      ++batches;
    }
    if (batches == 0) throw std::invalid_argument("train: dataset too small to form a batch of two");
    result.history.push_back(loss_sum / static_cast<double>(batches));
  }
  return result;
}

void write_history_csv(std::ostream& out, std::span<const double> history) {
  out << "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", history[i]);
    out << (i + 1) << ',' << buf << '\n';
  }
}

}  // namespace synthcse::contrastive
