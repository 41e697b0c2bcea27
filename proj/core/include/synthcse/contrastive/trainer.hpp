#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "synthcse/encoder/encoder.hpp"

namespace synthcse::contrastive {

enum class TrainMode { kSupervised, kUnsupervised };

std::string_view mode_name(TrainMode mode);
TrainMode parse_mode(std::string_view name);

struct TrainConfig {
  std::size_t batch_size = 32;
  // Plain SGD step size. SGD on a freshly initialised toy encoder needs a far
  // larger step than the Adam rates used for pretrained backbones.
  double learning_rate = 0.1;
  double temperature = 0.05;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kSupervised;
  encoder::Pooling pooling = encoder::Pooling::kAfl;

  void validate() const;
};

// Training record. positive/negative may be empty in unsupervised mode, where
// only the anchor is used.
struct TextTriplet {
  std::string anchor;
  std::string positive;
  std::string negative;
};

struct TrainResult {
  encoder::EncoderParams params;
  std::vector<double> history;  // mean loss per epoch
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t epoch, std::size_t batch, const std::string& what);
  std::size_t epoch;
  std::size_t batch;
};

// Mini-batch SGD over seeded per-epoch shuffles. A trailing batch with fewer
// than two examples is dropped. Identical inputs give bit-identical results.
TrainResult train(std::span<const TextTriplet> dataset, const encoder::Vocab& vocab, const TrainConfig& config,
                  encoder::EncoderParams init);

// "epoch,mean_loss" header followed by one row per epoch (1-based).
void write_history_csv(std::ostream& out, std::span<const double> history);

}  // namespace synthcse::contrastive
