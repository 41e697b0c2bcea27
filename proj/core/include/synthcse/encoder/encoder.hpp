#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synthcse/autodiff/graph.hpp"
#include "synthcse/encoder/vocab.hpp"

namespace synthcse::encoder {

using autodiff::Graph;
using autodiff::NodeId;
using autodiff::Tensor;

enum class Pooling {
  kAvg,     // mean of last-layer states
  kAfl,     // mean over positions of (first-layer input + last-layer states) / 2
  kClsMlp,  // tanh(dense(last-layer state at [CLS]))
};

std::string_view pooling_name(Pooling pooling);
Pooling parse_pooling(std::string_view name);

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 32;
  std::size_t num_layers = 2;  // 0 is accepted as a degenerate embedding-only model
  std::size_t num_heads = 2;
  std::size_t ffn_dim = 64;
  std::size_t max_seq_len = 32;
  double dropout_keep = 0.9;
  Pooling pooling = Pooling::kAfl;
  double layer_norm_eps = 1e-5;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

struct LayerParams {
  Tensor norm1_gain, norm1_bias;
  Tensor query, key, value, output;  // [hidden x hidden]
  Tensor norm2_gain, norm2_bias;
  Tensor ffn_in, ffn_in_bias;    // [hidden x ffn], [ffn]
  Tensor ffn_out, ffn_out_bias;  // [ffn x hidden], [hidden]
};

struct EncoderParams {
  EncoderConfig config;
  Tensor token_embedding;     // [vocab x hidden]
  Tensor position_embedding;  // [max_seq_len x hidden]
  Tensor embed_norm_gain, embed_norm_bias;
  std::vector<LayerParams> layers;
  Tensor pooler_weight, pooler_bias;  // used by kClsMlp only

  // Every parameter tensor under a stable dotted name, in a fixed order.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;

  // Shapes consistent with config and every value finite.
  void validate() const;
};

// Deterministic in seed: matrices uniform in [-1/sqrt(hidden), 1/sqrt(hidden)],
// norm gains 1, biases 0.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

// Binds a parameter set into a graph as leaves and builds batched forward
// passes on top of them. Sentences in a batch never attend to each other and
// only their non-pad prefix is processed, so pad tokens cannot influence the
// result.
class EncoderGraph {
 public:
  EncoderGraph(Graph& graph, const EncoderParams& params, bool trainable);

  // Returns a [batch x hidden] node of pooled embeddings. When dropout_seed
  // is set, dropout is active with keep probability config.dropout_keep.
  NodeId encode(std::span<const TokenizedText> batch, Pooling pooling,
                std::optional<std::uint64_t> dropout_seed);

  // Leaf node per parameter, aligned with EncoderParams::named().
  const std::vector<NodeId>& parameter_nodes() const { return param_nodes_; }
  const EncoderConfig& config() const { return params_.config; }

 private:
  NodeId maybe_dropout(NodeId x, const std::optional<std::uint64_t>& seed);

  Graph& graph_;
  const EncoderParams& params_;
  std::vector<NodeId> param_nodes_;
  std::uint64_t dropout_site_ = 0;
};

// Single-sentence embedding. ids must have config.max_seq_len entries and
// 1 <= true_len <= max_seq_len.
std::vector<double> encode(const EncoderParams& params, std::span<const std::size_t> ids, std::size_t true_len,
                           Pooling pooling, std::optional<std::uint64_t> dropout_seed = std::nullopt);

// Inference-mode embeddings for raw texts, one row per text.
std::vector<std::vector<double>> encode_texts(const EncoderParams& params, const Vocab& vocab,
                                              std::span<const std::string> texts, Pooling pooling);

}  // namespace synthcse::encoder
