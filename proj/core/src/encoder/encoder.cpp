#include "synthcse/encoder/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "synthcse/common/rng.hpp"

namespace synthcse::encoder {

std::string_view pooling_name(Pooling pooling) {
  switch (pooling) {
    case Pooling::kAvg: return "avg";
    case Pooling::kAfl: return "afl";
    case Pooling::kClsMlp: return "cls_mlp";
  }
  return "unknown";
}

Pooling parse_pooling(std::string_view name) {
  if (name == "avg") return Pooling::kAvg;
  if (name == "afl") return Pooling::kAfl;
  if (name == "cls_mlp") return Pooling::kClsMlp;
  throw std::invalid_argument("unknown pooling '" + std::string(name) + "' (expected avg, afl or cls_mlp)");
}

void EncoderConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw std::invalid_argument(std::string("encoder config: ") + what + " must be positive");
  };
  if (vocab_size < 3) throw std::invalid_argument("encoder config: vocab_size must cover the 3 reserved ids");
  positive(hidden_dim, "hidden_dim");
  positive(num_heads, "num_heads");
  positive(ffn_dim, "ffn_dim");
  if (max_seq_len < 2) throw std::invalid_argument("encoder config: max_seq_len must be at least 2");
  if (hidden_dim % num_heads != 0) {
    throw std::invalid_argument("encoder config: hidden_dim " + std::to_string(hidden_dim) +
                                " is not divisible by num_heads " + std::to_string(num_heads));
  }
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) {
    throw std::invalid_argument("encoder config: dropout_keep must lie in (0, 1]");
  }
  if (!(layer_norm_eps > 0.0)) throw std::invalid_argument("encoder config: layer_norm_eps must be positive");
}

std::vector<std::pair<std::string, Tensor*>> EncoderParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("embed.token", &token_embedding);
  out.emplace_back("embed.position", &position_embedding);
  out.emplace_back("embed.norm.gain", &embed_norm_gain);
  out.emplace_back("embed.norm.bias", &embed_norm_bias);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string p = "layer" + std::to_string(i) + ".";
    LayerParams& l = layers[i];
    out.emplace_back(p + "norm1.gain", &l.norm1_gain);
    out.emplace_back(p + "norm1.bias", &l.norm1_bias);
    out.emplace_back(p + "attn.query", &l.query);
    out.emplace_back(p + "attn.key", &l.key);
    out.emplace_back(p + "attn.value", &l.value);
    out.emplace_back(p + "attn.output", &l.output);
    out.emplace_back(p + "norm2.gain", &l.norm2_gain);
    out.emplace_back(p + "norm2.bias", &l.norm2_bias);
    out.emplace_back(p + "ffn.in", &l.ffn_in);
    out.emplace_back(p + "ffn.in_bias", &l.ffn_in_bias);
    out.emplace_back(p + "ffn.out", &l.ffn_out);
    out.emplace_back(p + "ffn.out_bias", &l.ffn_out_bias);
  }
  out.emplace_back("pooler.weight", &pooler_weight);
  out.emplace_back("pooler.bias", &pooler_bias);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> EncoderParams::named() const {
  auto mutable_view = const_cast<EncoderParams*>(this)->named();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mutable_view.size());
  for (auto& [name, t] : mutable_view) out.emplace_back(std::move(name), t);
  return out;
}

namespace {

struct ExpectedShapes {
  explicit ExpectedShapes(const EncoderConfig& c) : cfg(c) {}
  const EncoderConfig& cfg;

  autodiff::Shape operator()(const std::string& name) const {
    const std::size_t h = cfg.hidden_dim;
    if (name == "embed.token") return {cfg.vocab_size, h};
    if (name == "embed.position") return {cfg.max_seq_len, h};
    if (name == "pooler.weight") return {h, h};
    const auto dot = name.find('.');
    const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
    if (leaf == "attn.query" || leaf == "attn.key" || leaf == "attn.value" || leaf == "attn.output") return {h, h};
    if (leaf == "ffn.in") return {h, cfg.ffn_dim};
    if (leaf == "ffn.in_bias") return {cfg.ffn_dim};
    if (leaf == "ffn.out") return {cfg.ffn_dim, h};
    return {h};  // norm gains/biases, ffn.out_bias, pooler.bias
  }
};

bool is_matrix(const std::string& name) {
  return name.ends_with("token") || name.ends_with("position") || name.ends_with("query") ||
         name.ends_with("key") || name.ends_with("value") || name.ends_with("output") ||
         name.ends_with("ffn.in") || name.ends_with("ffn.out") || name.ends_with("pooler.weight");
}

}  // namespace

void EncoderParams::validate() const {
  config.validate();
  if (layers.size() != config.num_layers) {
    throw std::invalid_argument("encoder params: " + std::to_string(layers.size()) + " layers but config declares " +
                                std::to_string(config.num_layers));
  }
  const ExpectedShapes expected(config);
  for (const auto& [name, t] : named()) {
    const autodiff::Shape want = expected(name);
    if (t->shape != want) {
      throw autodiff::ShapeError("encoder params: '" + name + "' has shape " + autodiff::shape_string(t->shape) +
                                 ", expected " + autodiff::shape_string(want));
    }
    t->validate();
    for (double v : t->data) {
      if (!std::isfinite(v)) throw std::domain_error("encoder params: '" + name + "' holds a non-finite value");
    }
  }
}

EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  EncoderParams p;
  p.config = config;
  p.layers.resize(config.num_layers);
  const ExpectedShapes expected(config);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
  Rng rng(seed);
  for (auto& [name, t] : p.named()) {
    const autodiff::Shape shape = expected(name);
    if (is_matrix(name)) {
      std::vector<double> data(autodiff::shape_size(shape));
      for (double& v : data) v = rng.uniform(-bound, bound);
      *t = Tensor(shape, std::move(data));
    } else if (name.ends_with(".gain")) {
      *t = Tensor::filled(shape, 1.0);
    } else {
      *t = Tensor::zeros(shape);
    }
  }
  return p;
}

EncoderGraph::EncoderGraph(Graph& graph, const EncoderParams& params, bool trainable)
    : graph_(graph), params_(params) {
  params.config.validate();
  for (const auto& [name, t] : params.named()) {
    Tensor leaf = *t;
    leaf.requires_grad = trainable;
    param_nodes_.push_back(graph_.input(std::move(leaf)));
  }
}

NodeId EncoderGraph::maybe_dropout(NodeId x, const std::optional<std::uint64_t>& seed) {
  if (!seed || params_.config.dropout_keep >= 1.0) return x;
  return graph_.dropout(x, params_.config.dropout_keep, mix_seed(*seed, dropout_site_++));
}

NodeId EncoderGraph::encode(std::span<const TokenizedText> batch, Pooling pooling,
                            std::optional<std::uint64_t> dropout_seed) {
  const EncoderConfig& cfg = params_.config;
  if (batch.empty()) throw std::invalid_argument("encode: empty batch");

  // Only the non-pad prefix of every sentence enters the graph.
  std::vector<std::size_t> token_ids;
  std::vector<std::size_t> positions;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> lengths;
  for (const TokenizedText& s : batch) {
    if (s.ids.size() != cfg.max_seq_len) {
      throw std::invalid_argument("encode: expected " + std::to_string(cfg.max_seq_len) + " ids, got " +
                                  std::to_string(s.ids.size()));
    }
    if (s.length > cfg.max_seq_len) {
      throw std::invalid_argument("encode: true length " + std::to_string(s.length) + " exceeds max_seq_len " +
                                  std::to_string(cfg.max_seq_len));
    }
    if (s.length == 0) throw std::invalid_argument("encode: true length must be at least 1");
    offsets.push_back(token_ids.size());
    lengths.push_back(s.length);
    for (std::size_t i = 0; i < s.length; ++i) {
      if (s.ids[i] >= cfg.vocab_size) {
        throw std::invalid_argument("encode: token id " + std::to_string(s.ids[i]) + " outside vocabulary of " +
                                    std::to_string(cfg.vocab_size));
      }
      token_ids.push_back(s.ids[i]);
      positions.push_back(i);
    }
  }

  // Parameter leaves in named() order.
  std::size_t cursor = 0;
  auto next = [&] { return param_nodes_[cursor++]; };
  const NodeId tok = next();
  const NodeId pos = next();
  const NodeId emb_gain = next();
  const NodeId emb_bias = next();

  NodeId x = graph_.add(graph_.embedding(tok, token_ids), graph_.embedding(pos, positions));
  x = graph_.layer_norm(x, emb_gain, emb_bias, cfg.layer_norm_eps);
  x = maybe_dropout(x, dropout_seed);
  const NodeId first = x;

  const std::size_t head_dim = cfg.hidden_dim / cfg.num_heads;
  const double inv_sqrt_head = 1.0 / std::sqrt(static_cast<double>(head_dim));

  std::vector<std::vector<std::size_t>> sentence_rows(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    for (std::size_t i = 0; i < lengths[s]; ++i) sentence_rows[s].push_back(offsets[s] + i);
  }

  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const NodeId n1g = next(), n1b = next();
    const NodeId wq = next(), wk = next(), wv = next(), wo = next();
    const NodeId n2g = next(), n2b = next();
    const NodeId w1 = next(), b1 = next(), w2 = next(), b2 = next();

    const NodeId h = graph_.layer_norm(x, n1g, n1b, cfg.layer_norm_eps);
    const NodeId q = graph_.scale(graph_.matmul(h, wq), inv_sqrt_head);
    const NodeId k = graph_.matmul(h, wk);
    const NodeId v = graph_.matmul(h, wv);

    std::vector<NodeId> heads;
    heads.reserve(cfg.num_heads);
    for (std::size_t hd = 0; hd < cfg.num_heads; ++hd) {
      const NodeId qh = graph_.slice_cols(q, hd * head_dim, head_dim);
      const NodeId kth = graph_.transpose(graph_.slice_cols(k, hd * head_dim, head_dim));
      const NodeId vh = graph_.slice_cols(v, hd * head_dim, head_dim);
      std::vector<NodeId> per_sentence;
      per_sentence.reserve(batch.size());
      for (std::size_t s = 0; s < batch.size(); ++s) {
        const NodeId qs = graph_.index_select(qh, sentence_rows[s]);
        const NodeId kts = graph_.slice_cols(kth, offsets[s], lengths[s]);
        const NodeId vs = graph_.index_select(vh, sentence_rows[s]);
        const NodeId weights = graph_.softmax_rows(graph_.matmul(qs, kts));
        per_sentence.push_back(graph_.matmul(weights, vs));
      }
      heads.push_back(graph_.concat_rows(per_sentence));
    }
    NodeId attn = graph_.matmul(graph_.concat_cols(heads), wo);
    attn = maybe_dropout(attn, dropout_seed);
    x = graph_.add(x, attn);

    const NodeId h2 = graph_.layer_norm(x, n2g, n2b, cfg.layer_norm_eps);
    NodeId f = graph_.tanh(graph_.add(graph_.matmul(h2, w1), b1));
    f = graph_.add(graph_.matmul(f, w2), b2);
    f = maybe_dropout(f, dropout_seed);
    x = graph_.add(x, f);
  }
  const NodeId pooler_w = next();
  const NodeId pooler_b = next();

  switch (pooling) {
    case Pooling::kClsMlp: {
      const NodeId cls = graph_.index_select(x, offsets);
      return graph_.tanh(graph_.add(graph_.matmul(cls, pooler_w), pooler_b));
    }
    case Pooling::kAvg:
    case Pooling::kAfl: {
      const NodeId states = pooling == Pooling::kAvg ? x : graph_.mean_of_two(first, x);
      std::vector<NodeId> pooled;
      pooled.reserve(batch.size());
      for (std::size_t s = 0; s < batch.size(); ++s) {
        pooled.push_back(graph_.mean_rows(graph_.index_select(states, sentence_rows[s])));
      }
      return pooled.size() == 1 ? pooled.front() : graph_.concat_rows(pooled);
    }
  }
  throw std::invalid_argument("encode: unknown pooling");
}

std::vector<double> encode(const EncoderParams& params, std::span<const std::size_t> ids, std::size_t true_len,
                           Pooling pooling, std::optional<std::uint64_t> dropout_seed) {
  TokenizedText t;
  t.ids.assign(ids.begin(), ids.end());
  t.length = true_len;
  Graph g;
  EncoderGraph eg(g, params, false);
  const NodeId out = eg.encode(std::span<const TokenizedText>(&t, 1), pooling, dropout_seed);
  return g.value(out).data;
}

std::vector<std::vector<double>> encode_texts(const EncoderParams& params, const Vocab& vocab,
                                              std::span<const std::string> texts, Pooling pooling) {
  constexpr std::size_t kChunk = 64;
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  const std::size_t d = params.config.hidden_dim;
  for (std::size_t start = 0; start < texts.size(); start += kChunk) {
    const std::size_t end = std::min(texts.size(), start + kChunk);
    std::vector<TokenizedText> chunk;
    chunk.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) chunk.push_back(tokenize(texts[i], vocab, params.config.max_seq_len));
    Graph g;
    EncoderGraph eg(g, params, false);
    const Tensor& pooled = g.value(eg.encode(chunk, pooling, std::nullopt));
    for (std::size_t r = 0; r < chunk.size(); ++r) {
      out.emplace_back(pooled.data.begin() + static_cast<std::ptrdiff_t>(r * d),
                       pooled.data.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
    }
  }
  return out;
}

}  // namespace synthcse::encoder
