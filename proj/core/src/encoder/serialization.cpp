#include "synthcse/encoder/serialization.hpp"

#include "synthcse/adapter/container.hpp"
#include "synthcse/common/atomic_file.hpp"

namespace synthcse::encoder {

using adapter::ContainerError;
using adapter::ContainerErrorKind;
using nlohmann::json;

json config_to_json(const EncoderConfig& c) {
  return {{"vocab_size", c.vocab_size},         {"hidden_dim", c.hidden_dim},
          {"num_layers", c.num_layers},         {"num_heads", c.num_heads},
          {"ffn_dim", c.ffn_dim},               {"max_seq_len", c.max_seq_len},
          {"dropout_keep", c.dropout_keep},     {"pooling", std::string(pooling_name(c.pooling))},
          {"layer_norm_eps", c.layer_norm_eps}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.dropout_keep = j.at("dropout_keep").get<double>();
  c.pooling = parse_pooling(j.at("pooling").get<std::string>());
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  return c;
}

std::string serialize_checkpoint(const EncoderCheckpoint& ck) {
  ck.params.validate();
  adapter::Container c;
  c.header["kind"] = "encoder_params";
  c.header["config"] = config_to_json(ck.params.config);
  c.header["vocab"] = ck.vocab.tokens();
  c.header["metadata"] = ck.metadata;
  for (const auto& [name, t] : ck.params.named()) {
    c.entries.push_back(adapter::Entry{name, {adapter::Block{t->shape, t->data}}});
  }
  return adapter::encode_container(c);
}

EncoderCheckpoint parse_checkpoint(std::string_view bytes) {
  adapter::Container c = adapter::decode_container(bytes);
  EncoderCheckpoint ck{};
  try {
    if (c.header.at("kind").get<std::string>() != "encoder_params") {
      throw ContainerError(ContainerErrorKind::kCorruptManifest, "container does not hold encoder parameters");
    }
    ck.params.config = config_from_json(c.header.at("config"));
    ck.vocab = Vocab::from_tokens(c.header.at("vocab").get<std::vector<std::string>>());
    ck.metadata = c.header.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw ContainerError(ContainerErrorKind::kCorruptManifest, std::string("encoder header: ") + e.what());
  }
  ck.params.layers.resize(ck.params.config.num_layers);
  auto named = ck.params.named();
  if (named.size() != c.entries.size()) {
    throw ContainerError(ContainerErrorKind::kShapeMismatch,
                         "expected " + std::to_string(named.size()) + " parameter entries, found " +
                             std::to_string(c.entries.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    adapter::Entry& e = c.entries[i];
    if (e.name != named[i].first || e.blocks.size() != 1) {
      throw ContainerError(ContainerErrorKind::kShapeMismatch,
                           "entry " + std::to_string(i) + " is '" + e.name + "', expected '" + named[i].first + "'");
    }
    *named[i].second = autodiff::Tensor(e.blocks[0].shape, std::move(e.blocks[0].values));
  }
  try {
    ck.params.validate();
  } catch (const std::exception& e) {
    throw ContainerError(ContainerErrorKind::kShapeMismatch, e.what());
  }
  if (ck.vocab.size() != ck.params.config.vocab_size) {
    throw ContainerError(ContainerErrorKind::kShapeMismatch, "vocabulary size disagrees with config.vocab_size");
  }
  return ck;
}

void save_checkpoint(const EncoderCheckpoint& ck, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(ck));
}

EncoderCheckpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace synthcse::encoder
