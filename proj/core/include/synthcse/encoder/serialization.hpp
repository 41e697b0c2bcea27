#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "synthcse/encoder/encoder.hpp"
#include "synthcse/encoder/vocab.hpp"

namespace synthcse::encoder {

// An encoder checkpoint: parameters, the vocabulary they were trained with,
// and free-form metadata. Stored in the shared weight-container format with
// one single-block entry per parameter tensor; values are rounded to float32.
struct EncoderCheckpoint {
  EncoderParams params;
  Vocab vocab;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json config_to_json(const EncoderConfig& config);
EncoderConfig config_from_json(const nlohmann::json& j);

std::string serialize_checkpoint(const EncoderCheckpoint& checkpoint);
EncoderCheckpoint parse_checkpoint(std::string_view bytes);
void save_checkpoint(const EncoderCheckpoint& checkpoint, const std::filesystem::path& path);
EncoderCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace synthcse::encoder
