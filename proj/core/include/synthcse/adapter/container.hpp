#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace synthcse::adapter {

// Weight container shared by LoRA adapters and encoder parameters:
//
//   LORA1\n
//   <manifest: one line of JSON>\n
//   <payload: float32 little-endian values, entry by entry, block by block,
//             row-major>
//
// The manifest carries the caller's header fields plus "entries" (name,
// block shapes, byte_offset, byte_length), "payload_bytes" and
// "payload_crc32" (zlib CRC-32 of the payload).
inline constexpr std::string_view kContainerMagic = "LORA1";

enum class ContainerErrorKind {
  kCorruptManifest,
  kShapeMismatch,
  kTruncatedPayload,
  kChecksumMismatch,
};

std::string_view error_kind_name(ContainerErrorKind kind);

class ContainerError : public std::runtime_error {
 public:
  ContainerError(ContainerErrorKind kind, const std::string& what);
  ContainerErrorKind kind() const { return kind_; }

 private:
  ContainerErrorKind kind_;
};

struct Block {
  std::vector<std::size_t> shape;
  std::vector<double> values;  // stored as float32
};

struct Entry {
  std::string name;
  std::vector<Block> blocks;
};

struct Container {
  nlohmann::json header = nlohmann::json::object();
  std::vector<Entry> entries;
};

std::uint32_t crc32(std::string_view bytes);

std::string encode_container(const Container& container);
Container decode_container(std::string_view bytes);

// The raw payload bytes of an encoded container, after validating the
// manifest and checksum.
std::string container_payload(std::string_view bytes);

void save_container(const Container& container, const std::filesystem::path& path);
Container load_container(const std::filesystem::path& path);

}  // namespace synthcse::adapter
