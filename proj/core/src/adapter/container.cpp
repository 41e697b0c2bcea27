#include "synthcse/adapter/container.hpp"

#include <bit>
#include <cstring>

#include <zlib.h>

#include "synthcse/common/atomic_file.hpp"

namespace synthcse::adapter {

using nlohmann::json;

std::string_view error_kind_name(ContainerErrorKind kind) {
  switch (kind) {
    case ContainerErrorKind::kCorruptManifest: return "corrupt manifest";
    case ContainerErrorKind::kShapeMismatch: return "shape mismatch";
    case ContainerErrorKind::kTruncatedPayload: return "truncated payload";
    case ContainerErrorKind::kChecksumMismatch: return "checksum mismatch";
  }
  return "unknown";
}

ContainerError::ContainerError(ContainerErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

std::uint32_t crc32(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

namespace {

constexpr const char* kReservedKeys[] = {"format", "entries", "payload_bytes", "payload_crc32"};

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void append_f32(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

double read_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return static_cast<double>(std::bit_cast<float>(bits));
}

[[noreturn]] void corrupt(const std::string& what) { throw ContainerError(ContainerErrorKind::kCorruptManifest, what); }

struct Manifest {
  json header;
  std::vector<Entry> entries;  // shapes only
  std::vector<std::size_t> offsets;
  std::size_t payload_bytes = 0;
  std::uint32_t payload_crc = 0;
};

// Splits bytes into manifest and payload, validating everything but the
// payload length and checksum.
Manifest read_manifest(std::string_view bytes, std::string_view& payload) {
  const std::size_t nl1 = bytes.find('\n');
  if (nl1 == std::string_view::npos || bytes.substr(0, nl1) != kContainerMagic) {
    corrupt("missing '" + std::string(kContainerMagic) + "' magic line");
  }
  const std::size_t nl2 = bytes.find('\n', nl1 + 1);
  if (nl2 == std::string_view::npos) corrupt("manifest line is not terminated");
  json manifest;
  try {
    manifest = json::parse(bytes.substr(nl1 + 1, nl2 - nl1 - 1));
  } catch (const json::parse_error& e) {
    corrupt(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!manifest.is_object()) corrupt("manifest is not an object");

  Manifest m;
  try {
    if (!manifest.at("entries").is_array()) corrupt("'entries' is not an array");
    m.payload_bytes = manifest.at("payload_bytes").get<std::size_t>();
    m.payload_crc = manifest.at("payload_crc32").get<std::uint32_t>();
    std::size_t running = 0;
    for (const json& je : manifest.at("entries")) {
      Entry e;
      e.name = je.at("name").get<std::string>();
      std::size_t expected = 0;
      for (const json& js : je.at("shapes")) {
        Block b;
        b.shape = js.get<std::vector<std::size_t>>();
        if (b.shape.empty()) corrupt("entry '" + e.name + "' has an empty shape");
        for (std::size_t d : b.shape) {
          if (d == 0) corrupt("entry '" + e.name + "' has a zero dimension");
        }
        expected += element_count(b.shape) * 4;
        e.blocks.push_back(std::move(b));
      }
      const auto offset = je.at("byte_offset").get<std::size_t>();
      const auto length = je.at("byte_length").get<std::size_t>();
      if (length != expected) {
        throw ContainerError(ContainerErrorKind::kShapeMismatch,
                             "entry '" + e.name + "' declares shapes needing " + std::to_string(expected) +
                                 " bytes but byte_length is " + std::to_string(length));
      }
      if (offset != running) {
        throw ContainerError(ContainerErrorKind::kShapeMismatch,
                             "entry '" + e.name + "' starts at byte " + std::to_string(offset) + ", expected " +
                                 std::to_string(running));
      }
      running += length;
      m.offsets.push_back(offset);
      m.entries.push_back(std::move(e));
    }
    if (running != m.payload_bytes) {
      throw ContainerError(ContainerErrorKind::kShapeMismatch,
                           "entries cover " + std::to_string(running) + " bytes but payload_bytes is " +
                               std::to_string(m.payload_bytes));
    }
  } catch (const json::exception& e) {
    corrupt(std::string("manifest field error: ") + e.what());
  }

  payload = bytes.substr(nl2 + 1);
  if (payload.size() < m.payload_bytes) {
    throw ContainerError(ContainerErrorKind::kTruncatedPayload,
                         "payload has " + std::to_string(payload.size()) + " bytes, manifest declares " +
                             std::to_string(m.payload_bytes));
  }
  if (payload.size() > m.payload_bytes) {
    corrupt(std::to_string(payload.size() - m.payload_bytes) + " trailing bytes after the payload");
  }
  if (crc32(payload) != m.payload_crc) {
    throw ContainerError(ContainerErrorKind::kChecksumMismatch,
                         "payload CRC-32 " + std::to_string(crc32(payload)) + " does not match manifest " +
                             std::to_string(m.payload_crc));
  }

  m.header = std::move(manifest);
  for (const char* key : kReservedKeys) m.header.erase(key);
  return m;
}

}  // namespace

std::string encode_container(const Container& container) {
  std::string payload;
  json entries = json::array();
  for (const Entry& e : container.entries) {
    const std::size_t offset = payload.size();
    json shapes = json::array();
    for (const Block& b : e.blocks) {
      if (b.shape.empty() || element_count(b.shape) != b.values.size()) {
        throw ContainerError(ContainerErrorKind::kShapeMismatch,
                             "entry '" + e.name + "' block shape does not match its value count");
      }
      shapes.push_back(b.shape);
      for (double v : b.values) append_f32(payload, v);
    }
    entries.push_back({{"name", e.name},
                       {"shapes", std::move(shapes)},
                       {"byte_offset", offset},
                       {"byte_length", payload.size() - offset}});
  }
  json manifest = container.header.is_object() ? container.header : json::object();
  manifest["format"] = kContainerMagic;
  manifest["entries"] = std::move(entries);
  manifest["payload_bytes"] = payload.size();
  manifest["payload_crc32"] = crc32(payload);

  std::string out(kContainerMagic);
  out += '\n';
  out += manifest.dump();
  out += '\n';
  out += payload;
  return out;
}

Container decode_container(std::string_view bytes) {
  std::string_view payload;
  Manifest m = read_manifest(bytes, payload);
  Container c;
  c.header = std::move(m.header);
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    Entry& e = m.entries[i];
    const char* p = payload.data() + m.offsets[i];
    for (Block& b : e.blocks) {
      b.values.resize(element_count(b.shape));
      for (double& v : b.values) {
        v = read_f32(p);
        p += 4;
      }
    }
    c.entries.push_back(std::move(e));
  }
  return c;
}

std::string container_payload(std::string_view bytes) {
  std::string_view payload;
  read_manifest(bytes, payload);
  return std::string(payload);
}

void save_container(const Container& container, const std::filesystem::path& path) {
  write_file_atomic(path, encode_container(container));
}

Container load_container(const std::filesystem::path& path) { return decode_container(read_file(path)); }

}  // namespace synthcse::adapter
