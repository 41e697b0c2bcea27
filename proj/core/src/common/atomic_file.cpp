#include "synthcse/common/atomic_file.hpp"

#include <sstream>
#include <stdexcept>
#include <system_error>

namespace synthcse {

AtomicFile::AtomicFile(std::filesystem::path path, bool binary)
    : path_(std::move(path)), temp_(path_.string() + ".tmp") {
  auto mode = std::ios::out | std::ios::trunc;
  if (binary) mode |= std::ios::binary;
  out_.open(temp_, mode);
  if (!out_) {
    throw std::runtime_error("cannot open '" + temp_.string() + "' for writing");
  }
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_) throw std::runtime_error("write to '" + temp_.string() + "' failed");
  out_.close();
  std::filesystem::rename(temp_, path_);
  committed_ = true;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  AtomicFile file(path, true);
  file.stream().write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  file.commit();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace synthcse
