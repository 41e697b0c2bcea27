#include "synthcse/adapter/lora.hpp"

#include <charconv>
#include <stdexcept>

#include "synthcse/adapter/container.hpp"
#include "synthcse/common/atomic_file.hpp"

namespace synthcse::adapter {

namespace {

std::string dims(const Matrix& m) { return "[" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + "]"; }

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string meta_or(const LoraAdapter& a, const std::string& key, const std::string& fallback) {
  const auto it = a.metadata.find(key);
  return it == a.metadata.end() ? fallback : it->second;
}

// a + lambda * (t - s) per element. An exact-zero update leaves a untouched so
// that signed zeros survive lambda = 0 and t == s.
Matrix shift(const Matrix& a, const Matrix& t, const Matrix& s, double lambda) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double term = lambda * (t.data[i] - s.data[i]);
    if (term != 0.0) out.data[i] = a.data[i] + term;
  }
  return out;
}

void require_compatible(const LoraAdapter& ref, const LoraAdapter& other, const char* what) {
  if (other.rank != ref.rank) {
    throw std::invalid_argument(std::string("compose: ") + what + " has rank " + std::to_string(other.rank) +
                                ", task adapter has rank " + std::to_string(ref.rank));
  }
  for (const auto& [name, f] : ref.entries) {
    const auto it = other.entries.find(name);
    if (it == other.entries.end()) {
      throw std::invalid_argument(std::string("compose: entry '") + name + "' missing from " + what);
    }
    const LoraFactors& g = it->second;
    if (g.a.rows != f.a.rows || g.a.cols != f.a.cols || g.b.rows != f.b.rows || g.b.cols != f.b.cols) {
      throw std::invalid_argument(std::string("compose: entry '") + name + "' has factors A" + dims(g.a) + " B" +
                                  dims(g.b) + " in " + what + ", expected A" + dims(f.a) + " B" + dims(f.b));
    }
  }
  for (const auto& [name, f] : other.entries) {
    if (!ref.entries.contains(name)) {
      throw std::invalid_argument(std::string("compose: entry '") + name + "' of " + what +
                                  " is not in the task adapter");
    }
  }
}

}  // namespace

Matrix Matrix::zeros(std::size_t rows, std::size_t cols) { return Matrix{rows, cols, std::vector<double>(rows * cols)}; }

void LoraAdapter::validate() const {
  if (rank == 0) throw std::invalid_argument("lora adapter: rank must be positive");
  for (const auto& [name, f] : entries) {
    if (f.a.rows != rank || f.b.cols != rank) {
      throw std::invalid_argument("lora adapter: entry '" + name + "' has A" + dims(f.a) + " B" + dims(f.b) +
                                  " but the declared rank is " + std::to_string(rank));
    }
    if (f.a.data.size() != f.a.rows * f.a.cols || f.b.data.size() != f.b.rows * f.b.cols) {
      throw std::invalid_argument("lora adapter: entry '" + name + "' has factor data of the wrong length");
    }
    if (f.a.cols == 0 || f.b.rows == 0) {
      throw std::invalid_argument("lora adapter: entry '" + name + "' has an empty dimension");
    }
  }
}

Matrix lora_delta(const LoraAdapter& adapter, std::string_view name) {
  const auto it = adapter.entries.find(std::string(name));
  if (it == adapter.entries.end()) {
    std::string available;
    for (const auto& [n, f] : adapter.entries) available += (available.empty() ? "" : ", ") + n;
    throw std::out_of_range("lora_delta: no entry '" + std::string(name) + "' (available: " +
                            (available.empty() ? "none" : available) + ")");
  }
  const LoraFactors& f = it->second;
  const double scale = adapter.alpha / static_cast<double>(adapter.rank);
  Matrix delta = Matrix::zeros(f.b.rows, f.a.cols);
  for (std::size_t i = 0; i < f.b.rows; ++i) {
    for (std::size_t k = 0; k < adapter.rank; ++k) {
      const double bik = scale * f.b.at(i, k);
      for (std::size_t j = 0; j < f.a.cols; ++j) delta.at(i, j) += bik * f.a.at(k, j);
    }
  }
  return delta;
}

LoraAdapter compose_adamergex(const LoraAdapter& ta_src, const LoraAdapter& la_tgt, const LoraAdapter& la_src,
                              double lambda) {
  ta_src.validate();
  require_compatible(ta_src, la_tgt, "target language adapter");
  require_compatible(ta_src, la_src, "source language adapter");

  LoraAdapter out;
  out.rank = ta_src.rank;
  out.alpha = ta_src.alpha;
  out.metadata = ta_src.metadata;
  for (const auto& [name, f] : ta_src.entries) {
    const LoraFactors& t = la_tgt.entries.at(name);
    const LoraFactors& s = la_src.entries.at(name);
    out.entries.emplace(name, LoraFactors{shift(f.a, t.a, s.a, lambda), shift(f.b, t.b, s.b, lambda)});
  }
  out.metadata["composition"] = "adamergex";
  out.metadata["composition.lambda"] = format_double(lambda);
  out.metadata["composition.task_adapter"] = meta_or(ta_src, "id", "");
  out.metadata["composition.target_language_adapter"] = meta_or(la_tgt, "id", "");
  out.metadata["composition.source_language_adapter"] = meta_or(la_src, "id", "");
  if (la_tgt.metadata.contains("language")) out.metadata["language"] = la_tgt.metadata.at("language");
  return out;
}

WeightMap merge_into_base(const WeightMap& base, const LoraAdapter& adapter) {
  adapter.validate();
  WeightMap merged = base;
  for (const auto& [name, f] : adapter.entries) {
    const auto it = merged.find(name);
    if (it == merged.end()) throw std::invalid_argument("merge: base has no weight named '" + name + "'");
    const Matrix delta = lora_delta(adapter, name);
    Matrix& w = it->second;
    if (w.rows != delta.rows || w.cols != delta.cols) {
      throw std::invalid_argument("merge: base weight '" + name + "' is " + dims(w) + " but the update is " +
                                  dims(delta));
    }
    for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] += delta.data[i];
  }
  return merged;
}

std::vector<double> default_lambda_grid() { return {0.0, 0.25, 0.5, 0.75, 1.0, 1.5}; }

std::string serialize_adapter(const LoraAdapter& adapter) {
  adapter.validate();
  Container c;
  c.header["kind"] = "lora_adapter";
  c.header["rank"] = adapter.rank;
  c.header["alpha"] = adapter.alpha;
  c.header["metadata"] = adapter.metadata;
  for (const auto& [name, f] : adapter.entries) {
    c.entries.push_back(Entry{name, {Block{{f.a.rows, f.a.cols}, f.a.data}, Block{{f.b.rows, f.b.cols}, f.b.data}}});
  }
  return encode_container(c);
}

LoraAdapter parse_adapter(std::string_view bytes) {
  Container c = decode_container(bytes);
  LoraAdapter a;
  try {
    if (c.header.at("kind").get<std::string>() != "lora_adapter") {
      throw ContainerError(ContainerErrorKind::kCorruptManifest, "container is not a lora_adapter");
    }
    a.rank = c.header.at("rank").get<std::size_t>();
    a.alpha = c.header.at("alpha").get<double>();
    a.metadata = c.header.value("metadata", std::map<std::string, std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw ContainerError(ContainerErrorKind::kCorruptManifest, std::string("adapter header: ") + e.what());
  }
  for (Entry& e : c.entries) {
    if (e.blocks.size() != 2 || e.blocks[0].shape.size() != 2 || e.blocks[1].shape.size() != 2) {
      throw ContainerError(ContainerErrorKind::kShapeMismatch, "entry '" + e.name + "' is not an (A, B) matrix pair");
    }
    LoraFactors f{Matrix{e.blocks[0].shape[0], e.blocks[0].shape[1], std::move(e.blocks[0].values)},
                  Matrix{e.blocks[1].shape[0], e.blocks[1].shape[1], std::move(e.blocks[1].values)}};
    if (f.a.rows != a.rank || f.b.cols != a.rank) {
      throw ContainerError(ContainerErrorKind::kShapeMismatch,
                           "entry '" + e.name + "' factors A" + dims(f.a) + " B" + dims(f.b) +
                               " disagree with rank " + std::to_string(a.rank));
    }
    if (!a.entries.emplace(e.name, std::move(f)).second) {
      throw ContainerError(ContainerErrorKind::kCorruptManifest, "duplicate entry '" + e.name + "'");
    }
  }
  return a;
}

void save_adapter(const LoraAdapter& adapter, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_adapter(adapter));
}

LoraAdapter load_adapter(const std::filesystem::path& path) { return parse_adapter(read_file(path)); }

}  // namespace synthcse::adapter
