#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace synthcse::adapter {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  static Matrix zeros(std::size_t rows, std::size_t cols);
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

// A: [rank x in_dim], B: [out_dim x rank]; the update is (alpha / rank) * B * A.
struct LoraFactors {
  Matrix a;
  Matrix b;
  bool operator==(const LoraFactors&) const = default;
};

struct LoraAdapter {
  std::size_t rank = 8;
  double alpha = 16.0;
  std::map<std::string, LoraFactors> entries;
  std::map<std::string, std::string> metadata;

  // Every entry has the declared rank and consistent factor shapes.
  void validate() const;
};

using WeightMap = std::map<std::string, Matrix>;

Matrix lora_delta(const LoraAdapter& adapter, std::string_view name);

// TA_tgt = TA_src + lambda * (LA_tgt - LA_src), applied elementwise to the A
// and B factors of every entry. The three adapters must agree on entry names,
// rank and factor shapes.
LoraAdapter compose_adamergex(const LoraAdapter& ta_src, const LoraAdapter& la_tgt, const LoraAdapter& la_src,
                              double lambda);

// W' = W + delta(W) for every adapter entry; other base weights pass through.
WeightMap merge_into_base(const WeightMap& base, const LoraAdapter& adapter);

// Default lambda sweep used when none is given.
std::vector<double> default_lambda_grid();

std::string serialize_adapter(const LoraAdapter& adapter);
LoraAdapter parse_adapter(std::string_view bytes);
void save_adapter(const LoraAdapter& adapter, const std::filesystem::path& path);
LoraAdapter load_adapter(const std::filesystem::path& path);

}  // namespace synthcse::adapter
