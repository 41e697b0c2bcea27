#include <nlohmann/json.hpp>

#include "synthcse/adapter/container.hpp"
#include "synthcse/adapter/lora.hpp"
#include "test_support.hpp"

namespace synthcse::adapter {
namespace {

using synthcse::testing::random_float_vector;

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  return Matrix{r, c, random_float_vector(rng, r * c)};
}

// Same entry names and shapes for a given (seed of shapes); values from rng.
LoraAdapter random_adapter(Rng& rng, std::size_t rank, const std::vector<std::pair<std::size_t, std::size_t>>& dims) {
  LoraAdapter a;
  a.rank = rank;
  a.alpha = 16.0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto [out, in] = dims[i];
    a.entries["layer" + std::to_string(i) + ".query"] = {random_matrix(rng, rank, in), random_matrix(rng, out, rank)};
  }
  return a;
}

std::vector<std::pair<std::size_t, std::size_t>> random_dims(Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> dims(1 + rng.index(3));
  for (auto& d : dims) d = {1 + rng.index(5), 1 + rng.index(5)};
  return dims;
}

TEST(LoraDelta, ZeroBGivesZero) {
  LoraAdapter a;
  a.rank = 2;
  a.entries["w"] = {Matrix{2, 3, {1, 2, 3, 4, 5, 6}}, Matrix::zeros(4, 2)};
  EXPECT_EQ(lora_delta(a, "w"), Matrix::zeros(4, 3));
}

TEST(LoraDelta, RankOneOuterProduct) {
  LoraAdapter a;
  a.rank = 1;
  a.alpha = 1.0;
  a.entries["w"] = {Matrix{1, 2, {1, 2}}, Matrix{2, 1, {1, 1}}};
  EXPECT_EQ(lora_delta(a, "w").data, (std::vector<double>{1, 2, 1, 2}));
}

TEST(LoraDelta, MatchesTripleLoop) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const LoraAdapter a = random_adapter(rng, 2, random_dims(rng));
    for (const auto& [name, f] : a.entries) {
      const Matrix got = lora_delta(a, name);
      ASSERT_EQ(got.rows, f.b.rows);
      ASSERT_EQ(got.cols, f.a.cols);
      for (std::size_t i = 0; i < got.rows; ++i) {
        for (std::size_t j = 0; j < got.cols; ++j) {
          double want = 0.0;
          for (std::size_t k = 0; k < 2; ++k) want += f.b.at(i, k) * f.a.at(k, j);
          EXPECT_NEAR(got.at(i, j), 16.0 / 2.0 * want, 1e-12);
        }
      }
    }
  }
}

TEST(LoraDelta, LinearInAlpha) {
  Rng rng(2);
  LoraAdapter a = random_adapter(rng, 3, {{4, 5}});
  const Matrix base = lora_delta(a, "layer0.query");
  a.alpha *= 2.0;
  const Matrix doubled = lora_delta(a, "layer0.query");
  for (std::size_t i = 0; i < base.data.size(); ++i) EXPECT_EQ(doubled.data[i], 2.0 * base.data[i]);
}

TEST(LoraDelta, UnknownNameListsAvailable) {
  Rng rng(3);
  const LoraAdapter a = random_adapter(rng, 2, {{2, 2}});
  try {
    lora_delta(a, "missing");
    FAIL();
  } catch (const std::out_of_range& e) {
    EXPECT_NE(std::string(e.what()).find("layer0.query"), std::string::npos);
  }
}

TEST(Compose, LambdaZeroIsBitExact) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dims = random_dims(rng);
    const LoraAdapter ta = random_adapter(rng, 2, dims), lt = random_adapter(rng, 2, dims),
                      ls = random_adapter(rng, 2, dims);
    EXPECT_EQ(compose_adamergex(ta, lt, ls, 0.0).entries, ta.entries);
  }
}

TEST(Compose, SelfDifferenceAnnihilates) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dims = random_dims(rng);
    const LoraAdapter ta = random_adapter(rng, 2, dims), la = random_adapter(rng, 2, dims);
    EXPECT_EQ(compose_adamergex(ta, la, la, rng.uniform(-3, 3)).entries, ta.entries);
  }
}

TEST(Compose, ElementwiseOracle) {
  Rng rng(6);
  const LoraAdapter ta = random_adapter(rng, 2, {{3, 2}}), lt = random_adapter(rng, 2, {{3, 2}}),
                    ls = random_adapter(rng, 2, {{3, 2}});
  const LoraAdapter out = compose_adamergex(ta, lt, ls, 0.3);
  for (const auto& [name, f] : out.entries) {
    const auto& t = ta.entries.at(name);
    const auto& g = lt.entries.at(name);
    const auto& s = ls.entries.at(name);
    for (std::size_t i = 0; i < f.a.data.size(); ++i)
      EXPECT_NEAR(f.a.data[i], t.a.data[i] + 0.3 * (g.a.data[i] - s.a.data[i]), 1e-12);
    for (std::size_t i = 0; i < f.b.data.size(); ++i)
      EXPECT_NEAR(f.b.data[i], t.b.data[i] + 0.3 * (g.b.data[i] - s.b.data[i]), 1e-12);
  }
  EXPECT_EQ(out.metadata.at("composition.lambda"), "0.3");
}

TEST(Compose, LinearInLambda) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dims = random_dims(rng);
    const LoraAdapter ta = random_adapter(rng, 2, dims), lt = random_adapter(rng, 2, dims),
                      ls = random_adapter(rng, 2, dims);
    const double l1 = rng.uniform(-2, 2), l2 = rng.uniform(-2, 2);
    const LoraAdapter sum = compose_adamergex(ta, lt, ls, l1 + l2);
    const LoraAdapter first = compose_adamergex(ta, lt, ls, l1);
    for (const auto& [name, f] : sum.entries) {
      const auto& p = first.entries.at(name);
      const auto& g = lt.entries.at(name);
      const auto& s = ls.entries.at(name);
      for (std::size_t i = 0; i < f.a.data.size(); ++i)
        EXPECT_NEAR(f.a.data[i], p.a.data[i] + l2 * (g.a.data[i] - s.a.data[i]), 1e-12);
      for (std::size_t i = 0; i < f.b.data.size(); ++i)
        EXPECT_NEAR(f.b.data[i], p.b.data[i] + l2 * (g.b.data[i] - s.b.data[i]), 1e-12);
    }
  }
}

// Composing factors is not the same as composing the materialised updates,
// because the update is bilinear in (B, A).
TEST(Compose, FactorSpaceDiffersFromDeltaSpace) {
  Rng rng(8);
  const LoraAdapter ta = random_adapter(rng, 2, {{3, 3}}), lt = random_adapter(rng, 2, {{3, 3}}),
                    ls = random_adapter(rng, 2, {{3, 3}});
  const double lambda = 0.5;
  const std::string name = "layer0.query";
  const Matrix factor_space = lora_delta(compose_adamergex(ta, lt, ls, lambda), name);
  const Matrix dt = lora_delta(ta, name), dg = lora_delta(lt, name), ds = lora_delta(ls, name);
  double max_gap = 0.0;
  for (std::size_t i = 0; i < dt.data.size(); ++i) {
    const double delta_space = dt.data[i] + lambda * (dg.data[i] - ds.data[i]);
    max_gap = std::max(max_gap, std::abs(delta_space - factor_space.data[i]));
  }
  EXPECT_GT(max_gap, 1e-3);
}

TEST(Compose, MismatchNamesTheEntry) {
  Rng rng(9);
  const LoraAdapter ta = random_adapter(rng, 2, {{3, 2}, {2, 2}});
  LoraAdapter other = random_adapter(rng, 2, {{3, 2}, {2, 3}});
  try {
    compose_adamergex(ta, other, ta, 1.0);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("layer1.query"), std::string::npos) << e.what();
  }
  const LoraAdapter rank3 = random_adapter(rng, 3, {{3, 2}, {2, 2}});
  EXPECT_THROW(compose_adamergex(ta, rank3, ta, 1.0), std::invalid_argument);
  other.entries.erase("layer1.query");
  EXPECT_THROW(compose_adamergex(ta, ta, other, 1.0), std::invalid_argument);
}

TEST(Merge, ZeroAdapterAndAdditiveInverse) {
  Rng rng(10);
  const LoraAdapter a = random_adapter(rng, 2, {{3, 4}, {2, 2}});
  WeightMap base = {{"layer0.query", random_matrix(rng, 3, 4)},
                    {"layer1.query", random_matrix(rng, 2, 2)},
                    {"untouched", random_matrix(rng, 1, 1)}};
  LoraAdapter zero = a;
  for (auto& [name, f] : zero.entries) f.b = Matrix::zeros(f.b.rows, f.b.cols);
  EXPECT_EQ(merge_into_base(base, zero), base);

  const WeightMap merged = merge_into_base(base, a);
  EXPECT_EQ(merged.at("untouched"), base.at("untouched"));
  for (const auto& [name, w] : base) {
    if (!a.entries.contains(name)) continue;
    const Matrix d = lora_delta(a, name);
    for (std::size_t i = 0; i < w.data.size(); ++i) {
      EXPECT_NEAR(merged.at(name).data[i], w.data[i] + d.data[i], 1e-12);
      EXPECT_NEAR(merged.at(name).data[i] - d.data[i], w.data[i], 1e-12);
    }
  }
  base.erase("layer1.query");
  EXPECT_THROW(merge_into_base(base, a), std::invalid_argument);
}

TEST(Serialization, RoundTripIsBitExact) {
  Rng rng(11);
  synthcse::testing::TempDir dir;
  for (int trial = 0; trial < 100; ++trial) {
    LoraAdapter a = random_adapter(rng, 1 + rng.index(4), random_dims(rng));
    a.alpha = rng.uniform(1, 32);
    a.metadata = {{"language", "hi"}, {"id", "adapter-" + std::to_string(trial)}};
    save_adapter(a, dir / "a.lora");
    const LoraAdapter b = load_adapter(dir / "a.lora");
    EXPECT_EQ(b.rank, a.rank);
    EXPECT_EQ(b.alpha, a.alpha);
    EXPECT_EQ(b.metadata, a.metadata);
    EXPECT_EQ(b.entries, a.entries);
  }
}

TEST(Serialization, EmptyAdapter) {
  LoraAdapter a;
  a.rank = 4;
  const LoraAdapter b = parse_adapter(serialize_adapter(a));
  EXPECT_TRUE(b.entries.empty());
  EXPECT_EQ(b.rank, 4u);
}

struct Parts {
  nlohmann::json manifest;
  std::string payload;
};

Parts split(const std::string& bytes) {
  const auto first = bytes.find('\n');
  const auto second = bytes.find('\n', first + 1);
  return {nlohmann::json::parse(bytes.substr(first + 1, second - first - 1)), bytes.substr(second + 1)};
}

std::string join(const Parts& p) { return "LORA1\n" + p.manifest.dump() + "\n" + p.payload; }

ContainerErrorKind error_of(const std::string& bytes) {
  try {
    parse_adapter(bytes);
  } catch (const ContainerError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ContainerError";
  return ContainerErrorKind::kCorruptManifest;
}

class CorruptFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(12);
    bytes_ = serialize_adapter(random_adapter(rng, 2, {{3, 2}}));
  }
  std::string bytes_;
};

TEST_F(CorruptFiles, WrongDeclaredShape) {
  Parts p = split(bytes_);
  p.manifest["entries"][0]["shapes"][0] = {3, 3};
  EXPECT_EQ(error_of(join(p)), ContainerErrorKind::kShapeMismatch);
}

TEST_F(CorruptFiles, ShapeInconsistentWithRank) {
  // Byte-consistent, but A is declared [1 x 4] under rank 2.
  Parts p = split(bytes_);
  p.manifest["entries"][0]["shapes"][0] = {1, 4};
  EXPECT_EQ(error_of(join(p)), ContainerErrorKind::kShapeMismatch);
}

TEST_F(CorruptFiles, TruncatedPayload) {
  EXPECT_EQ(error_of(bytes_.substr(0, bytes_.size() - 4)), ContainerErrorKind::kTruncatedPayload);
}

TEST_F(CorruptFiles, ChecksumMismatch) {
  std::string bad = bytes_;
  bad.back() = static_cast<char>(bad.back() ^ 0x01);
  EXPECT_EQ(error_of(bad), ContainerErrorKind::kChecksumMismatch);
}

TEST_F(CorruptFiles, GarbledManifest) {
  EXPECT_EQ(error_of("LORA1\n{not json\n"), ContainerErrorKind::kCorruptManifest);
  EXPECT_EQ(error_of("LORA2\n{}\n"), ContainerErrorKind::kCorruptManifest);
  Parts p = split(bytes_);
  p.manifest.erase("payload_crc32");
  EXPECT_EQ(error_of(join(p)), ContainerErrorKind::kCorruptManifest);
}

TEST(Container, Crc32KnownValue) { EXPECT_EQ(crc32("123456789"), 0xCBF43926u); }

TEST(Container, GenericEntriesRoundTrip) {
  Container c;
  c.header["kind"] = "test";
  c.entries.push_back({"x", {Block{{2, 2}, {1, 2, 3, 4}}, Block{{1}, {0.5}}}});
  const Container back = decode_container(encode_container(c));
  ASSERT_EQ(back.entries.size(), 1u);
  EXPECT_EQ(back.entries[0].blocks[1].values, (std::vector<double>{0.5}));
  EXPECT_EQ(back.header.at("kind"), "test");
}

}  // namespace
}  // namespace synthcse::adapter
