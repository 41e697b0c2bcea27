#include <algorithm>
#include <cmath>
#include <functional>

#include "synthcse/autodiff/grad_check.hpp"
#include "synthcse/autodiff/graph.hpp"
#include "synthcse/autodiff/op_suite.hpp"
#include "test_support.hpp"

namespace synthcse::autodiff {
namespace {

using synthcse::testing::random_vector;

Tensor leaf(std::size_t r, std::size_t c, std::vector<double> v) { return Tensor::matrix(r, c, std::move(v), true); }

TEST(Tensor, ValidateRejectsInconsistentSizes) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), std::invalid_argument);
  Tensor t = Tensor::zeros({2, 2});
  t.grad = std::vector<double>(3);
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(Forward, MatmulOfOnes) {
  Graph g;
  const NodeId a = g.input(Tensor::filled({2, 3}, 1.0));
  const NodeId b = g.input(Tensor::filled({3, 2}, 1.0));
  const Tensor& c = g.value(g.matmul(a, b));
  ASSERT_EQ(c.shape, (Shape{2, 2}));
  for (double v : c.data) EXPECT_EQ(v, 3.0);
}

TEST(Forward, SoftmaxOfEqualRow) {
  Graph g;
  const Tensor& s = g.value(g.softmax_rows(g.input(Tensor::filled({1, 4}, 0.7))));
  for (double v : s.data) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Forward, LayerNormMatchesHandComputation) {
  Graph g;
  const NodeId x = g.input(Tensor::matrix(1, 3, {1, 2, 3}));
  const NodeId gain = g.input(Tensor::filled({1, 3}, 1.0));
  const NodeId bias = g.input(Tensor::zeros({1, 3}));
  const Tensor& y = g.value(g.layer_norm(x, gain, bias, 1e-5));
  // population variance of {1,2,3} is 2/3
  const double sd = std::sqrt(2.0 / 3.0 + 1e-5);
  EXPECT_NEAR(y.data[0], -1.0 / sd, 1e-12);
  EXPECT_NEAR(y.data[1], 0.0, 1e-12);
  EXPECT_NEAR(y.data[2], 1.0 / sd, 1e-12);
  EXPECT_NEAR(y.data[0], -1.2247, 1e-4);
}

TEST(Forward, ShapeMismatchNamesOpAndShapes) {
  Graph g;
  const NodeId a = g.input(Tensor::zeros({2, 3}));
  const NodeId b = g.input(Tensor::zeros({2, 3}));
  try {
    g.matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(Forward, BroadcastOnlyOverLeadingDimension) {
  Graph g;
  const NodeId m = g.input(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  const NodeId row = g.input(Tensor::matrix(1, 2, {10, 20}));
  EXPECT_EQ(g.value(g.add(m, row)).data, (std::vector<double>{11, 22, 13, 24}));
  const NodeId col = g.input(Tensor::matrix(2, 1, {1, 1}));
  EXPECT_THROW(g.add(m, col), ShapeError);
}

TEST(Forward, DeterministicAcrossGraphs) {
  Rng rng(3);
  const Tensor x = Tensor::matrix(4, 5, random_vector(rng, 20));
  auto run = [&] {
    Graph g;
    const NodeId n = g.input(x);
    return g.value(g.dropout(g.tanh(g.l2_normalize_rows(n)), 0.8, 99)).data;
  };
  EXPECT_EQ(run(), run());
}

TEST(Forward, L2NormalizedRowsHaveUnitNorm) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + rng.index(8), c = 1 + rng.index(8);
    Graph g;
    const Tensor& y = g.value(g.l2_normalize_rows(g.input(Tensor::matrix(r, c, random_vector(rng, r * c, -5, 5)))));
    for (std::size_t i = 0; i < r; ++i) {
      double sq = 0.0;
      for (std::size_t j = 0; j < c; ++j) sq += y.at(i, j) * y.at(i, j);
      EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
    }
  }
}

TEST(Forward, ZeroNormRowIsAnError) {
  Graph g;
  const NodeId x = g.input(Tensor::matrix(2, 2, {1, 0, 0, 0}));
  EXPECT_THROW(g.l2_normalize_rows(x), std::domain_error);
  const NodeId ok = g.input(Tensor::matrix(1, 2, {1, 1}));
  EXPECT_THROW(g.cosine_matrix(ok, x), std::domain_error);
}

TEST(Forward, DropoutKeepOneIsIdentity) {
  Rng rng(4);
  const Tensor x = Tensor::matrix(3, 7, random_vector(rng, 21));
  Graph g;
  EXPECT_EQ(g.value(g.dropout(g.input(x), 1.0, 123)).data, x.data);
}

TEST(Forward, DropoutMaskIsSeededAndScaled) {
  const Tensor x = Tensor::filled({8, 8}, 1.0);
  Graph g;
  const NodeId n = g.input(x);
  const auto a = g.value(g.dropout(n, 0.5, 1)).data;
  const auto b = g.value(g.dropout(n, 0.5, 1)).data;
  const auto c = g.value(g.dropout(n, 0.5, 2)).data;
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (double v : a) EXPECT_TRUE(v == 0.0 || v == 2.0);
}

TEST(Backward, SumGivesOnes) {
  Graph g;
  const NodeId x = g.input(Tensor({3}, {1, 2, 3}, true));
  g.backward(g.sum(x));
  EXPECT_EQ(g.grad(x), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, SquareGivesTwiceX) {
  Graph g;
  const NodeId x = g.input(Tensor({2}, {1, 2}, true));
  g.backward(g.sum(g.mul(x, x)));
  EXPECT_EQ(g.grad(x), (std::vector<double>{2, 4}));
}

TEST(Backward, RejectsNonScalarLoss) {
  Graph g;
  const NodeId x = g.input(leaf(2, 2, {1, 2, 3, 4}));
  EXPECT_THROW(g.backward(g.tanh(x)), ShapeError);
}

TEST(Backward, RepeatedCallsDoNotAccumulate) {
  Graph g;
  const NodeId x = g.input(Tensor({2}, {1, 2}, true));
  const NodeId loss = g.sum(g.scale(x, 3.0));
  g.backward(loss);
  const auto first = g.grad(x);
  g.backward(loss);
  EXPECT_EQ(g.grad(x), first);
  EXPECT_EQ(first, (std::vector<double>{3, 3}));
}

TEST(Backward, ConstantsGetNoGradient) {
  Graph g;
  const NodeId x = g.input(Tensor({2}, {1, 2}, true));
  const NodeId c = g.input(Tensor({2}, {5, 6}, false));
  g.backward(g.sum(g.mul(x, c)));
  EXPECT_EQ(g.grad(x), (std::vector<double>{5, 6}));
  EXPECT_TRUE(g.grad(c).empty());
}

TEST(GradCheck, LinearGraphIsNearlyExact) {
  Rng rng(1);
  const Tensor w = Tensor::matrix(3, 4, random_vector(rng, 12));
  const GraphBuilder build = [w](Graph& g, std::span<const NodeId> in) {
    return g.sum(g.matmul(g.input(w), in[0]));
  };
  EXPECT_LT(grad_check(build, {Tensor::matrix(4, 2, random_vector(rng, 8))}).max_relative_error, 1e-7);
}

TEST(GradCheck, SoftmaxCrossEntropyComposite) {
  Rng rng(2);
  // -mean_i log softmax(x)_i,target(i) via a one-hot mask.
  const Tensor onehot = Tensor::matrix(3, 4, {1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0});
  const GraphBuilder build = [onehot](Graph& g, std::span<const NodeId> in) {
    const NodeId logp = g.log(g.softmax_rows(in[0]));
    return g.scale(g.negate(g.sum(g.mul(logp, g.input(onehot)))), 1.0 / 3.0);
  };
  EXPECT_LT(grad_check(build, {Tensor::matrix(3, 4, random_vector(rng, 12, -2, 2))}).max_relative_error, 1e-4);
}

TEST(GradCheck, DropoutWithFrozenMask) {
  Rng rng(3);
  const GraphBuilder build = [](Graph& g, std::span<const NodeId> in) {
    return g.sum(g.tanh(g.dropout(in[0], 0.6, 77)));
  };
  EXPECT_LT(grad_check(build, {Tensor::matrix(4, 4, random_vector(rng, 16))}).max_relative_error, 1e-6);
}

TEST(GradCheck, ReportsNonFiniteCoordinate) {
  const GraphBuilder build = [](Graph& g, std::span<const NodeId> in) { return g.sum(g.log(in[0])); };
  try {
    // Only the downward probe of the last coordinate leaves the domain.
    grad_check(build, {Tensor::matrix(1, 3, {1.0, 2.0, 5e-6})});
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.input, 0u);
    EXPECT_EQ(e.coordinate, 2u);
  }
}

TEST(GradCheck, EveryOpOnRandomInputs) {
  for (const OpCheck& c : run_op_suite(100, 20240611)) {
    EXPECT_LT(c.worst_error, 1e-4) << c.op;
    EXPECT_EQ(c.trials, 100u);
  }
}

TEST(GradCheck, SuiteCoversTheRequiredOps) {
  const auto names = op_suite_names();
  for (const char* required : {"matmul", "add", "scale", "softmax_rows", "layer_norm", "tanh", "embedding", "mean_rows",
                               "mean_of_two", "l2_normalize_rows", "cosine_matrix", "dropout", "log", "exp", "negate",
                               "sum", "index_select"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), required), names.end()) << required;
  }
}

// Chains three ops drawn at random from a pool of shape-preserving unary ops.
TEST(GradCheck, RandomThreeOpGraphs) {
  using Unary = std::function<NodeId(Graph&, NodeId)>;
  const std::vector<Unary> pool = {
      [](Graph& g, NodeId x) { return g.tanh(x); },
      [](Graph& g, NodeId x) { return g.scale(x, 0.7); },
      [](Graph& g, NodeId x) { return g.softmax_rows(x); },
      [](Graph& g, NodeId x) { return g.exp(g.scale(x, 0.3)); },
      [](Graph& g, NodeId x) { return g.mul(x, x); },
      [](Graph& g, NodeId x) { return g.negate(x); },
      [](Graph& g, NodeId x) { return g.mean_of_two(x, g.tanh(x)); },
  };
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + rng.index(6), c = 2 + rng.index(6);
    const std::size_t a = rng.index(pool.size()), b = rng.index(pool.size()), d = rng.index(pool.size());
    const Tensor w = Tensor::matrix(r, c, random_vector(rng, r * c));
    const GraphBuilder build = [&, a, b, d, w](Graph& g, std::span<const NodeId> in) {
      return g.sum(g.mul(pool[d](g, pool[b](g, pool[a](g, in[0]))), g.input(w)));
    };
    EXPECT_LT(grad_check(build, {Tensor::matrix(r, c, random_vector(rng, r * c))}).max_relative_error, 1e-4)
        << "ops " << a << "," << b << "," << d;
  }
}

}  // namespace
}  // namespace synthcse::autodiff
