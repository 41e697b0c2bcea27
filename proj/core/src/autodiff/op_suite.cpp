#include "synthcse/autodiff/op_suite.hpp"

#include <functional>

#include "synthcse/autodiff/grad_check.hpp"
#include "synthcse/autodiff/graph.hpp"
#include "synthcse/common/rng.hpp"

namespace synthcse::autodiff {

namespace {

Tensor random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  std::vector<double> data(rows * cols);
  for (double& v : data) v = rng.uniform(lo, hi);
  return Tensor::matrix(rows, cols, std::move(data));
}

std::size_t dim(Rng& rng) { return 1 + rng.index(8); }

// Normalising ops are constant along a single feature (and layer norm along
// two), so their true gradient is zero there and the relative error only
// measures rounding noise. Feature dims for them start above that.
std::size_t feature_dim(Rng& rng, std::size_t min) { return min + rng.index(9 - min); }

// sum(out * W) with W drawn once per trial.
NodeId project(Graph& g, NodeId out, const Tensor& weights) {
  return g.sum(g.mul(out, g.input(weights)));
}

struct Case {
  const char* name;
  // Draws inputs and returns a builder closed over any fixed data it needs.
  std::function<std::pair<std::vector<Tensor>, GraphBuilder>(Rng&)> make;
};

// Wraps a unary op: one [r x c] input, projected to a scalar.
template <typename F>
Case unary(const char* name, F op, double lo = -1.0, double hi = 1.0, std::size_t min_cols = 1) {
  return {name, [op, lo, hi, min_cols](Rng& rng) {
            const std::size_t r = dim(rng), c = feature_dim(rng, min_cols);
            Tensor x = random_matrix(rng, r, c, lo, hi);
            const std::uint64_t salt = rng.next();
            Rng wr(salt);
            // Output shape is found by running the op once.
            Graph probe;
            const NodeId out = op(probe, probe.input(x), salt);
            const Tensor w = random_matrix(wr, probe.value(out).rows(), probe.value(out).cols());
            GraphBuilder build = [op, w, salt](Graph& g, std::span<const NodeId> in) {
              return project(g, op(g, in[0], salt), w);
            };
            return std::pair{std::vector<Tensor>{x}, build};
          }};
}

std::vector<Case> cases() {
  std::vector<Case> out;
  out.push_back({"matmul", [](Rng& rng) {
                   const std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
                   std::vector<Tensor> in{random_matrix(rng, m, k), random_matrix(rng, k, n)};
                   const Tensor w = random_matrix(rng, m, n);
                   GraphBuilder b = [w](Graph& g, std::span<const NodeId> x) { return project(g, g.matmul(x[0], x[1]), w); };
                   return std::pair{in, b};
                 }});
  for (const bool broadcast : {false, true}) {
    out.push_back({broadcast ? "add_broadcast" : "add", [broadcast](Rng& rng) {
                     const std::size_t r = dim(rng), c = dim(rng);
                     std::vector<Tensor> in{random_matrix(rng, r, c), random_matrix(rng, broadcast ? 1 : r, c)};
                     const Tensor w = random_matrix(rng, r, c);
                     GraphBuilder b = [w](Graph& g, std::span<const NodeId> x) { return project(g, g.add(x[0], x[1]), w); };
                     return std::pair{in, b};
                   }});
    out.push_back({broadcast ? "mul_broadcast" : "mul", [broadcast](Rng& rng) {
                     const std::size_t r = dim(rng), c = dim(rng);
                     std::vector<Tensor> in{random_matrix(rng, r, c), random_matrix(rng, broadcast ? 1 : r, c)};
                     const Tensor w = random_matrix(rng, r, c);
                     GraphBuilder b = [w](Graph& g, std::span<const NodeId> x) { return project(g, g.mul(x[0], x[1]), w); };
                     return std::pair{in, b};
                   }});
  }
  out.push_back(unary("scale", [](Graph& g, NodeId x, std::uint64_t) { return g.scale(x, -1.7); }));
  out.push_back(unary("softmax_rows", [](Graph& g, NodeId x, std::uint64_t) { return g.softmax_rows(x); }, -2, 2));
  out.push_back(unary("log_softmax_rows", [](Graph& g, NodeId x, std::uint64_t) { return g.log_softmax_rows(x); }, -2, 2));
  out.push_back({"layer_norm", [](Rng& rng) {
                   const std::size_t r = dim(rng), c = feature_dim(rng, 3);
                   std::vector<Tensor> in{random_matrix(rng, r, c, -2, 2), random_matrix(rng, 1, c, 0.5, 1.5),
                                          random_matrix(rng, 1, c)};
                   const Tensor w = random_matrix(rng, r, c);
                   GraphBuilder b = [w](Graph& g, std::span<const NodeId> x) {
                     return project(g, g.layer_norm(x[0], x[1], x[2]), w);
                   };
                   return std::pair{in, b};
                 }});
  out.push_back(unary("tanh", [](Graph& g, NodeId x, std::uint64_t) { return g.tanh(x); }, -2, 2));
  out.push_back({"embedding", [](Rng& rng) {
                   const std::size_t v = dim(rng), d = dim(rng), n = dim(rng);
                   std::vector<std::size_t> ids(n);
                   for (auto& id : ids) id = rng.index(v);
                   std::vector<Tensor> in{random_matrix(rng, v, d)};
                   const Tensor w = random_matrix(rng, n, d);
                   GraphBuilder b = [w, ids](Graph& g, std::span<const NodeId> x) {
                     return project(g, g.embedding(x[0], ids), w);
                   };
                   return std::pair{in, b};
                 }});
  out.push_back(unary("mean_rows", [](Graph& g, NodeId x, std::uint64_t) { return g.mean_rows(x); }));
  out.push_back({"mean_of_two", [](Rng& rng) {
                   const std::size_t r = dim(rng), c = dim(rng);
                   std::vector<Tensor> in{random_matrix(rng, r, c), random_matrix(rng, r, c)};
                   const Tensor w = random_matrix(rng, r, c);
                   GraphBuilder b = [w](Graph& g, std::span<const NodeId> x) {
                     return project(g, g.mean_of_two(x[0], x[1]), w);
                   };
                   return std::pair{in, b};
                 }});
  out.push_back(unary("l2_normalize_rows", [](Graph& g, NodeId x, std::uint64_t) { return g.l2_normalize_rows(x); }, -1, 1, 2));
  out.push_back({"cosine_matrix", [](Rng& rng) {
                   const std::size_t m = dim(rng), n = dim(rng), d = feature_dim(rng, 2);
                   std::vector<Tensor> in{random_matrix(rng, m, d), random_matrix(rng, n, d)};
                   const Tensor w = random_matrix(rng, m, n);
                   GraphBuilder b = [w](Graph& g, std::span<const NodeId> x) {
                     return project(g, g.cosine_matrix(x[0], x[1]), w);
                   };
                   return std::pair{in, b};
                 }});
  out.push_back(unary("dropout", [](Graph& g, NodeId x, std::uint64_t salt) { return g.dropout(x, 0.7, salt); }));
  out.push_back(unary("log", [](Graph& g, NodeId x, std::uint64_t) { return g.log(x); }, 0.5, 2.0));
  out.push_back(unary("exp", [](Graph& g, NodeId x, std::uint64_t) { return g.exp(x); }));
  out.push_back(unary("negate", [](Graph& g, NodeId x, std::uint64_t) { return g.negate(x); }));
  out.push_back({"sum", [](Rng& rng) {
                   std::vector<Tensor> in{random_matrix(rng, dim(rng), dim(rng))};
                   GraphBuilder b = [](Graph& g, std::span<const NodeId> x) { return g.sum(x[0]); };
                   return std::pair{in, b};
                 }});
  out.push_back({"index_select", [](Rng& rng) {
                   const std::size_t r = dim(rng), c = dim(rng), n = dim(rng);
                   std::vector<std::size_t> rows(n);
                   for (auto& i : rows) i = rng.index(r);
                   std::vector<Tensor> in{random_matrix(rng, r, c)};
                   const Tensor w = random_matrix(rng, n, c);
                   GraphBuilder b = [w, rows](Graph& g, std::span<const NodeId> x) {
                     return project(g, g.index_select(x[0], rows), w);
                   };
                   return std::pair{in, b};
                 }});
  out.push_back(unary("transpose", [](Graph& g, NodeId x, std::uint64_t) { return g.transpose(x); }));
  for (const bool rows : {true, false}) {
    out.push_back({rows ? "concat_rows" : "concat_cols", [rows](Rng& rng) {
                     const std::size_t shared = dim(rng), a = dim(rng), b2 = dim(rng);
                     std::vector<Tensor> in{rows ? random_matrix(rng, a, shared) : random_matrix(rng, shared, a),
                                            rows ? random_matrix(rng, b2, shared) : random_matrix(rng, shared, b2)};
                     const Tensor w = rows ? random_matrix(rng, a + b2, shared) : random_matrix(rng, shared, a + b2);
                     GraphBuilder b = [w, rows](Graph& g, std::span<const NodeId> x) {
                       const NodeId parts[] = {x[0], x[1]};
                       return project(g, rows ? g.concat_rows(parts) : g.concat_cols(parts), w);
                     };
                     return std::pair{in, b};
                   }});
  }
  out.push_back({"slice_cols", [](Rng& rng) {
                   const std::size_t r = dim(rng), c = dim(rng);
                   const std::size_t offset = rng.index(c);
                   const std::size_t count = 1 + rng.index(c - offset);
                   std::vector<Tensor> in{random_matrix(rng, r, c)};
                   const Tensor w = random_matrix(rng, r, count);
                   GraphBuilder b = [w, offset, count](Graph& g, std::span<const NodeId> x) {
                     return project(g, g.slice_cols(x[0], offset, count), w);
                   };
                   return std::pair{in, b};
                 }});
  return out;
}

}  // namespace

std::vector<std::string> op_suite_names() {
  std::vector<std::string> names;
  for (const Case& c : cases()) names.emplace_back(c.name);
  return names;
}

std::vector<OpCheck> run_op_suite(std::size_t trials, std::uint64_t seed, double eps) {
  std::vector<OpCheck> results;
  const auto all = cases();
  for (std::size_t ci = 0; ci < all.size(); ++ci) {
    Rng rng(mix_seed(seed, ci));
    OpCheck check{all[ci].name, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
      auto [inputs, build] = all[ci].make(rng);
      check.worst_error = std::max(check.worst_error, grad_check(build, inputs, eps).max_relative_error);
    }
    results.push_back(std::move(check));
  }
  return results;
}

}  // namespace synthcse::autodiff
