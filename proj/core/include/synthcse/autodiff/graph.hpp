#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "synthcse/autodiff/tensor.hpp"

namespace synthcse::autodiff {

struct NodeId {
  std::size_t index = 0;
  auto operator<=>(const NodeId&) const = default;
};

enum class OpKind {
  kInput,
  kMatmul,
  kAdd,
  kMul,
  kScale,
  kSoftmaxRows,
  kLogSoftmaxRows,
  kLayerNorm,
  kTanh,
  kEmbedding,
  kMeanRows,
  kMeanOfTwo,
  kL2NormalizeRows,
  kCosineMatrix,
  kDropout,
  kLog,
  kExp,
  kNegate,
  kSum,
  kIndexSelect,
  kTranspose,
  kConcatRows,
  kConcatCols,
  kSliceCols,
};

std::string_view op_name(OpKind op);

// Per-op parameters; each op reads only the fields it documents.
struct OpAttrs {
  double scalar = 1.0;                // kScale factor
  double eps = 1e-5;                  // kLayerNorm variance epsilon
  double keep_prob = 1.0;             // kDropout
  std::uint64_t seed = 0;             // kDropout mask seed
  std::vector<std::size_t> indices;   // kEmbedding ids, kIndexSelect rows
  std::size_t offset = 0;             // kSliceCols
  std::size_t count = 0;              // kSliceCols
};

// Eagerly evaluated computation graph. Nodes are appended in construction
// order, which is also a valid topological order: an op may only reference
// nodes that already exist.
//
// backward() zeroes every gradient before accumulating, so calling it twice
// yields the same gradients rather than their sum.
class Graph {
 public:
  NodeId input(Tensor value);
  NodeId forward(OpKind op, std::span<const NodeId> inputs, const OpAttrs& attrs = {});

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId softmax_rows(NodeId a);
  NodeId log_softmax_rows(NodeId a);
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias, double eps = 1e-5);
  NodeId tanh(NodeId a);
  NodeId embedding(NodeId table, std::vector<std::size_t> ids);
  NodeId mean_rows(NodeId a);
  NodeId mean_of_two(NodeId a, NodeId b);
  NodeId l2_normalize_rows(NodeId a);
  NodeId cosine_matrix(NodeId a, NodeId b);
  NodeId dropout(NodeId a, double keep_prob, std::uint64_t seed);
  NodeId log(NodeId a);
  NodeId exp(NodeId a);
  NodeId negate(NodeId a);
  NodeId sum(NodeId a);
  NodeId index_select(NodeId a, std::vector<std::size_t> rows);
  NodeId transpose(NodeId a);
  NodeId concat_rows(std::span<const NodeId> parts);
  NodeId concat_cols(std::span<const NodeId> parts);
  NodeId slice_cols(NodeId a, std::size_t offset, std::size_t count);

  const Tensor& value(NodeId id) const { return node(id).value; }
  // Gradient of the last backward() loss w.r.t. this node; empty if the node
  // does not require grad.
  const std::vector<double>& grad(NodeId id) const;
  OpKind op(NodeId id) const { return node(id).op; }
  std::span<const NodeId> inputs(NodeId id) const { return node(id).inputs; }

  void backward(NodeId loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind op = OpKind::kInput;
    std::vector<NodeId> inputs;
    OpAttrs attrs;
    Tensor value;
    std::vector<double> aux;  // op-specific cache (mask, inverse norms, ...)
  };

  const Node& node(NodeId id) const;
  Node& node(NodeId id);
  NodeId push(Node n);
  void propagate(const Node& n, const std::vector<double>& out_grad);

  std::vector<Node> nodes_;
};

}  // namespace synthcse::autodiff
