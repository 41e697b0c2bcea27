#include "synthcse/autodiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "synthcse/common/rng.hpp"

namespace synthcse::autodiff {

namespace {

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

Dims dims_of(const Tensor& t) { return {t.rows(), t.cols()}; }

[[noreturn]] void mismatch(OpKind op, const Tensor& a, const Tensor& b, std::string_view detail = {}) {
  std::string msg = std::string(op_name(op)) + ": incompatible shapes " + shape_string(a.shape) +
                    " and " + shape_string(b.shape);
  if (!detail.empty()) {
    msg += " (";
    msg += detail;
    msg += ")";
  }
  throw ShapeError(msg);
}

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * n + j] += acc;
    }
  }
}

// C[m x n] += A[k x m]^T * B[k x n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// True when b is a single row broadcast over the rows of a; false when the
// shapes match exactly.
bool row_broadcast(OpKind op, const Tensor& a, const Tensor& b) {
  if (a.shape == b.shape) return false;
  const Dims da = dims_of(a);
  const Dims db = dims_of(b);
  if (db.rows == 1 && db.cols == da.cols) return true;
  mismatch(op, a, b, "only a single row may broadcast over the leading dimension");
}

Tensor like(const Tensor& t) { return Tensor(t.shape, std::vector<double>(t.size(), 0.0)); }

}  // namespace

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::kInput: return "input";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kLogSoftmaxRows: return "log_softmax_rows";
    case OpKind::kLayerNorm: return "layer_norm";
    case OpKind::kTanh: return "tanh";
    case OpKind::kEmbedding: return "embedding";
    case OpKind::kMeanRows: return "mean_rows";
    case OpKind::kMeanOfTwo: return "mean_of_two";
    case OpKind::kL2NormalizeRows: return "l2_normalize_rows";
    case OpKind::kCosineMatrix: return "cosine_matrix";
    case OpKind::kDropout: return "dropout";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
    case OpKind::kNegate: return "negate";
    case OpKind::kSum: return "sum";
    case OpKind::kIndexSelect: return "index_select";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSliceCols: return "slice_cols";
  }
  return "unknown";
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw std::out_of_range("graph: node " + std::to_string(id.index) + " does not exist");
  }
  return nodes_[id.index];
}

Graph::Node& Graph::node(NodeId id) {
  if (id.index >= nodes_.size()) {
    throw std::out_of_range("graph: node " + std::to_string(id.index) + " does not exist");
  }
  return nodes_[id.index];
}

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

NodeId Graph::input(Tensor value) {
  value.validate();
  value.grad.reset();
  Node n;
  n.op = OpKind::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

const std::vector<double>& Graph::grad(NodeId id) const {
  static const std::vector<double> kEmpty;
  const Node& n = node(id);
  return n.value.grad ? *n.value.grad : kEmpty;
}

NodeId Graph::forward(OpKind op, std::span<const NodeId> inputs, const OpAttrs& attrs) {
  auto arity = [&](std::size_t expected) {
    if (inputs.size() != expected) {
      throw std::invalid_argument(std::string(op_name(op)) + ": expected " + std::to_string(expected) +
                                  " inputs, got " + std::to_string(inputs.size()));
    }
  };
  for (NodeId in : inputs) (void)node(in);

  Node n;
  n.op = op;
  n.inputs.assign(inputs.begin(), inputs.end());
  n.attrs = attrs;

  switch (op) {
    case OpKind::kInput:
      throw std::invalid_argument("forward: use Graph::input for leaf tensors");

    case OpKind::kMatmul: {
      arity(2);
      const Tensor& a = value(inputs[0]);
      const Tensor& b = value(inputs[1]);
      const Dims da = dims_of(a);
      const Dims db = dims_of(b);
      if (da.cols != db.rows) mismatch(op, a, b, "inner dimensions differ");
      n.value = Tensor::zeros({da.rows, db.cols});
      gemm_nn(da.rows, da.cols, db.cols, a.data.data(), b.data.data(), n.value.data.data());
      break;
    }

    case OpKind::kAdd:
    case OpKind::kMul: {
      arity(2);
      const Tensor& a = value(inputs[0]);
      const Tensor& b = value(inputs[1]);
      const bool bc = row_broadcast(op, a, b);
      n.value = like(a);
      const std::size_t cols = a.cols();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double bv = bc ? b.data[i % cols] : b.data[i];
        n.value.data[i] = op == OpKind::kAdd ? a.data[i] + bv : a.data[i] * bv;
      }
      break;
    }

    case OpKind::kScale: {
      arity(1);
      const Tensor& a = value(inputs[0]);
      n.value = like(a);
      for (std::size_t i = 0; i < a.size(); ++i) n.value.data[i] = a.data[i] * attrs.scalar;
      break;
    }

    case OpKind::kSoftmaxRows:
    case OpKind::kLogSoftmaxRows: {
      arity(1);
      const Tensor& a = value(inputs[0]);
      const Dims d = dims_of(a);
      n.value = like(a);
      for (std::size_t r = 0; r < d.rows; ++r) {
        const double* x = a.data.data() + r * d.cols;
        double* y = n.value.data.data() + r * d.cols;
        const double mx = *std::max_element(x, x + d.cols);
        double z = 0.0;
        for (std::size_t c = 0; c < d.cols; ++c) z += std::exp(x[c] - mx);
        if (op == OpKind::kSoftmaxRows) {
          for (std::size_t c = 0; c < d.cols; ++c) y[c] = std::exp(x[c] - mx) / z;
        } else {
          const double lse = mx + std::log(z);
          for (std::size_t c = 0; c < d.cols; ++c) y[c] = x[c] - lse;
        }
      }
      break;
    }

    case OpKind::kLayerNorm: {
      arity(3);
      const Tensor& x = value(inputs[0]);
      const Tensor& g = value(inputs[1]);
      const Tensor& b = value(inputs[2]);
      const Dims d = dims_of(x);
      if (g.size() != d.cols || dims_of(g).rows != 1) mismatch(op, x, g, "gain must be one row of width cols");
      if (b.size() != d.cols || dims_of(b).rows != 1) mismatch(op, x, b, "bias must be one row of width cols");
      n.value = like(x);
      // aux: normalized values (rows*cols) followed by inverse std per row.
      n.aux.assign(d.rows * d.cols + d.rows, 0.0);
      for (std::size_t r = 0; r < d.rows; ++r) {
        const double* xr = x.data.data() + r * d.cols;
        double mean = 0.0;
        for (std::size_t c = 0; c < d.cols; ++c) mean += xr[c];
        mean /= static_cast<double>(d.cols);
        double var = 0.0;
        for (std::size_t c = 0; c < d.cols; ++c) var += (xr[c] - mean) * (xr[c] - mean);
        var /= static_cast<double>(d.cols);
        const double rstd = 1.0 / std::sqrt(var + attrs.eps);
        n.aux[d.rows * d.cols + r] = rstd;
        for (std::size_t c = 0; c < d.cols; ++c) {
          const double xhat = (xr[c] - mean) * rstd;
          n.aux[r * d.cols + c] = xhat;
          n.value.data[r * d.cols + c] = xhat * g.data[c] + b.data[c];
        }
      }
      break;
    }

    case OpKind::kTanh:
    case OpKind::kLog:
    case OpKind::kExp:
    case OpKind::kNegate: {
      arity(1);
      const Tensor& a = value(inputs[0]);
      n.value = like(a);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = a.data[i];
        switch (op) {
          case OpKind::kTanh: n.value.data[i] = std::tanh(v); break;
          case OpKind::kLog: n.value.data[i] = std::log(v); break;
          case OpKind::kExp: n.value.data[i] = std::exp(v); break;
          default: n.value.data[i] = -v; break;
        }
      }
      break;
    }

    case OpKind::kEmbedding:
    case OpKind::kIndexSelect: {
      arity(1);
      const Tensor& table = value(inputs[0]);
      const Dims d = dims_of(table);
      if (attrs.indices.empty()) {
        throw ShapeError(std::string(op_name(op)) + ": empty index list for " + shape_string(table.shape));
      }
      n.value = Tensor::zeros({attrs.indices.size(), d.cols});
      for (std::size_t i = 0; i < attrs.indices.size(); ++i) {
        const std::size_t row = attrs.indices[i];
        if (row >= d.rows) {
          throw ShapeError(std::string(op_name(op)) + ": index " + std::to_string(row) +
                           " out of range for " + shape_string(table.shape));
        }
        std::copy_n(table.data.data() + row * d.cols, d.cols, n.value.data.data() + i * d.cols);
      }
      break;
    }

    case OpKind::kMeanRows: {
      arity(1);
      const Tensor& a = value(inputs[0]);
      const Dims d = dims_of(a);
      n.value = Tensor::zeros({1, d.cols});
      for (std::size_t r = 0; r < d.rows; ++r) {
        for (std::size_t c = 0; c < d.cols; ++c) n.value.data[c] += a.data[r * d.cols + c];
      }
      for (double& v : n.value.data) v /= static_cast<double>(d.rows);
      break;
    }

    case OpKind::kMeanOfTwo: {
      arity(2);
      const Tensor& a = value(inputs[0]);
      const Tensor& b = value(inputs[1]);
      if (a.shape != b.shape) mismatch(op, a, b);
      n.value = like(a);
      for (std::size_t i = 0; i < a.size(); ++i) n.value.data[i] = 0.5 * (a.data[i] + b.data[i]);
      break;
    }

    case OpKind::kL2NormalizeRows: {
      arity(1);
      const Tensor& a = value(inputs[0]);
      const Dims d = dims_of(a);
      n.value = like(a);
      n.aux.assign(d.rows, 0.0);
      for (std::size_t r = 0; r < d.rows; ++r) {
        double ss = 0.0;
        for (std::size_t c = 0; c < d.cols; ++c) ss += a.data[r * d.cols + c] * a.data[r * d.cols + c];
        if (ss == 0.0) {
          throw std::domain_error("l2_normalize_rows: row " + std::to_string(r) + " of " +
                                  shape_string(a.shape) + " has zero norm");
        }
        const double inv = 1.0 / std::sqrt(ss);
        n.aux[r] = inv;
        for (std::size_t c = 0; c < d.cols; ++c) n.value.data[r * d.cols + c] = a.data[r * d.cols + c] * inv;
      }
      break;
    }

    case OpKind::kCosineMatrix: {
      arity(2);
      const Tensor& a = value(inputs[0]);
      const Tensor& b = value(inputs[1]);
      const Dims da = dims_of(a);
      const Dims db = dims_of(b);
      if (da.cols != db.cols) mismatch(op, a, b, "row widths differ");
      // aux: normalized A rows, normalized B rows, then inverse norms of A and B.
      const std::size_t na = da.rows * da.cols;
      const std::size_t nb = db.rows * db.cols;
      n.aux.assign(na + nb + da.rows + db.rows, 0.0);
      auto normalize = [&](const Tensor& t, Dims d, double* out, double* inv_norms, char which) {
        for (std::size_t r = 0; r < d.rows; ++r) {
          double ss = 0.0;
          for (std::size_t c = 0; c < d.cols; ++c) ss += t.data[r * d.cols + c] * t.data[r * d.cols + c];
          if (ss == 0.0) {
            throw std::domain_error(std::string("cosine_matrix: row ") + std::to_string(r) + " of operand " +
                                    which + " " + shape_string(t.shape) + " has zero norm");
          }
          inv_norms[r] = 1.0 / std::sqrt(ss);
          for (std::size_t c = 0; c < d.cols; ++c) out[r * d.cols + c] = t.data[r * d.cols + c] * inv_norms[r];
        }
      };
      normalize(a, da, n.aux.data(), n.aux.data() + na + nb, 'a');
      normalize(b, db, n.aux.data() + na, n.aux.data() + na + nb + da.rows, 'b');
      n.value = Tensor::zeros({da.rows, db.rows});
      gemm_nt(da.rows, da.cols, db.rows, n.aux.data(), n.aux.data() + na, n.value.data.data());
      break;
    }

    case OpKind::kDropout: {
      arity(1);
      const Tensor& a = value(inputs[0]);
      if (!(attrs.keep_prob > 0.0 && attrs.keep_prob <= 1.0)) {
        throw std::invalid_argument("dropout: keep probability must lie in (0, 1], got " +
                                    std::to_string(attrs.keep_prob));
      }
      n.value = a;
      n.value.requires_grad = false;
      n.value.grad.reset();
      if (attrs.keep_prob < 1.0) {
        Rng rng(attrs.seed);
        const double scale = 1.0 / attrs.keep_prob;
        n.aux.resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
          n.aux[i] = rng.uniform() < attrs.keep_prob ? scale : 0.0;
          n.value.data[i] = a.data[i] * n.aux[i];
        }
      }
      break;
    }

    case OpKind::kSum: {
      arity(1);
      const Tensor& a = value(inputs[0]);
      double s = 0.0;
      for (double v : a.data) s += v;
      n.value = Tensor::scalar(s);
      break;
    }

    case OpKind::kTranspose: {
      arity(1);
      const Tensor& a = value(inputs[0]);
      const Dims d = dims_of(a);
      n.value = Tensor::zeros({d.cols, d.rows});
      for (std::size_t r = 0; r < d.rows; ++r) {
        for (std::size_t c = 0; c < d.cols; ++c) n.value.data[c * d.rows + r] = a.data[r * d.cols + c];
      }
      break;
    }

    case OpKind::kConcatRows: {
      if (inputs.empty()) throw std::invalid_argument("concat_rows: no inputs");
      const Tensor& first = value(inputs[0]);
      const std::size_t cols = first.cols();
      std::size_t rows = 0;
      for (NodeId in : inputs) {
        const Tensor& t = value(in);
        if (t.cols() != cols) mismatch(op, first, t, "column counts differ");
        rows += t.rows();
      }
      n.value = Tensor::zeros({rows, cols});
      std::size_t offset = 0;
      for (NodeId in : inputs) {
        const Tensor& t = value(in);
        std::copy(t.data.begin(), t.data.end(), n.value.data.begin() + static_cast<std::ptrdiff_t>(offset));
        offset += t.size();
      }
      break;
    }

    case OpKind::kConcatCols: {
      if (inputs.empty()) throw std::invalid_argument("concat_cols: no inputs");
      const Tensor& first = value(inputs[0]);
      const std::size_t rows = first.rows();
      std::size_t cols = 0;
      for (NodeId in : inputs) {
        const Tensor& t = value(in);
        if (t.rows() != rows) mismatch(op, first, t, "row counts differ");
        cols += t.cols();
      }
      n.value = Tensor::zeros({rows, cols});
      std::size_t col0 = 0;
      for (NodeId in : inputs) {
        const Tensor& t = value(in);
        const std::size_t tc = t.cols();
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(t.data.data() + r * tc, tc, n.value.data.data() + r * cols + col0);
        }
        col0 += tc;
      }
      break;
    }

    case OpKind::kSliceCols: {
      arity(1);
      const Tensor& a = value(inputs[0]);
      const Dims d = dims_of(a);
      if (attrs.count == 0 || attrs.offset + attrs.count > d.cols) {
        throw ShapeError("slice_cols: columns [" + std::to_string(attrs.offset) + ", " +
                         std::to_string(attrs.offset + attrs.count) + ") out of range for " +
                         shape_string(a.shape));
      }
      n.value = Tensor::zeros({d.rows, attrs.count});
      for (std::size_t r = 0; r < d.rows; ++r) {
        std::copy_n(a.data.data() + r * d.cols + attrs.offset, attrs.count, n.value.data.data() + r * attrs.count);
      }
      break;
    }
  }

  bool rg = false;
  for (NodeId in : inputs) rg = rg || value(in).requires_grad;
  n.value.requires_grad = rg;
  return push(std::move(n));
}

void Graph::backward(NodeId loss) {
  const Tensor& lv = value(loss);
  if (lv.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + shape_string(lv.shape));
  }
  for (Node& n : nodes_) {
    if (n.value.requires_grad) {
      n.value.grad.emplace(n.value.size(), 0.0);
    } else {
      n.value.grad.reset();
    }
  }
  Node& root = node(loss);
  if (!root.value.requires_grad) return;
  (*root.value.grad)[0] = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (n.op == OpKind::kInput || !n.value.requires_grad) continue;
    propagate(n, *n.value.grad);
  }
}

void Graph::propagate(const Node& n, const std::vector<double>& gy) {
  auto target = [&](std::size_t k) -> std::vector<double>* {
    Node& in = nodes_[n.inputs[k].index];
    return in.value.grad ? &*in.value.grad : nullptr;
  };
  auto in_value = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k].index].value; };
  const Tensor& y = n.value;

  switch (n.op) {
    case OpKind::kInput:
      break;

    case OpKind::kMatmul: {
      const Tensor& a = in_value(0);
      const Tensor& b = in_value(1);
      const Dims da = dims_of(a);
      const Dims db = dims_of(b);
      if (auto* ga = target(0)) gemm_nt(da.rows, db.cols, da.cols, gy.data(), b.data.data(), ga->data());
      if (auto* gb = target(1)) gemm_tn(db.rows, da.rows, db.cols, a.data.data(), gy.data(), gb->data());
      break;
    }

    case OpKind::kAdd:
    case OpKind::kMul: {
      const Tensor& a = in_value(0);
      const Tensor& b = in_value(1);
      const bool bc = a.shape != b.shape;
      const std::size_t cols = a.cols();
      auto* ga = target(0);
      auto* gb = target(1);
      for (std::size_t i = 0; i < gy.size(); ++i) {
        const std::size_t bi = bc ? i % cols : i;
        if (n.op == OpKind::kAdd) {
          if (ga) (*ga)[i] += gy[i];
          if (gb) (*gb)[bi] += gy[i];
        } else {
          if (ga) (*ga)[i] += gy[i] * b.data[bi];
          if (gb) (*gb)[bi] += gy[i] * a.data[i];
        }
      }
      break;
    }

    case OpKind::kScale: {
      if (auto* ga = target(0)) {
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * n.attrs.scalar;
      }
      break;
    }

    case OpKind::kSoftmaxRows: {
      auto* ga = target(0);
      if (!ga) break;
      const Dims d = dims_of(y);
      for (std::size_t r = 0; r < d.rows; ++r) {
        const double* yr = y.data.data() + r * d.cols;
        const double* gr = gy.data() + r * d.cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < d.cols; ++c) dot += gr[c] * yr[c];
        for (std::size_t c = 0; c < d.cols; ++c) (*ga)[r * d.cols + c] += yr[c] * (gr[c] - dot);
      }
      break;
    }

    case OpKind::kLogSoftmaxRows: {
      auto* ga = target(0);
      if (!ga) break;
      const Dims d = dims_of(y);
      for (std::size_t r = 0; r < d.rows; ++r) {
        const double* yr = y.data.data() + r * d.cols;
        const double* gr = gy.data() + r * d.cols;
        double total = 0.0;
        for (std::size_t c = 0; c < d.cols; ++c) total += gr[c];
        for (std::size_t c = 0; c < d.cols; ++c) (*ga)[r * d.cols + c] += gr[c] - std::exp(yr[c]) * total;
      }
      break;
    }

    case OpKind::kLayerNorm: {
      const Tensor& g = in_value(1);
      const Dims d = dims_of(y);
      const double* xhat = n.aux.data();
      const double* rstd = n.aux.data() + d.rows * d.cols;
      auto* gx = target(0);
      auto* gg = target(1);
      auto* gb = target(2);
      const double inv_cols = 1.0 / static_cast<double>(d.cols);
      for (std::size_t r = 0; r < d.rows; ++r) {
        const double* gr = gy.data() + r * d.cols;
        const double* hr = xhat + r * d.cols;
        double mean_dh = 0.0;
        double mean_dh_h = 0.0;
        for (std::size_t c = 0; c < d.cols; ++c) {
          const double dh = gr[c] * g.data[c];
          mean_dh += dh;
          mean_dh_h += dh * hr[c];
          if (gg) (*gg)[c] += gr[c] * hr[c];
          if (gb) (*gb)[c] += gr[c];
        }
        mean_dh *= inv_cols;
        mean_dh_h *= inv_cols;
        if (gx) {
          for (std::size_t c = 0; c < d.cols; ++c) {
            const double dh = gr[c] * g.data[c];
            (*gx)[r * d.cols + c] += rstd[r] * (dh - mean_dh - hr[c] * mean_dh_h);
          }
        }
      }
      break;
    }

    case OpKind::kTanh: {
      if (auto* ga = target(0)) {
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * (1.0 - y.data[i] * y.data[i]);
      }
      break;
    }

    case OpKind::kLog: {
      if (auto* ga = target(0)) {
        const Tensor& a = in_value(0);
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] / a.data[i];
      }
      break;
    }

    case OpKind::kExp: {
      if (auto* ga = target(0)) {
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * y.data[i];
      }
      break;
    }

    case OpKind::kNegate: {
      if (auto* ga = target(0)) {
        for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] -= gy[i];
      }
      break;
    }

    case OpKind::kEmbedding:
    case OpKind::kIndexSelect: {
      if (auto* ga = target(0)) {
        const std::size_t cols = y.cols();
        for (std::size_t i = 0; i < n.attrs.indices.size(); ++i) {
          double* dst = ga->data() + n.attrs.indices[i] * cols;
          const double* src = gy.data() + i * cols;
          for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
        }
      }
      break;
    }

    case OpKind::kMeanRows: {
      if (auto* ga = target(0)) {
        const Dims d = dims_of(in_value(0));
        const double inv = 1.0 / static_cast<double>(d.rows);
        for (std::size_t r = 0; r < d.rows; ++r) {
          for (std::size_t c = 0; c < d.cols; ++c) (*ga)[r * d.cols + c] += gy[c] * inv;
        }
      }
      break;
    }

    case OpKind::kMeanOfTwo: {
      for (std::size_t k = 0; k < 2; ++k) {
        if (auto* ga = target(k)) {
          for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += 0.5 * gy[i];
        }
      }
      break;
    }

    case OpKind::kL2NormalizeRows: {
      auto* ga = target(0);
      if (!ga) break;
      const Dims d = dims_of(y);
      for (std::size_t r = 0; r < d.rows; ++r) {
        const double* yr = y.data.data() + r * d.cols;
        const double* gr = gy.data() + r * d.cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < d.cols; ++c) dot += yr[c] * gr[c];
        for (std::size_t c = 0; c < d.cols; ++c) (*ga)[r * d.cols + c] += (gr[c] - yr[c] * dot) * n.aux[r];
      }
      break;
    }

    case OpKind::kCosineMatrix: {
      const Dims da = dims_of(in_value(0));
      const Dims db = dims_of(in_value(1));
      const std::size_t na = da.rows * da.cols;
      const std::size_t nb = db.rows * db.cols;
      const double* ahat = n.aux.data();
      const double* bhat = n.aux.data() + na;
      const double* inv_a = n.aux.data() + na + nb;
      const double* inv_b = inv_a + da.rows;
      // Gradient w.r.t. the normalized rows, then through the normalization.
      auto through_norm = [](const double* hat, const double* inv, const std::vector<double>& gh, Dims d,
                             std::vector<double>& out) {
        for (std::size_t r = 0; r < d.rows; ++r) {
          const double* hr = hat + r * d.cols;
          const double* gr = gh.data() + r * d.cols;
          double dot = 0.0;
          for (std::size_t c = 0; c < d.cols; ++c) dot += hr[c] * gr[c];
          for (std::size_t c = 0; c < d.cols; ++c) out[r * d.cols + c] += (gr[c] - hr[c] * dot) * inv[r];
        }
      };
      if (auto* ga = target(0)) {
        std::vector<double> gh(na, 0.0);
        gemm_nn(da.rows, db.rows, da.cols, gy.data(), bhat, gh.data());
        through_norm(ahat, inv_a, gh, da, *ga);
      }
      if (auto* gb = target(1)) {
        std::vector<double> gh(nb, 0.0);
        gemm_tn(db.rows, da.rows, db.cols, gy.data(), ahat, gh.data());
        through_norm(bhat, inv_b, gh, db, *gb);
      }
      break;
    }

    case OpKind::kDropout: {
      if (auto* ga = target(0)) {
        if (n.aux.empty()) {
          for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
        } else {
          for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * n.aux[i];
        }
      }
      break;
    }

    case OpKind::kSum: {
      if (auto* ga = target(0)) {
        for (double& g : *ga) g += gy[0];
      }
      break;
    }

    case OpKind::kTranspose: {
      if (auto* ga = target(0)) {
        const Dims d = dims_of(in_value(0));
        for (std::size_t r = 0; r < d.rows; ++r) {
          for (std::size_t c = 0; c < d.cols; ++c) (*ga)[r * d.cols + c] += gy[c * d.rows + r];
        }
      }
      break;
    }

    case OpKind::kConcatRows: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const std::size_t sz = in_value(k).size();
        if (auto* ga = target(k)) {
          for (std::size_t i = 0; i < sz; ++i) (*ga)[i] += gy[offset + i];
        }
        offset += sz;
      }
      break;
    }

    case OpKind::kConcatCols: {
      const std::size_t rows = y.rows();
      const std::size_t cols = y.cols();
      std::size_t col0 = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const std::size_t tc = in_value(k).cols();
        if (auto* ga = target(k)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < tc; ++c) (*ga)[r * tc + c] += gy[r * cols + col0 + c];
          }
        }
        col0 += tc;
      }
      break;
    }

    case OpKind::kSliceCols: {
      if (auto* ga = target(0)) {
        const Dims d = dims_of(in_value(0));
        for (std::size_t r = 0; r < d.rows; ++r) {
          for (std::size_t c = 0; c < n.attrs.count; ++c) {
            (*ga)[r * d.cols + n.attrs.offset + c] += gy[r * n.attrs.count + c];
          }
        }
      }
      break;
    }
  }
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const NodeId in[] = {a, b};
  return forward(OpKind::kMatmul, in);
}

NodeId Graph::add(NodeId a, NodeId b) {
  const NodeId in[] = {a, b};
  return forward(OpKind::kAdd, in);
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const NodeId in[] = {a, b};
  return forward(OpKind::kMul, in);
}

NodeId Graph::scale(NodeId a, double factor) {
  OpAttrs attrs;
  attrs.scalar = factor;
  const NodeId in[] = {a};
  return forward(OpKind::kScale, in, attrs);
}

NodeId Graph::softmax_rows(NodeId a) {
  const NodeId in[] = {a};
  return forward(OpKind::kSoftmaxRows, in);
}

NodeId Graph::log_softmax_rows(NodeId a) {
  const NodeId in[] = {a};
  return forward(OpKind::kLogSoftmaxRows, in);
}

NodeId Graph::layer_norm(NodeId x, NodeId gain, NodeId bias, double eps) {
  OpAttrs attrs;
  attrs.eps = eps;
  const NodeId in[] = {x, gain, bias};
  return forward(OpKind::kLayerNorm, in, attrs);
}

NodeId Graph::tanh(NodeId a) {
  const NodeId in[] = {a};
  return forward(OpKind::kTanh, in);
}

NodeId Graph::embedding(NodeId table, std::vector<std::size_t> ids) {
  OpAttrs attrs;
  attrs.indices = std::move(ids);
  const NodeId in[] = {table};
  return forward(OpKind::kEmbedding, in, attrs);
}

NodeId Graph::mean_rows(NodeId a) {
  const NodeId in[] = {a};
  return forward(OpKind::kMeanRows, in);
}

NodeId Graph::mean_of_two(NodeId a, NodeId b) {
  const NodeId in[] = {a, b};
  return forward(OpKind::kMeanOfTwo, in);
}

NodeId Graph::l2_normalize_rows(NodeId a) {
  const NodeId in[] = {a};
  return forward(OpKind::kL2NormalizeRows, in);
}

NodeId Graph::cosine_matrix(NodeId a, NodeId b) {
  const NodeId in[] = {a, b};
  return forward(OpKind::kCosineMatrix, in);
}

NodeId Graph::dropout(NodeId a, double keep_prob, std::uint64_t seed) {
  OpAttrs attrs;
  attrs.keep_prob = keep_prob;
  attrs.seed = seed;
  const NodeId in[] = {a};
  return forward(OpKind::kDropout, in, attrs);
}

NodeId Graph::log(NodeId a) {
  const NodeId in[] = {a};
  return forward(OpKind::kLog, in);
}

NodeId Graph::exp(NodeId a) {
  const NodeId in[] = {a};
  return forward(OpKind::kExp, in);
}

NodeId Graph::negate(NodeId a) {
  const NodeId in[] = {a};
  return forward(OpKind::kNegate, in);
}

NodeId Graph::sum(NodeId a) {
  const NodeId in[] = {a};
  return forward(OpKind::kSum, in);
}

NodeId Graph::index_select(NodeId a, std::vector<std::size_t> rows) {
  OpAttrs attrs;
  attrs.indices = std::move(rows);
  const NodeId in[] = {a};
  return forward(OpKind::kIndexSelect, in, attrs);
}

NodeId Graph::transpose(NodeId a) {
  const NodeId in[] = {a};
  return forward(OpKind::kTranspose, in);
}

NodeId Graph::concat_rows(std::span<const NodeId> parts) { return forward(OpKind::kConcatRows, parts); }

NodeId Graph::concat_cols(std::span<const NodeId> parts) { return forward(OpKind::kConcatCols, parts); }

NodeId Graph::slice_cols(NodeId a, std::size_t offset, std::size_t count) {
  OpAttrs attrs;
  attrs.offset = offset;
  attrs.count = count;
  const NodeId in[] = {a};
  return forward(OpKind::kSliceCols, in, attrs);
}

}  // namespace synthcse::autodiff
