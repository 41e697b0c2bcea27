#include "synthcse/contrastive/loss.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "synthcse/autodiff/grad_check.hpp"
#include "synthcse/common/rng.hpp"

namespace synthcse::contrastive {

namespace {

using autodiff::Tensor;

void require_temperature(double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("contrastive loss: temperature must be positive");
}

void require_same_shape(const Graph& g, NodeId a, NodeId b, const char* what) {
  if (g.value(a).shape != g.value(b).shape) {
    throw autodiff::ShapeError(std::string("contrastive loss: ") + what + " shape " +
                               autodiff::shape_string(g.value(b).shape) + " differs from anchors " +
                               autodiff::shape_string(g.value(a).shape));
  }
}

// -mean_i log_softmax(logits)[i, i]
NodeId diagonal_nll(Graph& g, NodeId logits, std::size_t batch) {
  const std::size_t width = g.value(logits).cols();
  Tensor mask = Tensor::zeros({batch, width});
  for (std::size_t i = 0; i < batch; ++i) mask.at(i, i) = 1.0;
  const NodeId picked = g.mul(g.log_softmax_rows(logits), g.input(std::move(mask)));
  return g.scale(g.sum(picked), -1.0 / static_cast<double>(batch));
}

}  // namespace

NodeId supervised_loss(Graph& g, NodeId anchors, NodeId positives, NodeId negatives, double temperature) {
  require_temperature(temperature);
  require_same_shape(g, anchors, positives, "positive");
  require_same_shape(g, anchors, negatives, "negative");
  const std::size_t m = g.value(anchors).rows();
  const NodeId sims[] = {g.cosine_matrix(anchors, positives), g.cosine_matrix(anchors, negatives)};
  const NodeId logits = g.scale(g.concat_cols(sims), 1.0 / temperature);
  return diagonal_nll(g, logits, m);
}

NodeId unsupervised_loss(Graph& g, NodeId anchors, NodeId positives, double temperature) {
  require_temperature(temperature);
  require_same_shape(g, anchors, positives, "positive");
  const std::size_t m = g.value(anchors).rows();
  const NodeId logits = g.scale(g.cosine_matrix(anchors, positives), 1.0 / temperature);
  return diagonal_nll(g, logits, m);
}

NodeId unsupervised_loss(Graph& g, encoder::EncoderGraph& model, std::span<const encoder::TokenizedText> sentences,
                         encoder::Pooling pooling, double temperature, std::uint64_t seed) {
  if (sentences.size() < 2) throw std::invalid_argument("unsupervised loss: batch needs at least two sentences");
  if (model.config().dropout_keep >= 1.0) {
    throw std::invalid_argument("unsupervised loss: dropout_keep is 1.0, so both views would be identical");
  }
  const NodeId first = model.encode(sentences, pooling, mix_seed(seed, 1));
  const NodeId second = model.encode(sentences, pooling, mix_seed(seed, 2));
  return unsupervised_loss(g, first, second, temperature);
}

double supervised_loss_grad_error(std::size_t trials, std::uint64_t seed, double temperature, std::size_t m,
                                  std::size_t d, double eps) {
  Rng rng(seed);
  double worst = 0.0;
  const auto build = [temperature](Graph& g, std::span<const NodeId> x) {
    return supervised_loss(g, x[0], x[1], x[2], temperature);
  };
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<autodiff::Tensor> inputs;
    for (int k = 0; k < 3; ++k) {
      std::vector<double> v(m * d);
      for (double& x : v) x = rng.normal();
      inputs.push_back(autodiff::Tensor::matrix(m, d, std::move(v)));
    }
    worst = std::max(worst, autodiff::grad_check(build, inputs, eps).max_relative_error);
  }
  return worst;
}

}  // namespace synthcse::contrastive
