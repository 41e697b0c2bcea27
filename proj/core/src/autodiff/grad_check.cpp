#include "synthcse/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace synthcse::autodiff {

NonFiniteError::NonFiniteError(std::size_t in, std::size_t coord, const std::string& what)
    : std::runtime_error(what), input(in), coordinate(coord) {}

namespace {

double evaluate(const GraphBuilder& build, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<NodeId> ids;
  ids.reserve(inputs.size());
  for (const Tensor& t : inputs) ids.push_back(g.input(t));
  const NodeId loss = build(g, ids);
  const Tensor& v = g.value(loss);
  if (v.size() != 1) throw ShapeError("grad_check: builder must return a scalar, got " + shape_string(v.shape));
  return v.data[0];
}

}  // namespace

GradCheckResult grad_check(const GraphBuilder& build, const std::vector<Tensor>& inputs, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");

  Graph g;
  std::vector<NodeId> ids;
  ids.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    Tensor leaf = t;
    leaf.requires_grad = true;
    ids.push_back(g.input(std::move(leaf)));
  }
  const NodeId loss = build(g, ids);
  g.backward(loss);

  GradCheckResult result;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::vector<double>& analytic = g.grad(ids[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double original = probe[k].data[i];
      probe[k].data[i] = original + eps;
      const double up = evaluate(build, probe);
      probe[k].data[i] = original - eps;
      const double down = evaluate(build, probe);
      probe[k].data[i] = original;

      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        throw NonFiniteError(k, i,
                             "grad_check: non-finite value at input " + std::to_string(k) + " coordinate " +
                                 std::to_string(i) + " (analytic " + std::to_string(a) + ", numeric " +
                                 std::to_string(numeric) + ")");
      }
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_input = k;
        result.worst_coordinate = i;
      }
    }
  }
  return result;
}

}  // namespace synthcse::autodiff
