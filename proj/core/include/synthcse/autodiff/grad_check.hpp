#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "synthcse/autodiff/graph.hpp"

namespace synthcse::autodiff {

// Builds a scalar loss from leaf nodes holding the given inputs. Must be
// deterministic: it is re-run for every perturbed coordinate.
using GraphBuilder = std::function<NodeId(Graph&, std::span<const NodeId>)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_coordinate = 0;
};

class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::size_t input, std::size_t coordinate, const std::string& what);
  std::size_t input;
  std::size_t coordinate;
};

// Compares reverse-mode gradients with central differences (+/- eps) at every
// input coordinate. Relative error is |a - n| / max(1e-8, |a| + |n|).
GradCheckResult grad_check(const GraphBuilder& build, const std::vector<Tensor>& inputs,
                           double eps = 1e-5);

}  // namespace synthcse::autodiff
