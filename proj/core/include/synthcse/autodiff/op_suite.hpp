#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace synthcse::autodiff {

struct OpCheck {
  std::string op;
  std::size_t trials = 0;
  double worst_error = 0.0;
};

// Names of the ops covered by run_op_suite, in run order.
std::vector<std::string> op_suite_names();

// Finite-difference check of every differentiable op on `trials` random
// inputs with dimensions in [1, 8]. Each op output is reduced to a scalar
// through a fixed random projection so every output coordinate contributes.
std::vector<OpCheck> run_op_suite(std::size_t trials, std::uint64_t seed, double eps = 1e-5);

}  // namespace synthcse::autodiff
