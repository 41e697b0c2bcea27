#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace synthcse::autodiff {

using Shape = std::vector<std::size_t>;

// Raised for incompatible operand shapes; the message names the op and the
// offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_string(const Shape& shape);

// Dense row-major float64 array. Ranks 0-2 are supported by the ops; a rank-1
// tensor of length n behaves as a [1 x n] row.
struct Tensor {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::optional<std::vector<double>> grad;

  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false);

  std::size_t size() const { return data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  // Checks product(shape) == size and grad length.
  void validate() const;
};

std::size_t shape_size(const Shape& shape);

}  // namespace synthcse::autodiff
