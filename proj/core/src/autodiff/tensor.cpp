#include "synthcse/autodiff/tensor.hpp"

#include <functional>
#include <numeric>

namespace synthcse::autodiff {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape s, std::vector<double> d, bool rg)
    : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
  validate();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
  return Tensor({rows, cols}, std::move(data), requires_grad);
}

std::size_t Tensor::rows() const {
  if (shape.size() <= 1) return 1;
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (shape.empty()) return 1;
  return shape.back();
}

void Tensor::validate() const {
  if (shape.size() > 2) {
    throw ShapeError("tensor: rank " + std::to_string(shape.size()) + " is not supported " +
                     shape_string(shape));
  }
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor: zero-sized dimension in " + shape_string(shape));
  }
  if (shape_size(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_string(shape) + " holds " +
                     std::to_string(shape_size(shape)) + " values but data has " +
                     std::to_string(data.size()));
  }
  if (grad && grad->size() != data.size()) {
    throw ShapeError("tensor: grad length " + std::to_string(grad->size()) +
                     " does not match data length " + std::to_string(data.size()));
  }
}

}  // namespace synthcse::autodiff
