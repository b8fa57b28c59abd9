#include "qnn4eo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "qnn4eo/error.hpp"

namespace qnn4eo::nn {

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    fail(ErrorCode::ShapeMismatch, "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                                       shape_to_string(shape_));
  }
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) fail(ErrorCode::ShapeMismatch, "index rank does not match tensor rank");
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) fail(ErrorCode::OutOfRange, "tensor index out of range");
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double& Tensor::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
double Tensor::at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  if (shape_numel(shape) != data_.size()) {
    fail(ErrorCode::ShapeMismatch, "cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  shape_ = std::move(shape);
  return std::move(*this);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void expect_shape(const Tensor& t, const Shape& expected, const char* context) {
  if (t.shape() != expected) {
    fail(ErrorCode::ShapeMismatch, std::string(context) + ": expected shape " + shape_to_string(expected) + ", got " +
                                       shape_to_string(t.shape()));
  }
}

void expect_rank(const Tensor& t, std::size_t rank, const char* context) {
  if (t.rank() != rank) {
    fail(ErrorCode::ShapeMismatch, std::string(context) + ": expected rank " + std::to_string(rank) + ", got shape " +
                                       shape_to_string(t.shape()));
  }
}

}  // namespace qnn4eo::nn
