#pragma once

#include <cstdint>
#include <vector>

#include "qnn4eo/tensor.hpp"

namespace qnn4eo::nn {

struct AdamState {
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zero moments shaped like `params`.
  static AdamState for_parameters(const std::vector<Tensor>& params, double learning_rate);
};

/// One bias-corrected Adam update, in place:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state);

}  // namespace qnn4eo::nn
