#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qnn4eo/tensor.hpp"

namespace qnn4eo::nn {

// Stateless layer kernels. Each forward returns its output together with the
// tape its backward needs; tapes own copies of what they reference.

/// Output extent of a strided window; throws if the window does not fit.
std::size_t window_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);

// --- convolution -----------------------------------------------------------

struct Conv2dTape {
  Tensor input;    // [N, C, H, W]
  Tensor weights;  // [O, C, kH, kW]
  std::size_t stride = 1;
  std::size_t padding = 0;
};

struct Conv2dGrads {
  Tensor grad_input;
  Tensor grad_weights;
  Tensor grad_bias;
};

/// Cross-correlation: out[n,o,y,x] = b[o] + sum_{c,i,j} w[o,c,i,j] * in[n,c,y*s+i-p,x*s+j-p].
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t stride,
                      std::size_t padding, Conv2dTape* tape = nullptr);

Conv2dGrads conv2d_backward(const Conv2dTape& tape, const Tensor& upstream);

// --- relu ------------------------------------------------------------------

struct ReluTape {
  Tensor input;
};

Tensor relu_forward(const Tensor& input, ReluTape* tape = nullptr);
Tensor relu_backward(const ReluTape& tape, const Tensor& upstream);

// --- max pooling -----------------------------------------------------------

struct MaxPoolTape {
  Shape input_shape;
  std::vector<std::size_t> argmax;  // flat input offset per output element
};

/// Floor-mode pooling. Ties go to the first element in row-major window order.
Tensor maxpool_forward(const Tensor& input, std::size_t kernel, std::size_t stride, MaxPoolTape* tape = nullptr);
Tensor maxpool_backward(const MaxPoolTape& tape, const Tensor& upstream);

// --- flatten ---------------------------------------------------------------

struct FlattenTape {
  Shape input_shape;
};

Tensor flatten_forward(const Tensor& input, FlattenTape* tape = nullptr);
Tensor flatten_backward(const FlattenTape& tape, const Tensor& upstream);

// --- linear ----------------------------------------------------------------

struct LinearTape {
  Tensor input;    // [N, in]
  Tensor weights;  // [out, in]
};

struct LinearGrads {
  Tensor grad_input;
  Tensor grad_weights;
  Tensor grad_bias;
};

/// y = x W^T + b.
Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias, LinearTape* tape = nullptr);
LinearGrads linear_backward(const LinearTape& tape, const Tensor& upstream);

// --- log-softmax and loss --------------------------------------------------

struct LogSoftmaxTape {
  Tensor output;  // log-probabilities [N, K]
};

Tensor log_softmax_forward(const Tensor& logits, LogSoftmaxTape* tape = nullptr);
Tensor log_softmax_backward(const LogSoftmaxTape& tape, const Tensor& upstream);

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

/// Mean negative log-likelihood over the batch given log-probabilities.
LossResult nll_loss(const Tensor& log_probs, std::span<const int> labels);

/// Fused log-softmax + NLL over raw logits; gradient is (softmax - onehot) / N.
LossResult log_softmax_nll(const Tensor& logits, std::span<const int> labels);

}  // namespace qnn4eo::nn
