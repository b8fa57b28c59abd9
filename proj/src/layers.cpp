#include "qnn4eo/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qnn4eo/error.hpp"

namespace qnn4eo::nn {

std::size_t window_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (kernel == 0 || stride == 0) fail(ErrorCode::InvalidArgument, "kernel and stride must be positive");
  if (in + 2 * padding < kernel) {
    fail(ErrorCode::ShapeMismatch, "window of size " + std::to_string(kernel) + " does not fit extent " +
                                       std::to_string(in) + " with padding " + std::to_string(padding));
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
  std::size_t n, c, h, w, o, kh, kw, oh, ow, stride, padding;

  std::size_t patch() const { return c * kh * kw; }
  std::size_t pixels() const { return oh * ow; }
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weights, std::size_t stride, std::size_t padding) {
  expect_rank(input, 4, "conv2d input");
  expect_rank(weights, 4, "conv2d weights");
  if (input.dim(1) != weights.dim(1)) {
    fail(ErrorCode::ShapeMismatch, "conv2d: input has " + std::to_string(input.dim(1)) + " channels, weights expect " +
                                       std::to_string(weights.dim(1)));
  }
  ConvGeometry g{};
  g.n = input.dim(0);
  g.c = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.o = weights.dim(0);
  g.kh = weights.dim(2);
  g.kw = weights.dim(3);
  g.stride = stride;
  g.padding = padding;
  g.oh = window_output_size(g.h, g.kh, stride, padding);
  g.ow = window_output_size(g.w, g.kw, stride, padding);
  return g;
}

// Unrolls one sample into cols[patch][pixel].
void im2col(const ConvGeometry& g, const double* in, double* cols) {
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        double* row = cols + ((c * g.kh + i) * g.kw + j) * g.pixels();
        for (std::size_t y = 0; y < g.oh; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride + i) - pad;
          double* dst = row + y * g.ow;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.ow, 0.0);
            continue;
          }
          const double* src = in + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t x = 0; x < g.ow; ++x) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * g.stride + j) - pad;
            dst[x] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

// Scatter-adds cols back into one sample's gradient.
void col2im(const ConvGeometry& g, const double* cols, double* grad_in) {
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const double* row = cols + ((c * g.kh + i) * g.kw + j) * g.pixels();
        for (std::size_t y = 0; y < g.oh; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride + i) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          double* dst = grad_in + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const double* src = row + y * g.ow;
          for (std::size_t x = 0; x < g.ow; ++x) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * g.stride + j) - pad;
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) dst[ix] += src[x];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t stride,
                      std::size_t padding, Conv2dTape* tape) {
  const ConvGeometry g = conv_geometry(input, weights, stride, padding);
  expect_shape(bias, {g.o}, "conv2d bias");

  Tensor out({g.n, g.o, g.oh, g.ow});
  std::vector<double> cols(g.patch() * g.pixels());
  const std::size_t in_stride = g.c * g.h * g.w;
  const std::size_t out_stride = g.o * g.pixels();
  const std::size_t npix = g.pixels();
  const std::size_t patch = g.patch();

  for (std::size_t n = 0; n < g.n; ++n) {
    im2col(g, input.ptr() + n * in_stride, cols.data());
    double* out_n = out.ptr() + n * out_stride;
    for (std::size_t o = 0; o < g.o; ++o) {
      double* dst = out_n + o * npix;
      std::fill(dst, dst + npix, bias[o]);
      const double* w = weights.ptr() + o * patch;
      for (std::size_t k = 0; k < patch; ++k) {
        const double wk = w[k];
        const double* src = cols.data() + k * npix;
        for (std::size_t p = 0; p < npix; ++p) dst[p] += wk * src[p];
      }
    }
  }

  if (tape) *tape = Conv2dTape{input, weights, stride, padding};
  return out;
}

Conv2dGrads conv2d_backward(const Conv2dTape& tape, const Tensor& upstream) {
  const ConvGeometry g = conv_geometry(tape.input, tape.weights, tape.stride, tape.padding);
  expect_shape(upstream, {g.n, g.o, g.oh, g.ow}, "conv2d upstream gradient");

  Conv2dGrads grads{Tensor(tape.input.shape()), Tensor(tape.weights.shape()), Tensor({g.o})};
  const std::size_t npix = g.pixels();
  const std::size_t patch = g.patch();
  const std::size_t in_stride = g.c * g.h * g.w;
  const std::size_t out_stride = g.o * npix;
  std::vector<double> cols(patch * npix);
  std::vector<double> grad_cols(patch * npix);

  for (std::size_t n = 0; n < g.n; ++n) {
    im2col(g, tape.input.ptr() + n * in_stride, cols.data());
    const double* up_n = upstream.ptr() + n * out_stride;

    for (std::size_t o = 0; o < g.o; ++o) {
      const double* up = up_n + o * npix;
      double bsum = 0.0;
      for (std::size_t p = 0; p < npix; ++p) bsum += up[p];
      grads.grad_bias[o] += bsum;

      double* gw = grads.grad_weights.ptr() + o * patch;
      for (std::size_t k = 0; k < patch; ++k) {
        const double* src = cols.data() + k * npix;
        double acc = 0.0;
        for (std::size_t p = 0; p < npix; ++p) acc += up[p] * src[p];
        gw[k] += acc;
      }
    }

    std::fill(grad_cols.begin(), grad_cols.end(), 0.0);
    for (std::size_t o = 0; o < g.o; ++o) {
      const double* up = up_n + o * npix;
      const double* w = tape.weights.ptr() + o * patch;
      for (std::size_t k = 0; k < patch; ++k) {
        const double wk = w[k];
        double* dst = grad_cols.data() + k * npix;
        for (std::size_t p = 0; p < npix; ++p) dst[p] += wk * up[p];
      }
    }
    col2im(g, grad_cols.data(), grads.grad_input.ptr() + n * in_stride);
  }
  return grads;
}

Tensor relu_forward(const Tensor& input, ReluTape* tape) {
  Tensor out = input;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  if (tape) tape->input = input;
  return out;
}

Tensor relu_backward(const ReluTape& tape, const Tensor& upstream) {
  expect_shape(upstream, tape.input.shape(), "relu upstream gradient");
  Tensor grad = upstream;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(tape.input[i] > 0.0)) grad[i] = 0.0;
  }
  return grad;
}

Tensor maxpool_forward(const Tensor& input, std::size_t kernel, std::size_t stride, MaxPoolTape* tape) {
  expect_rank(input, 4, "maxpool input");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = window_output_size(h, kernel, stride, 0);
  const std::size_t ow = window_output_size(w, kernel, stride, 0);

  Tensor out({n, c, oh, ow});
  std::vector<std::size_t> argmax(out.size());
  std::size_t oi = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x, ++oi) {
        std::size_t best = base + (y * stride) * w + x * stride;
        double best_v = input[best];
        for (std::size_t i = 0; i < kernel; ++i) {
          for (std::size_t j = 0; j < kernel; ++j) {
            const std::size_t idx = base + (y * stride + i) * w + (x * stride + j);
            if (input[idx] > best_v) {
              best_v = input[idx];
              best = idx;
            }
          }
        }
        out[oi] = best_v;
        argmax[oi] = best;
      }
    }
  }
  if (tape) *tape = MaxPoolTape{input.shape(), std::move(argmax)};
  return out;
}

Tensor maxpool_backward(const MaxPoolTape& tape, const Tensor& upstream) {
  if (upstream.size() != tape.argmax.size()) {
    fail(ErrorCode::ShapeMismatch, "maxpool upstream gradient has " + std::to_string(upstream.size()) +
                                       " elements, expected " + std::to_string(tape.argmax.size()));
  }
  Tensor grad(tape.input_shape);
  for (std::size_t i = 0; i < tape.argmax.size(); ++i) grad[tape.argmax[i]] += upstream[i];
  return grad;
}

Tensor flatten_forward(const Tensor& input, FlattenTape* tape) {
  if (input.rank() < 1) fail(ErrorCode::ShapeMismatch, "flatten needs a batch axis");
  if (tape) tape->input_shape = input.shape();
  const std::size_t n = input.dim(0);
  return input.reshaped({n, n == 0 ? 0 : input.size() / n});
}

Tensor flatten_backward(const FlattenTape& tape, const Tensor& upstream) {
  return upstream.reshaped(tape.input_shape);
}

Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias, LinearTape* tape) {
  expect_rank(input, 2, "linear input");
  expect_rank(weights, 2, "linear weights");
  const std::size_t n = input.dim(0), in = input.dim(1), out_f = weights.dim(0);
  if (weights.dim(1) != in) {
    fail(ErrorCode::ShapeMismatch, "linear: input width " + std::to_string(in) + " does not match weights " +
                                       shape_to_string(weights.shape()));
  }
  expect_shape(bias, {out_f}, "linear bias");

  Tensor out({n, out_f});
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = input.ptr() + r * in;
    for (std::size_t o = 0; o < out_f; ++o) {
      const double* w = weights.ptr() + o * in;
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += x[i] * w[i];
      out[r * out_f + o] = acc;
    }
  }
  if (tape) *tape = LinearTape{input, weights};
  return out;
}

LinearGrads linear_backward(const LinearTape& tape, const Tensor& upstream) {
  const std::size_t n = tape.input.dim(0), in = tape.input.dim(1), out_f = tape.weights.dim(0);
  expect_shape(upstream, {n, out_f}, "linear upstream gradient");

  LinearGrads grads{Tensor(tape.input.shape()), Tensor(tape.weights.shape()), Tensor({out_f})};
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = tape.input.ptr() + r * in;
    double* gx = grads.grad_input.ptr() + r * in;
    for (std::size_t o = 0; o < out_f; ++o) {
      const double u = upstream[r * out_f + o];
      grads.grad_bias[o] += u;
      const double* w = tape.weights.ptr() + o * in;
      double* gw = grads.grad_weights.ptr() + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        gx[i] += u * w[i];
        gw[i] += u * x[i];
      }
    }
  }
  return grads;
}

Tensor log_softmax_forward(const Tensor& logits, LogSoftmaxTape* tape) {
  expect_rank(logits, 2, "log_softmax input");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor out({n, k});
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = logits.ptr() + r * k;
    const double m = *std::max_element(x, x + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(x[j] - m);
    const double lse = m + std::log(s);
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = x[j] - lse;
  }
  if (tape) tape->output = out;
  return out;
}

Tensor log_softmax_backward(const LogSoftmaxTape& tape, const Tensor& upstream) {
  expect_shape(upstream, tape.output.shape(), "log_softmax upstream gradient");
  const std::size_t n = tape.output.dim(0), k = tape.output.dim(1);
  Tensor grad({n, k});
  for (std::size_t r = 0; r < n; ++r) {
    double gsum = 0.0;
    for (std::size_t j = 0; j < k; ++j) gsum += upstream[r * k + j];
    for (std::size_t j = 0; j < k; ++j) {
      grad[r * k + j] = upstream[r * k + j] - std::exp(tape.output[r * k + j]) * gsum;
    }
  }
  return grad;
}

namespace {

void check_labels(const Tensor& t, std::span<const int> labels, const char* context) {
  expect_rank(t, 2, context);
  if (t.dim(0) == 0) fail(ErrorCode::InvalidArgument, std::string(context) + ": empty batch");
  if (labels.size() != t.dim(0)) {
    fail(ErrorCode::ShapeMismatch, std::string(context) + ": " + std::to_string(labels.size()) + " labels for batch of " +
                                       std::to_string(t.dim(0)));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= t.dim(1)) {
      fail(ErrorCode::OutOfRange, std::string(context) + ": label " + std::to_string(y) + " out of range");
    }
  }
}

}  // namespace

LossResult nll_loss(const Tensor& log_probs, std::span<const int> labels) {
  check_labels(log_probs, labels, "nll_loss");
  const std::size_t n = log_probs.dim(0), k = log_probs.dim(1);
  LossResult r{0.0, Tensor({n, k})};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = static_cast<std::size_t>(labels[i]);
    r.loss -= log_probs[i * k + y];
    r.grad[i * k + y] = -inv_n;
  }
  r.loss *= inv_n;
  return r;
}

LossResult log_softmax_nll(const Tensor& logits, std::span<const int> labels) {
  check_labels(logits, labels, "log_softmax_nll");
  const Tensor lp = log_softmax_forward(logits);
  const std::size_t n = lp.dim(0), k = lp.dim(1);
  LossResult r{0.0, Tensor({n, k})};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = static_cast<std::size_t>(labels[i]);
    r.loss -= lp[i * k + y];
    for (std::size_t j = 0; j < k; ++j) {
      r.grad[i * k + j] = (std::exp(lp[i * k + j]) - (j == y ? 1.0 : 0.0)) * inv_n;
    }
  }
  r.loss *= inv_n;
  return r;
}

}  // namespace qnn4eo::nn
