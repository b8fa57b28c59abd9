#include <doctest.h>

#include <cmath>

#include "qnn4eo/error.hpp"
#include "qnn4eo/layers.hpp"
#include "support/finite_diff.hpp"

using namespace qnn4eo;
using namespace qnn4eo::nn;

namespace {

// Direct loop oracle for cross-correlation; written independently of the
// im2col kernel.
Tensor conv_oracle(const Tensor& in, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t pad) {
  const std::size_t N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
  const std::size_t O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const std::size_t OH = (H + 2 * pad - KH) / stride + 1, OW = (W + 2 * pad - KW) / stride + 1;
  Tensor out({N, O, OH, OW});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t y = 0; y < OH; ++y)
        for (std::size_t x = 0; x < OW; ++x) {
          double s = b[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < KH; ++i)
              for (std::size_t j = 0; j < KW; ++j) {
                const long iy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
                const long ix = static_cast<long>(x * stride + j) - static_cast<long>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W)) continue;
                s += w.at({o, c, i, j}) * in.at({n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)});
              }
          out.at({n, o, y, x}) = s;
        }
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Tensor random_tensor(Shape shape, unsigned long long seed, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  oracle::fill_uniform(t, seed, lo, hi);
  return t;
}

constexpr double kEps = 1e-5;
constexpr double kLayerTol = 1e-4;

}  // namespace

TEST_CASE("conv2d_forward examples") {
  SUBCASE("ones") {
    const Tensor out = conv2d_forward(Tensor({1, 1, 3, 3}, 1.0), Tensor({1, 1, 3, 3}, 1.0), Tensor({1}), 1, 0);
    CHECK(out.shape() == Shape{1, 1, 1, 1});
    CHECK(out[0] == 9.0);
  }
  SUBCASE("centered identity kernel with padding 1") {
    const Tensor in = random_tensor({2, 1, 5, 4}, 1);
    Tensor k({1, 1, 3, 3});
    k.at({0, 0, 1, 1}) = 1.0;
    const Tensor out = conv2d_forward(in, k, Tensor({1}), 1, 1);
    CHECK(out == in);
  }
  SUBCASE("matches loop oracle") {
    const Tensor in = random_tensor({1, 2, 5, 5}, 2);
    const Tensor w = random_tensor({3, 2, 3, 3}, 3);
    const Tensor b = random_tensor({3}, 4);
    for (auto [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {1, 1}, {2, 1}, {2, 0}}) {
      const Tensor got = conv2d_forward(in, w, b, stride, pad);
      const Tensor want = conv_oracle(in, w, b, stride, pad);
      REQUIRE(got.shape() == want.shape());
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
    }
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(conv2d_forward(Tensor({1, 2, 5, 5}), Tensor({3, 1, 3, 3}), Tensor({3}), 1, 0), Error);
    CHECK_THROWS_AS(conv2d_forward(Tensor({1, 1, 2, 2}), Tensor({1, 1, 3, 3}), Tensor({1}), 1, 0), Error);
    CHECK_THROWS_AS(conv2d_forward(Tensor({1, 1, 5, 5}), Tensor({1, 1, 3, 3}), Tensor({2}), 1, 0), Error);
    CHECK_THROWS_AS(conv2d_forward(Tensor({1, 5, 5}), Tensor({1, 1, 3, 3}), Tensor({1}), 1, 0), Error);
  }
}

TEST_CASE("conv2d_backward") {
  Tensor in = random_tensor({1, 2, 6, 6}, 10);
  Tensor w = random_tensor({3, 2, 3, 3}, 11);
  Tensor b = random_tensor({3}, 12);

  SUBCASE("zero upstream gives zero gradients") {
    Conv2dTape tape;
    const Tensor out = conv2d_forward(in, w, b, 1, 0, &tape);
    const Conv2dGrads g = conv2d_backward(tape, Tensor::zeros_like(out));
    for (double v : g.grad_input.data()) CHECK(v == 0.0);
    for (double v : g.grad_weights.data()) CHECK(v == 0.0);
    for (double v : g.grad_bias.data()) CHECK(v == 0.0);
  }

  for (auto [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {1, 1}, {2, 1}}) {
    CAPTURE(stride);
    CAPTURE(pad);
    Conv2dTape tape;
    const Tensor out = conv2d_forward(in, w, b, stride, pad, &tape);
    const Tensor up = random_tensor(out.shape(), 13);
    const Conv2dGrads g = conv2d_backward(tape, up);
    auto loss = [&] { return dot(conv2d_forward(in, w, b, stride, pad), up); };

    CHECK(oracle::check_gradient(in, g.grad_input, loss, kEps).max_rel_error < kLayerTol);
    CHECK(oracle::check_gradient(w, g.grad_weights, loss, kEps).max_rel_error < kLayerTol);
    CHECK(oracle::check_gradient(b, g.grad_bias, loss, kEps).max_rel_error < kLayerTol);

    // bias gradient is upstream summed over N, H', W'
    for (std::size_t o = 0; o < 3; ++o) {
      double s = 0.0;
      for (std::size_t y = 0; y < out.dim(2); ++y)
        for (std::size_t x = 0; x < out.dim(3); ++x) s += up.at({0, o, y, x});
      CHECK(std::abs(g.grad_bias[o] - s) < 1e-12);
    }
  }

  Conv2dTape tape;
  (void)conv2d_forward(in, w, b, 1, 0, &tape);
  CHECK_THROWS_AS(conv2d_backward(tape, Tensor({1, 3, 5, 5})), Error);
}

TEST_CASE("relu") {
  ReluTape tape;
  const Tensor out = relu_forward(Tensor({3}, {-1.0, 0.0, 2.0}), &tape);
  CHECK(out == Tensor({3}, {0.0, 0.0, 2.0}));
  CHECK(relu_backward(tape, Tensor({3}, {5.0, 5.0, 5.0})) == Tensor({3}, {0.0, 0.0, 5.0}));
  CHECK_THROWS_AS(relu_backward(tape, Tensor({4})), Error);

  // Finite differences away from the kink.
  Tensor x = random_tensor({2, 3, 4}, 20);
  for (double& v : x.data()) v += v > 0 ? 0.1 : -0.1;
  const Tensor up = random_tensor(x.shape(), 21);
  ReluTape t2;
  (void)relu_forward(x, &t2);
  const Tensor g = relu_backward(t2, up);
  CHECK(oracle::check_gradient(x, g, [&] { return dot(relu_forward(x), up); }, kEps).max_rel_error < kLayerTol);
}

TEST_CASE("maxpool") {
  MaxPoolTape tape;
  const Tensor out = maxpool_forward(Tensor({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0}), 2, 2, &tape);
  CHECK(out.shape() == Shape{1, 1, 1, 1});
  CHECK(out[0] == 4.0);
  CHECK(maxpool_backward(tape, Tensor({1, 1, 1, 1}, {1.0})) == Tensor({1, 1, 2, 2}, {0.0, 0.0, 0.0, 1.0}));

  SUBCASE("ties route to the first element in row-major order") {
    MaxPoolTape t;
    (void)maxpool_forward(Tensor({1, 1, 2, 2}, {7.0, 7.0, 7.0, 7.0}), 2, 2, &t);
    CHECK(maxpool_backward(t, Tensor({1, 1, 1, 1}, {1.0})) == Tensor({1, 1, 2, 2}, {1.0, 0.0, 0.0, 0.0}));
  }
  SUBCASE("floor mode drops the ragged edge") {
    CHECK(maxpool_forward(Tensor({1, 2, 11, 11}), 2, 2).shape() == Shape{1, 2, 5, 5});
  }
  SUBCASE("finite differences") {
    Tensor x = random_tensor({2, 2, 6, 5}, 30);
    const Tensor up = random_tensor({2, 2, 3, 2}, 31);
    MaxPoolTape t;
    (void)maxpool_forward(x, 2, 2, &t);
    const Tensor g = maxpool_backward(t, up);
    CHECK(oracle::check_gradient(x, g, [&] { return dot(maxpool_forward(x, 2, 2), up); }, kEps).max_rel_error <
          kLayerTol);
  }
  CHECK_THROWS_AS(maxpool_forward(Tensor({1, 1, 1, 1}), 2, 2), Error);
}

TEST_CASE("flatten") {
  FlattenTape tape;
  const Tensor x = random_tensor({2, 3, 2, 2}, 40);
  const Tensor f = flatten_forward(x, &tape);
  CHECK(f.shape() == Shape{2, 12});
  CHECK(std::equal(f.data().begin(), f.data().end(), x.data().begin()));
  CHECK(flatten_backward(tape, f) == x);
  CHECK_THROWS_AS(flatten_backward(tape, Tensor({2, 11})), Error);
}

TEST_CASE("linear") {
  Tensor x = random_tensor({4, 5}, 50);
  Tensor w = random_tensor({3, 5}, 51);
  Tensor b = random_tensor({3}, 52);
  LinearTape tape;
  const Tensor y = linear_forward(x, w, b, &tape);
  REQUIRE(y.shape() == Shape{4, 3});
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t o = 0; o < 3; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < 5; ++i) s += x.at({n, i}) * w.at({o, i});
      CHECK(std::abs(y.at({n, o}) - s) < 1e-14);
    }

  const Tensor up = random_tensor(y.shape(), 53);
  const LinearGrads g = linear_backward(tape, up);
  auto loss = [&] { return dot(linear_forward(x, w, b), up); };
  CHECK(oracle::check_gradient(x, g.grad_input, loss, kEps).max_rel_error < kLayerTol);
  CHECK(oracle::check_gradient(w, g.grad_weights, loss, kEps).max_rel_error < kLayerTol);
  CHECK(oracle::check_gradient(b, g.grad_bias, loss, kEps).max_rel_error < kLayerTol);

  CHECK_THROWS_AS(linear_forward(Tensor({4, 4}), w, b), Error);
  CHECK_THROWS_AS(linear_backward(tape, Tensor({4, 2})), Error);
}

TEST_CASE("log_softmax and nll") {
  SUBCASE("uniform logits") {
    const int label = 0;
    const LossResult r = log_softmax_nll(Tensor({1, 2}, {0.0, 0.0}), std::span(&label, 1));
    CHECK(std::abs(r.loss - std::log(2.0)) < 1e-12);
    CHECK(r.loss == doctest::Approx(0.693147).epsilon(1e-6));
  }
  SUBCASE("large logits do not overflow") {
    const int label = 0;
    const LossResult r = log_softmax_nll(Tensor({1, 2}, {1000.0, -1000.0}), std::span(&label, 1));
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss < 1e-12);
    CHECK(r.grad.all_finite());
  }
  SUBCASE("fused gradient matches finite differences") {
    Tensor logits = random_tensor({4, 2}, 60, -3.0, 3.0);
    const std::vector<int> labels{0, 1, 1, 0};
    const LossResult r = log_softmax_nll(logits, labels);
    auto loss = [&] { return log_softmax_nll(logits, labels).loss; };
    for (std::size_t i = 0; i < logits.size(); ++i) {
      CHECK(std::abs(r.grad[i] - oracle::central_difference(logits, i, loss, 1e-5)) < 1e-6);
    }
  }
  SUBCASE("composition equals the fused path") {
    const Tensor logits = random_tensor({3, 2}, 61, -2.0, 2.0);
    const std::vector<int> labels{1, 0, 1};
    LogSoftmaxTape tape;
    const Tensor lp = log_softmax_forward(logits, &tape);
    const LossResult nll = nll_loss(lp, labels);
    const Tensor g = log_softmax_backward(tape, nll.grad);
    const LossResult fused = log_softmax_nll(logits, labels);
    CHECK(std::abs(nll.loss - fused.loss) < 1e-14);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i] - fused.grad[i]) < 1e-14);
  }
  SUBCASE("log_softmax backward matches finite differences") {
    Tensor x = random_tensor({3, 4}, 62, -2.0, 2.0);
    const Tensor up = random_tensor({3, 4}, 63);
    LogSoftmaxTape tape;
    (void)log_softmax_forward(x, &tape);
    const Tensor g = log_softmax_backward(tape, up);
    CHECK(oracle::check_gradient(x, g, [&] { return dot(log_softmax_forward(x), up); }, kEps).max_rel_error <
          kLayerTol);
  }
  SUBCASE("errors") {
    const std::vector<int> none;
    CHECK_THROWS_AS(log_softmax_nll(Tensor({0, 2}), none), Error);
    const std::vector<int> bad{2};
    CHECK_THROWS_AS(log_softmax_nll(Tensor({1, 2}), bad), Error);
    const std::vector<int> two{0, 1};
    CHECK_THROWS_AS(nll_loss(Tensor({1, 2}), two), Error);
  }
}
