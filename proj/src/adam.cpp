#include "qnn4eo/adam.hpp"

#include <cmath>

#include "qnn4eo/error.hpp"

namespace qnn4eo::nn {

AdamState AdamState::for_parameters(const std::vector<Tensor>& params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (const Tensor& p : params) {
    s.first_moment.push_back(Tensor::zeros_like(p));
    s.second_moment.push_back(Tensor::zeros_like(p));
  }
  return s;
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    fail(ErrorCode::ShapeMismatch, "adam: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    expect_shape(grads[i], params[i].shape(), "adam gradient");
    expect_shape(state.first_moment[i], params[i].shape(), "adam first moment");
    expect_shape(state.second_moment[i], params[i].shape(), "adam second moment");
  }
  if (!(state.learning_rate > 0.0)) fail(ErrorCode::InvalidArgument, "adam: learning rate must be positive");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].ptr();
    const double* g = grads[i].ptr();
    double* m = state.first_moment[i].ptr();
    double* v = state.second_moment[i].ptr();
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace qnn4eo::nn
