#include "qnn4eo/qnode.hpp"

#include <cmath>

#include "qnn4eo/error.hpp"
#include "qnn4eo/rng.hpp"
#include "qnn4eo/statevector.hpp"

namespace qnn4eo::quantum {

namespace {

constexpr std::uint64_t kPlusStream = 1;
constexpr std::uint64_t kMinusStream = 2;

void check_theta(double theta) {
  if (!std::isfinite(theta)) fail(ErrorCode::NonFinite, "qnode angle must be finite");
}

}  // namespace

void QNodeConfig::validate() const {
  if (!(shift > 0.0 && shift <= std::numbers::pi) || !std::isfinite(shift)) {
    fail(ErrorCode::InvalidArgument, "qnode shift must lie in (0, pi]");
  }
}

double qnode_expectation(double theta, const QNodeConfig& config) {
  check_theta(theta);
  StateVector state = zero_state(1);
  state.apply(Gate::h(0));
  state.apply(Gate::ry(0, theta));
  if (config.shots == 0) return z_expectation(state, 0);

  const MeasurementOutcome m = sample(state, config.shots, config.seed);
  const double c0 = static_cast<double>(m.count(0));
  const double c1 = static_cast<double>(m.count(1));
  return (c0 - c1) / static_cast<double>(config.shots);
}

QNodeResult qnode_forward(double theta, const QNodeConfig& config) {
  config.validate();
  const double e = qnode_expectation(theta, config);
  return {e, QNodeTape{theta, e}};
}

double qnode_backward(const QNodeTape& tape, double upstream_grad, const QNodeConfig& config) {
  config.validate();
  check_theta(tape.theta);
  if (!std::isfinite(upstream_grad)) fail(ErrorCode::NonFinite, "upstream gradient must be finite");

  QNodeConfig plus = config;
  QNodeConfig minus = config;
  if (config.shots > 0) {
    plus.seed = derive_seed(config.seed, {kPlusStream});
    minus.seed = derive_seed(config.seed, {kMinusStream});
  }
  const double e_plus = qnode_expectation(tape.theta + config.shift, plus);
  const double e_minus = qnode_expectation(tape.theta - config.shift, minus);
  return upstream_grad * (e_plus - e_minus) / (2.0 * std::sin(config.shift));
}

}  // namespace qnn4eo::quantum
