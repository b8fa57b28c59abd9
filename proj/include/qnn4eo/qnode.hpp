#pragma once

#include <cstdint>
#include <numbers>

namespace qnn4eo::quantum {

/// Configuration of the single-qubit node. `shots == 0` selects the exact
/// expectation; otherwise the expectation is estimated from that many samples.
struct QNodeConfig {
  std::uint64_t shots = 0;
  double shift = std::numbers::pi / 2.0;
  std::uint64_t seed = 0;

  /// Throws unless shift lies in (0, pi].
  void validate() const;
};

struct QNodeTape {
  double theta = 0.0;
  double output = 0.0;
};

struct QNodeResult {
  double output;
  QNodeTape tape;
};

/// Expectation of Z after |0> -> H -> RY(theta). Equals -sin(theta) exactly
/// when shots == 0.
double qnode_expectation(double theta, const QNodeConfig& config);

QNodeResult qnode_forward(double theta, const QNodeConfig& config);

/// Shift rule: upstream * (E(theta + s) - E(theta - s)) / (2 sin s).
/// In shot mode the two shifted evaluations draw from streams derived from
/// config.seed, distinct from the forward stream.
double qnode_backward(const QNodeTape& tape, double upstream_grad, const QNodeConfig& config);

}  // namespace qnn4eo::quantum
