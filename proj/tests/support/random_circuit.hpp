#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "qnn4eo/statevector.hpp"

namespace oracle {

using qnn4eo::quantum::Amplitude;
using qnn4eo::quantum::Gate;
using qnn4eo::quantum::StateVector;

/// Haar-like random state from normalized complex Gaussians.
inline StateVector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<Amplitude> a(std::size_t{1} << n);
  double norm = 0.0;
  for (auto& x : a) {
    x = {g(rng), g(rng)};
    norm += std::norm(x);
  }
  for (auto& x : a) x /= std::sqrt(norm);
  return StateVector(std::move(a));
}

/// Uniform over gate kinds (CNOT only when n > 1), qubits and angles.
inline Gate random_gate(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, n > 1 ? 6 : 5);
  std::uniform_int_distribution<int> qubit(0, n - 1);
  std::uniform_real_distribution<double> angle(-2 * std::numbers::pi, 2 * std::numbers::pi);
  const int k = kind(rng);
  const int t = qubit(rng);
  switch (k) {
    case 0: return Gate::x(t);
    case 1: return Gate::y(t);
    case 2: return Gate::z(t);
    case 3: return Gate::h(t);
    case 4: return Gate::ry(t, angle(rng));
    case 5: return Gate::phase(t, angle(rng));
    default: {
      int c = qubit(rng);
      while (c == t) c = qubit(rng);
      return Gate::cnot(c, t);
    }
  }
}

}  // namespace oracle
