#include "qnn4eo/statevector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "qnn4eo/error.hpp"
#include "qnn4eo/rng.hpp"

namespace qnn4eo::quantum {

namespace {

void check_qubit(int qubit, int num_qubits) {
  if (qubit < 0 || qubit >= num_qubits) {
    fail(ErrorCode::OutOfRange, "qubit index " + std::to_string(qubit) + " out of range for " +
                                    std::to_string(num_qubits) + "-qubit state");
  }
}

void check_gate(const Gate& gate, int num_qubits) {
  check_qubit(gate.target, num_qubits);
  if (gate.is_two_qubit()) {
    check_qubit(gate.control, num_qubits);
    if (gate.control == gate.target) fail(ErrorCode::InvalidArgument, "control and target qubits must differ");
  }
  if ((gate.kind == GateKind::RotY || gate.kind == GateKind::PhaseR) && !std::isfinite(gate.angle)) {
    fail(ErrorCode::NonFinite, "gate angle must be finite");
  }
}

}  // namespace

std::string to_string(GateKind kind) {
  switch (kind) {
    case GateKind::PauliX: return "X";
    case GateKind::PauliY: return "Y";
    case GateKind::PauliZ: return "Z";
    case GateKind::Hadamard: return "H";
    case GateKind::RotY: return "RY";
    case GateKind::PhaseR: return "R";
    case GateKind::ControlledNot: return "CNOT";
  }
  return "?";
}

Matrix2 single_qubit_matrix(const Gate& gate) {
  using namespace std::complex_literals;
  const double r = std::numbers::sqrt2 / 2.0;
  switch (gate.kind) {
    case GateKind::PauliX: return {0.0, 1.0, 1.0, 0.0};
    case GateKind::PauliY: return {0.0, -1i, 1i, 0.0};
    case GateKind::PauliZ: return {1.0, 0.0, 0.0, -1.0};
    case GateKind::Hadamard: return {r, r, r, -r};
    case GateKind::RotY: {
      const double c = std::cos(gate.angle / 2.0);
      const double s = std::sin(gate.angle / 2.0);
      return {c, -s, s, c};
    }
    case GateKind::PhaseR: return {1.0, 0.0, 0.0, std::polar(1.0, gate.angle)};
    case GateKind::ControlledNot: break;
  }
  fail(ErrorCode::InvalidArgument, "gate " + to_string(gate.kind) + " is not a single-qubit gate");
}

std::vector<Amplitude> local_matrix(const Gate& gate) {
  if (!gate.is_two_qubit()) {
    const Matrix2 m = single_qubit_matrix(gate);
    return {m.begin(), m.end()};
  }
  // Flips the target bit (bit 1) when the control bit (bit 0) is set: swaps
  // |c=1,t=0> (index 1) and |c=1,t=1> (index 3).
  std::vector<Amplitude> m(16, 0.0);
  m[0 * 4 + 0] = 1.0;
  m[1 * 4 + 3] = 1.0;
  m[2 * 4 + 2] = 1.0;
  m[3 * 4 + 1] = 1.0;
  return m;
}

StateVector::StateVector(std::vector<Amplitude> amplitudes) : num_qubits_(0), amplitudes_(std::move(amplitudes)) {
  const std::size_t n = amplitudes_.size();
  if (n < 2 || !std::has_single_bit(n)) {
    fail(ErrorCode::InvalidArgument, "amplitude count must be a power of two >= 2, got " + std::to_string(n));
  }
  num_qubits_ = std::countr_zero(n);
  if (num_qubits_ > kMaxQubits) fail(ErrorCode::OutOfRange, "at most 24 qubits are supported");
  for (const auto& a : amplitudes_) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) fail(ErrorCode::NonFinite, "amplitudes must be finite");
  }
  if (std::abs(norm_squared() - 1.0) > kNormTolerance) fail(ErrorCode::InvalidArgument, "state is not normalized");
}

double StateVector::norm_squared() const noexcept {
  double s = 0.0;
  for (const auto& a : amplitudes_) s += std::norm(a);
  return s;
}

void StateVector::apply(const Gate& gate) {
  check_gate(gate, num_qubits_);
  const std::size_t dim = amplitudes_.size();
  const std::size_t tbit = std::size_t{1} << gate.target;

  if (gate.kind == GateKind::ControlledNot) {
    const std::size_t cbit = std::size_t{1} << gate.control;
    for (std::size_t i = 0; i < dim; ++i) {
      if ((i & cbit) && !(i & tbit)) std::swap(amplitudes_[i], amplitudes_[i | tbit]);
    }
    return;
  }

  const Matrix2 m = single_qubit_matrix(gate);
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & tbit) continue;
    const Amplitude a0 = amplitudes_[i];
    const Amplitude a1 = amplitudes_[i | tbit];
    amplitudes_[i] = m[0] * a0 + m[1] * a1;
    amplitudes_[i | tbit] = m[2] * a0 + m[3] * a1;
  }
}

StateVector zero_state(int num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    fail(ErrorCode::OutOfRange, "num_qubits must be in [1, 24], got " + std::to_string(num_qubits));
  }
  std::vector<Amplitude> amps(std::size_t{1} << num_qubits, 0.0);
  amps[0] = 1.0;
  return StateVector(num_qubits, std::move(amps));
}

StateVector apply_gate(const StateVector& state, const Gate& gate) {
  StateVector out = state;
  out.apply(gate);
  return out;
}

std::vector<double> probabilities(const StateVector& state) {
  std::vector<double> p;
  p.reserve(state.dimension());
  for (const auto& a : state.amplitudes()) p.push_back(std::norm(a));
  return p;
}

MeasurementOutcome sample(const StateVector& state, std::uint64_t shots, std::uint64_t seed) {
  if (shots == 0) fail(ErrorCode::InvalidArgument, "shots must be >= 1");
  const std::vector<double> p = probabilities(state);
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[i] = acc;
  }

  // Outcomes with zero probability can never be selected: a draw lands on the
  // first index whose cdf exceeds it, and a zero-width bin never does.
  Rng rng(seed);
  MeasurementOutcome out;
  out.shots = shots;
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
    if (it == cdf.end()) {
      idx = cdf.size() - 1;
      while (p[idx] == 0.0) --idx;
    }
    ++out.counts[idx];
  }
  return out;
}

double z_expectation(const StateVector& state, int qubit) {
  check_qubit(qubit, state.num_qubits());
  const std::size_t bit = std::size_t{1} << qubit;
  double e = 0.0;
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) e += (i & bit) ? -std::norm(amps[i]) : std::norm(amps[i]);
  return std::clamp(e, -1.0, 1.0);
}

}  // namespace qnn4eo::quantum
