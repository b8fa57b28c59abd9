#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace qnn4eo::quantum {

using Amplitude = std::complex<double>;

inline constexpr int kMaxQubits = 24;
inline constexpr double kNormTolerance = 1e-10;

enum class GateKind { PauliX, PauliY, PauliZ, Hadamard, RotY, PhaseR, ControlledNot };

std::string to_string(GateKind kind);

/// A gate bound to the qubits it acts on. Single-qubit kinds use `target`
/// only; ControlledNot also uses `control`. `angle` is theta for RotY and
/// phi for PhaseR, ignored otherwise.
struct Gate {
  GateKind kind = GateKind::PauliX;
  int target = 0;
  int control = -1;
  double angle = 0.0;

  static Gate x(int q) { return {GateKind::PauliX, q}; }
  static Gate y(int q) { return {GateKind::PauliY, q}; }
  static Gate z(int q) { return {GateKind::PauliZ, q}; }
  static Gate h(int q) { return {GateKind::Hadamard, q}; }
  static Gate ry(int q, double theta) { return {GateKind::RotY, q, -1, theta}; }
  static Gate phase(int q, double phi) { return {GateKind::PhaseR, q, -1, phi}; }
  static Gate cnot(int control, int target) { return {GateKind::ControlledNot, target, control}; }

  bool is_two_qubit() const noexcept { return kind == GateKind::ControlledNot; }
};

/// Row-major 2x2 matrix of a single-qubit gate.
using Matrix2 = std::array<Amplitude, 4>;

Matrix2 single_qubit_matrix(const Gate& gate);

/// Dense local matrix of the gate, dimension 2 or 4, row-major. For
/// ControlledNot the local basis index is control_bit + 2 * target_bit.
std::vector<Amplitude> local_matrix(const Gate& gate);

/// Amplitudes over n qubits in little-endian order: qubit 0 is the least
/// significant bit of the basis index.
class StateVector {
 public:
  /// Validates length (a power of two, at most 2^24), finiteness and unit norm.
  explicit StateVector(std::vector<Amplitude> amplitudes);

  int num_qubits() const noexcept { return num_qubits_; }
  std::size_t dimension() const noexcept { return amplitudes_.size(); }
  std::span<const Amplitude> amplitudes() const noexcept { return amplitudes_; }
  const Amplitude& operator[](std::size_t i) const { return amplitudes_[i]; }

  double norm_squared() const noexcept;

  /// Mutating variant of apply_gate().
  void apply(const Gate& gate);

 private:
  StateVector(int num_qubits, std::vector<Amplitude> amplitudes) noexcept
      : num_qubits_(num_qubits), amplitudes_(std::move(amplitudes)) {}

  friend StateVector zero_state(int num_qubits);

  int num_qubits_;
  std::vector<Amplitude> amplitudes_;
};

struct MeasurementOutcome {
  std::map<std::uint64_t, std::uint64_t> counts;
  std::uint64_t shots = 0;

  std::uint64_t count(std::uint64_t basis) const {
    auto it = counts.find(basis);
    return it == counts.end() ? 0 : it->second;
  }
};

StateVector zero_state(int num_qubits);

StateVector apply_gate(const StateVector& state, const Gate& gate);

std::vector<double> probabilities(const StateVector& state);

/// Draws `shots` i.i.d. basis outcomes. Same (state, shots, seed) gives the
/// same counts on every platform.
MeasurementOutcome sample(const StateVector& state, std::uint64_t shots, std::uint64_t seed);

/// P(qubit reads 0) - P(qubit reads 1), exact.
double z_expectation(const StateVector& state, int qubit);

}  // namespace qnn4eo::quantum
