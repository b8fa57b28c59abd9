#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qnn4eo/error.hpp"
#include "qnn4eo/statevector.hpp"
#include "support/dense_circuit.hpp"
#include "support/random_circuit.hpp"

using namespace qnn4eo;
using namespace qnn4eo::quantum;
using oracle::random_gate;
using oracle::random_state;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("zero_state") {
  const StateVector one = zero_state(1);
  CHECK(one.dimension() == 2);
  CHECK(one[0] == Amplitude(1.0, 0.0));
  CHECK(one[1] == Amplitude(0.0, 0.0));

  const StateVector two = zero_state(2);
  REQUIRE(two.dimension() == 4);
  CHECK(two[0] == Amplitude(1.0));
  for (std::size_t i = 1; i < 4; ++i) CHECK(two[i] == Amplitude(0.0));

  CHECK_THROWS_AS(zero_state(0), Error);
  CHECK_THROWS_AS(zero_state(25), Error);
}

TEST_CASE("apply_gate examples") {
  const double r = 1.0 / std::sqrt(2.0);

  SUBCASE("hadamard") {
    const StateVector s = apply_gate(zero_state(1), Gate::h(0));
    CHECK(std::abs(s[0] - r) < 1e-15);
    CHECK(std::abs(s[1] - r) < 1e-15);
  }
  SUBCASE("ry(pi) maps |0> to |1>") {
    const StateVector s = apply_gate(zero_state(1), Gate::ry(0, kPi));
    CHECK(std::abs(s[0]) < 1e-15);
    CHECK(std::abs(s[1] - 1.0) < 1e-15);
  }
  SUBCASE("H twice is identity") {
    std::mt19937_64 rng(3);
    const StateVector in = random_state(1, rng);
    const StateVector out = apply_gate(apply_gate(in, Gate::h(0)), Gate::h(0));
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(out[i] - in[i]) < 1e-12);
  }
  SUBCASE("bell circuit matches the dense oracle") {
    StateVector s = apply_gate(zero_state(2), Gate::h(0));
    s = apply_gate(s, Gate::cnot(0, 1));

    const auto m = oracle::multiply(oracle::full_matrix(Gate::cnot(0, 1), 2), oracle::full_matrix(Gate::h(0), 2));
    const auto expect = oracle::apply(m, {1.0, 0.0, 0.0, 0.0});
    REQUIRE(std::abs(expect[0] - r) < 1e-15);
    REQUIRE(std::abs(expect[3] - r) < 1e-15);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(s[i] - expect[i]) < 1e-12);
  }
  SUBCASE("input is not mutated") {
    const StateVector in = zero_state(1);
    (void)apply_gate(in, Gate::x(0));
    CHECK(in[0] == Amplitude(1.0));
  }
}

TEST_CASE("apply_gate rejects bad indices") {
  const StateVector s = zero_state(2);
  CHECK_THROWS_AS(apply_gate(s, Gate::x(2)), Error);
  CHECK_THROWS_AS(apply_gate(s, Gate::x(-1)), Error);
  CHECK_THROWS_AS(apply_gate(s, Gate::cnot(1, 1)), Error);
  CHECK_THROWS_AS(apply_gate(s, Gate::cnot(0, 5)), Error);
  try {
    (void)apply_gate(s, Gate::h(3));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRange);
  }
}

TEST_CASE("state construction validates") {
  CHECK_THROWS_AS(StateVector({1.0, 0.0, 0.0}), Error);
  CHECK_THROWS_AS(StateVector({1.0, 1.0}), Error);
  CHECK_THROWS_AS(StateVector({std::nan(""), 0.0}), Error);
  CHECK_NOTHROW(StateVector({std::sqrt(1.0 / 3.0), std::sqrt(2.0 / 3.0)}));
}

TEST_CASE("probabilities") {
  const auto p = probabilities(StateVector({std::sqrt(1.0 / 3.0), std::sqrt(2.0 / 3.0)}));
  CHECK(p[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(p[0] - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(p[1] - 2.0 / 3.0) < 1e-12);

  const auto z = probabilities(zero_state(1));
  CHECK(z[0] == 1.0);
  CHECK(z[1] == 0.0);

  const auto bell = probabilities(apply_gate(apply_gate(zero_state(2), Gate::h(0)), Gate::cnot(0, 1)));
  CHECK(std::abs(bell[0] - 0.5) < 1e-12);
  CHECK(bell[1] < 1e-30);
  CHECK(bell[2] < 1e-30);
  CHECK(std::abs(bell[3] - 0.5) < 1e-12);
}

TEST_CASE("sample") {
  const MeasurementOutcome z = sample(zero_state(1), 100, 12345);
  CHECK(z.shots == 100);
  CHECK(z.count(0) == 100);
  CHECK(z.counts.size() == 1);

  const StateVector bell = apply_gate(apply_gate(zero_state(2), Gate::h(0)), Gate::cnot(0, 1));
  const MeasurementOutcome m = sample(bell, 10000, 99);
  CHECK(m.count(1) == 0);
  CHECK(m.count(2) == 0);
  CHECK(m.count(0) + m.count(3) == 10000);
  CHECK(m.count(0) > 4500);
  CHECK(m.count(3) > 4500);

  const MeasurementOutcome again = sample(bell, 10000, 99);
  CHECK(again.counts == m.counts);
  CHECK(sample(bell, 10000, 100).counts != m.counts);

  CHECK_THROWS_AS(sample(bell, 0, 1), Error);
}

TEST_CASE("z_expectation") {
  CHECK(z_expectation(zero_state(1), 0) == 1.0);
  CHECK(std::abs(z_expectation(apply_gate(zero_state(1), Gate::ry(0, kPi)), 0) + 1.0) < 1e-15);
  CHECK_THROWS_AS(z_expectation(zero_state(1), 1), Error);

  // Oracle: (H then RY(theta))|0> by explicit matrix product gives
  // P(0) = (1 - sin theta) / 2, so <Z> = -sin(theta).
  for (double theta : {-3.0, -1.2, 0.0, 0.3, 1.0, 2.5, kPi}) {
    const auto m = oracle::multiply(oracle::full_matrix(Gate::ry(0, theta), 1), oracle::full_matrix(Gate::h(0), 1));
    const auto v = oracle::apply(m, {1.0, 0.0});
    const double p0 = std::norm(v[0]);
    CHECK(std::abs(p0 - (1.0 - std::sin(theta)) / 2.0) < 1e-14);

    const StateVector s = apply_gate(apply_gate(zero_state(1), Gate::h(0)), Gate::ry(0, theta));
    CHECK(std::abs(z_expectation(s, 0) + std::sin(theta)) < 1e-12);
  }
}

TEST_CASE("property: every gate kind is unitary") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-4 * kPi, 4 * kPi);
  for (GateKind kind : {GateKind::PauliX, GateKind::PauliY, GateKind::PauliZ, GateKind::Hadamard, GateKind::RotY,
                        GateKind::PhaseR, GateKind::ControlledNot}) {
    for (int trial = 0; trial < 100; ++trial) {
      Gate g{kind, 0, kind == GateKind::ControlledNot ? 1 : -1, angle(rng)};
      if (kind == GateKind::ControlledNot) g.target = 1, g.control = 0;
      const auto m = local_matrix(g);
      const std::size_t n = kind == GateKind::ControlledNot ? 4 : 2;
      REQUIRE(m.size() == n * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          Amplitude s = 0.0;
          for (std::size_t k = 0; k < n; ++k) s += std::conj(m[k * n + i]) * m[k * n + j];
          CHECK(std::abs(s - (i == j ? 1.0 : 0.0)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("property: norm is preserved over random gate sequences") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    StateVector s = random_state(n, rng);
    const int len = 1 + static_cast<int>(rng() % 50);
    for (int i = 0; i < len; ++i) s.apply(random_gate(n, rng));
    CHECK(std::abs(s.norm_squared() - 1.0) < 1e-10);
  }
}

TEST_CASE("property: expectation equals signed probability sum") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const StateVector s = random_state(n, rng);
    const auto p = probabilities(s);
    for (int q = 0; q < n; ++q) {
      double e = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) e += ((i >> q) & 1) ? -p[i] : p[i];
      CHECK(std::abs(z_expectation(s, q) - e) < 1e-12);
    }
  }
}

TEST_CASE("property: composition agrees with dense matrices for up to 3 qubits") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 3);
    StateVector s = random_state(n, rng);
    std::vector<oracle::C> v(s.amplitudes().begin(), s.amplitudes().end());
    const int len = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < len; ++i) {
      const Gate g = random_gate(n, rng);
      s.apply(g);
      v = oracle::apply(oracle::full_matrix(g, n), v);
    }
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(s[i] - v[i]) < 1e-10);
  }
}

TEST_CASE("property: sampled frequencies track probabilities") {
  std::mt19937_64 rng(51);
  const std::uint64_t shots = 100000;
  const double tol = 5.0 / std::sqrt(static_cast<double>(shots));
  for (int trial = 0; trial < 10; ++trial) {
    const StateVector s = random_state(2, rng);
    const auto p = probabilities(s);
    const auto m = sample(s, shots, rng());
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(std::abs(static_cast<double>(m.count(i)) / shots - p[i]) < tol);
    }
  }
}
