#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qnn4eo/error.hpp"
#include "qnn4eo/qnode.hpp"

using namespace qnn4eo;
using namespace qnn4eo::quantum;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("qnode_forward exact examples") {
  const QNodeConfig exact;
  CHECK(std::abs(qnode_forward(0.0, exact).output) < 1e-15);
  CHECK(std::abs(qnode_forward(kPi / 2, exact).output + 1.0) < 1e-12);
  CHECK(std::abs(qnode_forward(-kPi / 2, exact).output - 1.0) < 1e-12);

  const QNodeResult r = qnode_forward(0.7, exact);
  CHECK(r.tape.theta == 0.7);
  CHECK(r.tape.output == r.output);

  CHECK_THROWS_AS(qnode_forward(std::nan(""), exact), Error);
  CHECK_THROWS_AS(qnode_forward(INFINITY, exact), Error);
}

TEST_CASE("qnode_forward shot mode") {
  QNodeConfig shots;
  shots.shots = 10000;
  shots.seed = 17;
  const double out = qnode_forward(kPi / 2, shots).output;
  CHECK(std::abs(out + 1.0) <= 0.03);
  CHECK(qnode_forward(0.4, shots).output == qnode_forward(0.4, shots).output);
}

TEST_CASE("qnode_backward examples") {
  const QNodeConfig exact;
  const auto at0 = qnode_forward(0.0, exact);
  CHECK(std::abs(qnode_backward(at0.tape, 1.0, exact) + 1.0) < 1e-12);

  // central finite difference of -sin at 0 with eps = 1e-6
  const double eps = 1e-6;
  const double fd = (qnode_forward(eps, exact).output - qnode_forward(-eps, exact).output) / (2 * eps);
  CHECK(std::abs(qnode_backward(at0.tape, 1.0, exact) - fd) < 1e-6);

  CHECK(std::abs(qnode_backward(qnode_forward(kPi / 2, exact).tape, 1.0, exact)) < 1e-12);
  CHECK(qnode_backward(at0.tape, 0.0, exact) == 0.0);
}

TEST_CASE("qnode shift validation") {
  QNodeConfig bad;
  bad.shift = 0.0;
  CHECK_THROWS_AS(qnode_backward({0.0, 0.0}, 1.0, bad), Error);
  bad.shift = -0.1;
  CHECK_THROWS_AS(qnode_forward(0.0, bad), Error);
  bad.shift = kPi + 1e-9;
  CHECK_THROWS_AS(qnode_backward({0.0, 0.0}, 1.0, bad), Error);
  bad.shift = kPi;
  CHECK_NOTHROW(qnode_backward({0.0, 0.0}, 1.0, bad));
}

TEST_CASE("property: exact forward and backward identities") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  const QNodeConfig exact;
  for (int i = 0; i < 1000; ++i) {
    const double theta = u(rng);
    const auto r = qnode_forward(theta, exact);
    CHECK(std::abs(r.output + std::sin(theta)) < 1e-12);
    const double g = qnode_backward(r.tape, 1.0, exact);
    CHECK(std::abs(g + std::cos(theta)) < 1e-12);

    const double eps = 1e-6;
    const double fd = (qnode_forward(theta + eps, exact).output - qnode_forward(theta - eps, exact).output) / (2 * eps);
    CHECK(std::abs(g - fd) < 1e-6);
  }
}

TEST_CASE("property: sin-normalized shift rule is shift invariant") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const double theta = u(rng);
    const double upstream = u(rng);
    QNodeConfig base;
    const double ref = qnode_backward(qnode_forward(theta, base).tape, upstream, base);
    for (double shift : {kPi / 6, kPi / 4, kPi / 2}) {
      QNodeConfig c;
      c.shift = shift;
      CHECK(std::abs(qnode_backward(qnode_forward(theta, c).tape, upstream, c) - ref) < 1e-10);
    }
  }
}

TEST_CASE("property: shot-mode forward converges") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  int within = 0;
  for (int i = 0; i < 100; ++i) {
    QNodeConfig c;
    c.shots = 100000;
    c.seed = 1000 + static_cast<std::uint64_t>(i);
    const double theta = u(rng);
    if (std::abs(qnode_forward(theta, c).output + std::sin(theta)) <= 0.01) ++within;
  }
  CHECK(within >= 99);
}

TEST_CASE("shot-mode backward is unbiased around -cos") {
  QNodeConfig c;
  c.shots = 100000;
  c.seed = 3;
  const double g = qnode_backward(qnode_forward(0.3, c).tape, 1.0, c);
  CHECK(std::abs(g + std::cos(0.3)) < 0.02);
}
