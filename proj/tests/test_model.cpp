#include <doctest.h>

#include <cmath>

#include "qnn4eo/adam.hpp"
#include "qnn4eo/dataset.hpp"
#include "qnn4eo/error.hpp"
#include "qnn4eo/model.hpp"
#include "support/model_gradcheck.hpp"

using namespace qnn4eo;
using namespace qnn4eo::nn;

namespace {

Tensor random_batch(std::size_t n, unsigned long long seed) {
  Tensor t({n, 3, 64, 64});
  oracle::fill_uniform(t, seed, 0.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("standard architectures build with the expected shapes") {
  Model cnn(classical_cnn_spec(), 1);
  Model qnn(qnn4eo_spec(), 1);

  const std::vector<Shape> cnn_shapes{{6, 60, 60}, {6, 60, 60}, {6, 30, 30}, {16, 26, 26}, {16, 26, 26},
                                      {16, 13, 13}, {32, 11, 11}, {32, 11, 11}, {32, 5, 5}, {800},
                                      {64},        {64},         {1},         {2},          {2}};
  CHECK(cnn.layer_shapes() == cnn_shapes);

  std::vector<Shape> qnn_shapes = cnn_shapes;
  qnn_shapes.insert(qnn_shapes.begin() + 13, Shape{1});
  CHECK(qnn.layer_shapes() == qnn_shapes);

  // Identical parameter shapes and, under a shared seed, identical values.
  REQUIRE(cnn.parameters().size() == qnn.parameters().size());
  for (std::size_t i = 0; i < cnn.parameters().size(); ++i) {
    CHECK(cnn.parameters()[i].shape() == qnn.parameters()[i].shape());
    CHECK(cnn.parameters()[i] == qnn.parameters()[i]);
  }

  const Tensor batch = random_batch(3, 1);
  CHECK(cnn.forward(batch).shape() == Shape{3, 2});
  CHECK(qnn.forward(batch).shape() == Shape{3, 2});
}

TEST_CASE("build_model validation") {
  ModelSpec bad = classical_cnn_spec();
  bad.layers[10] = LinearSpec{799, 64};
  CHECK_THROWS_AS(build_model(bad, 0), Error);

  ModelSpec qnn_missing = classical_cnn_spec();
  qnn_missing.variant = Variant::Qnn4eo;
  CHECK_THROWS_AS(build_model(qnn_missing, 0), Error);

  ModelSpec cnn_with_q = qnn4eo_spec();
  cnn_with_q.variant = Variant::ClassicalCnn;
  CHECK_THROWS_AS(build_model(cnn_with_q, 0), Error);

  // Quantum node fed by a width-64 activation.
  ModelSpec wide = qnn4eo_spec();
  wide.layers.erase(wide.layers.begin() + 12);
  CHECK_THROWS_AS(build_model(wide, 0), Error);

  ModelSpec no_head = classical_cnn_spec();
  no_head.layers.pop_back();
  CHECK_THROWS_AS(build_model(no_head, 0), Error);

  Model m(classical_cnn_spec(), 0);
  CHECK_THROWS_AS(m.forward(Tensor({1, 3, 32, 32})), Error);
  CHECK_THROWS_AS(m.forward(Tensor({0, 3, 64, 64})), Error);
}

TEST_CASE("initialization is deterministic and Kaiming-uniform") {
  Model a(qnn4eo_spec(), 42), b(qnn4eo_spec(), 42), c(qnn4eo_spec(), 43);
  CHECK(a.parameters() == b.parameters());
  CHECK(a.parameters() != c.parameters());

  // conv1 weights: fan_in = 3*5*5, biases zero.
  const double bound = std::sqrt(6.0 / 75.0);
  double max_abs = 0.0;
  for (double v : a.parameters()[0].data()) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs <= bound);
  CHECK(max_abs > 0.8 * bound);
  for (double v : a.parameters()[1].data()) CHECK(v == 0.0);
}

TEST_CASE("forward is bitwise deterministic") {
  const Tensor batch = random_batch(2, 7);
  Model a(qnn4eo_spec(), 9), b(qnn4eo_spec(), 9);
  CHECK(a.forward(batch) == b.forward(batch));
  CHECK(a.forward(batch) == a.forward(batch));
}

TEST_CASE("untrained model is at chance on random labels") {
  Model m(qnn4eo_spec(), 3);
  const Tensor batch = random_batch(200, 11);
  std::vector<int> labels(200);
  unsigned long long s = 5;
  for (int& y : labels) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    y = static_cast<int>((s >> 33) & 1);
  }
  const StepResult r = m.forward_backward(batch, labels);
  CHECK(r.accuracy > 0.38);
  CHECK(r.accuracy < 0.62);
}

TEST_CASE("model gradients match finite differences (sampled entries)") {
  const Tensor batch = random_batch(2, 21);
  const std::vector<int> labels{0, 1};
  for (Variant v : {Variant::ClassicalCnn, Variant::Qnn4eo}) {
    CAPTURE(to_string(v));
    Model m(standard_spec(v), 77);
    const auto r = oracle::check_model_gradient(m, batch, labels, 1e-5, 97);
    CAPTURE(r.worst);
    CHECK(r.checked > 500);
    CHECK(r.max_rel_error < 1e-3);
  }
}

TEST_CASE("shot-mode quantum node trains end to end") {
  quantum::QNodeConfig q;
  q.shots = 200;
  q.seed = 5;
  Model m(qnn4eo_spec(q), 4);
  const Tensor batch = random_batch(4, 31);
  const std::vector<int> labels{0, 1, 0, 1};
  const StepResult r = m.forward_backward(batch, labels);
  CHECK(std::isfinite(r.loss));
  for (const Tensor& g : m.gradients()) CHECK(g.all_finite());
}

TEST_CASE("loss decreases on a separable synthetic task") {
  const data::TaskDataset ds = data::synthetic_pair(8, 3);
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const data::Batch batch = data::make_batch(ds, idx);

  for (Variant v : {Variant::ClassicalCnn, Variant::Qnn4eo}) {
    CAPTURE(to_string(v));
    Model m(standard_spec(v), 5);
    AdamState adam = AdamState::for_parameters(m.parameters(), 1e-3);
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 50; ++step) {
      const StepResult r = m.forward_backward(batch.images, batch.labels);
      if (step == 0) first = r.loss;
      last = r.loss;
      adam_step(m.parameters(), m.gradients(), adam);
    }
    CHECK(last < first);
    CHECK(last < 0.5 * first);
  }
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    std::vector<Tensor> p{Tensor({3}, {1.0, -2.0, 3.0})};
    const std::vector<Tensor> g{Tensor({3})};
    AdamState s = AdamState::for_parameters(p, 1e-4);
    const auto before = p;
    adam_step(p, g, s);
    CHECK(p == before);
    CHECK(s.step == 1);
  }
  SUBCASE("first step moves by -lr * sign(g)") {
    // Step 1: m_hat = g and v_hat = g^2, so the update is lr * g / (|g| + eps).
    std::vector<Tensor> p{Tensor({4}, {0.0, 0.0, 0.0, 0.0})};
    const std::vector<Tensor> g{Tensor({4}, {0.5, -3.0, 1e-3, -20.0})};
    AdamState s = AdamState::for_parameters(p, 1e-4);
    adam_step(p, g, s);
    for (std::size_t i = 0; i < 4; ++i) {
      const double gi = g[0][i];
      const double expect = -1e-4 * gi / (std::abs(gi) + 1e-8);
      CHECK(std::abs(p[0][i] - expect) < 1e-18);
      CHECK(std::abs(p[0][i] + 1e-4 * (gi > 0 ? 1 : -1)) < 1e-9);
    }
    for (double v : s.second_moment[0].data()) CHECK(v >= 0.0);
  }
  SUBCASE("identical runs are bitwise identical") {
    auto run = [] {
      std::vector<Tensor> p{Tensor({2}, {0.3, -0.7})};
      AdamState s = AdamState::for_parameters(p, 1e-2);
      for (int i = 0; i < 25; ++i) {
        const std::vector<Tensor> g{Tensor({2}, {2 * p[0][0] - 1.0, std::sin(p[0][1])})};
        adam_step(p, g, s);
      }
      return p;
    };
    CHECK(run() == run());
  }
  SUBCASE("shape mismatch") {
    std::vector<Tensor> p{Tensor({2})};
    AdamState s = AdamState::for_parameters(p, 1e-3);
    CHECK_THROWS_AS(adam_step(p, {Tensor({3})}, s), Error);
    CHECK_THROWS_AS(adam_step(p, {}, s), Error);
  }
}
