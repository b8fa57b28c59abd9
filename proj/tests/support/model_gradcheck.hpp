#pragma once

// Full-model finite-difference check. For each parameterized layer the
// activation entering it is computed once, and each perturbed loss only
// re-runs the network suffix from that layer.

#include <string>
#include <variant>
#include <vector>

#include "qnn4eo/layers.hpp"
#include "qnn4eo/model.hpp"
#include "support/finite_diff.hpp"

namespace oracle {

struct ModelGradReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "tensor <i> entry <j>"
};

inline ModelGradReport check_model_gradient(qnn4eo::nn::Model& model, const qnn4eo::nn::Tensor& batch,
                                            const std::vector<int>& labels, double eps, std::size_t stride = 1) {
  using namespace qnn4eo::nn;
  (void)model.forward_backward(batch, labels);
  const std::vector<Tensor> analytic = model.gradients();

  // Layer index that owns each parameter tensor (weights then bias).
  std::vector<std::size_t> owner;
  const auto& layers = model.spec().layers;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    if (std::holds_alternative<Conv2dSpec>(layers[li]) || std::holds_alternative<LinearSpec>(layers[li])) {
      owner.push_back(li);
      owner.push_back(li);
    }
  }

  ModelGradReport report;
  auto& params = model.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const std::size_t first = owner.at(p);
    const Tensor prefix = model.forward_range(batch, 0, first);
    auto loss = [&] { return nll_loss(model.forward_range(prefix, first, model.num_layers()), labels).loss; };
    for (std::size_t i = 0; i < params[p].size(); i += stride) {
      const double num = central_difference(params[p], i, loss, eps);
      const double e = relative_error(analytic[p][i], num);
      if (e > report.max_rel_error) {
        report.max_rel_error = e;
        report.worst = "tensor " + std::to_string(p) + " entry " + std::to_string(i);
      }
      ++report.checked;
    }
  }
  return report;
}

}  // namespace oracle
