#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qnn4eo/qnode.hpp"
#include "qnn4eo/tensor.hpp"

namespace qnn4eo::nn {

struct Conv2dSpec {
  std::size_t in_channels, out_channels, kernel, stride = 1, padding = 0;
  bool operator==(const Conv2dSpec&) const = default;
};
struct ReluSpec {
  bool operator==(const ReluSpec&) const = default;
};
struct MaxPool2dSpec {
  std::size_t kernel = 2, stride = 2;
  bool operator==(const MaxPool2dSpec&) const = default;
};
struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};
struct LinearSpec {
  std::size_t in_features, out_features;
  bool operator==(const LinearSpec&) const = default;
};
struct QuantumNodeSpec {
  quantum::QNodeConfig config;
  bool operator==(const QuantumNodeSpec& o) const {
    return config.shots == o.config.shots && config.shift == o.config.shift && config.seed == o.config.seed;
  }
};
struct LogSoftmaxSpec {
  bool operator==(const LogSoftmaxSpec&) const = default;
};

using LayerSpec =
    std::variant<Conv2dSpec, ReluSpec, MaxPool2dSpec, FlattenSpec, LinearSpec, QuantumNodeSpec, LogSoftmaxSpec>;

enum class Variant { ClassicalCnn, Qnn4eo };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct ModelSpec {
  Variant variant = Variant::ClassicalCnn;
  std::vector<LayerSpec> layers;
};

/// Channels-first single-image shape every model is built against.
inline const Shape kImageShape{3, 64, 64};
inline constexpr std::size_t kNumClasses = 2;

/// Three conv-relu-pool stages, Linear(800, 64)-ReLU, Linear(64, 1), then the
/// two-way head. The hybrid variant inserts the quantum node before the head.
ModelSpec classical_cnn_spec();
ModelSpec qnn4eo_spec(const quantum::QNodeConfig& qnode = {});
ModelSpec standard_spec(Variant variant, const quantum::QNodeConfig& qnode = {});

class Layer;

/// Result of one training-mode pass on a batch.
struct StepResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t correct = 0;
};

class Model {
 public:
  /// Throws ShapeMismatch/InvalidArgument if the spec does not chain on a
  /// [N, 3, 64, 64] input or violates the variant's quantum-node rule.
  Model(ModelSpec spec, std::uint64_t seed);
  ~Model();
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const noexcept { return spec_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t num_layers() const noexcept;

  /// Per-sample output shape after each layer, computed at build time.
  const std::vector<Shape>& layer_shapes() const noexcept { return shapes_; }

  std::vector<Tensor>& parameters() noexcept { return params_; }
  const std::vector<Tensor>& parameters() const noexcept { return params_; }
  const std::vector<Tensor>& gradients() const noexcept { return grads_; }
  std::size_t parameter_count() const noexcept;

  /// Log-probabilities [N, 2].
  Tensor forward(const Tensor& batch);

  /// Runs layers [first, last) on `activation`. Used to evaluate a suffix of
  /// the network from a cached intermediate.
  Tensor forward_range(const Tensor& activation, std::size_t first, std::size_t last);

  /// Forward with tapes, NLL loss, and a full backward pass; gradients()
  /// then holds d(loss)/d(parameter).
  StepResult forward_backward(const Tensor& batch, std::span<const int> labels);

  std::vector<int> predict(const Tensor& batch);

 private:
  void check_input(const Tensor& batch) const;

  ModelSpec spec_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Shape> shapes_;
  std::vector<Tensor> params_;
  std::vector<Tensor> grads_;
};

Model build_model(const ModelSpec& spec, std::uint64_t seed);

/// Row-wise argmax; the first index wins ties.
std::vector<int> argmax_rows(const Tensor& log_probs);

std::size_t count_correct(const Tensor& log_probs, std::span<const int> labels);

}  // namespace qnn4eo::nn
