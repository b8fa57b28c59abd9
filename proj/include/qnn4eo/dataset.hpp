#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qnn4eo/tensor.hpp"

namespace qnn4eo::data {

/// A labeled binary task: label 0 is class_a, label 1 is class_b. Images are
/// [3, 64, 64] RGB tensors with values in [0, 1].
struct TaskDataset {
  std::string class_a;
  std::string class_b;
  std::vector<nn::Tensor> images;
  std::vector<int> labels;
  std::vector<std::string> sources;  // file path or synthetic tag per sample
  std::uint64_t split_seed = 0;

  std::size_t size() const noexcept { return images.size(); }
};

struct SplitView {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

/// Reads root/class_a and root/class_b (PNG or JPEG, 64x64, any channel count
/// decodable to RGB). Files are taken in lexicographic filename order.
TaskDataset load_class_pair(const std::filesystem::path& root, const std::string& class_a, const std::string& class_b);

/// Subdirectory names of root, sorted.
std::vector<std::string> list_classes(const std::filesystem::path& root);

/// Shuffles with `seed` and assigns round(fraction * n) samples to
/// validation. With `stratified`, the rounding is applied per label.
SplitView split(const TaskDataset& dataset, double fraction, std::uint64_t seed, bool stratified = false);

/// Procedural two-class task: class 0 is smooth low-frequency texture, class 1
/// is a high-contrast block pattern with a brighter base level.
TaskDataset synthetic_pair(std::size_t n_per_class, std::uint64_t seed);

/// Generalization to an indexed family of procedural classes; classes 0 and 1
/// are exactly those of synthetic_pair(). Class names are "synthetic-<k>".
TaskDataset synthetic_task(std::size_t class_a, std::size_t class_b, std::size_t n_per_class, std::uint64_t seed);
std::string synthetic_class_name(std::size_t index);

/// Per-image mean of the constructed base level, exposed for tests: every
/// synthetic class-1 image mean exceeds every class-0 image mean by at least
/// this margin.
inline constexpr double kSyntheticMeanMargin = 0.15;

/// All unordered pairs of the sorted names, lexicographic.
std::vector<std::pair<std::string, std::string>> task_matrix(std::vector<std::string> class_names);

/// As above; an empty name list means every class directory under root.
std::vector<std::pair<std::string, std::string>> task_matrix(const std::filesystem::path& root,
                                                             std::vector<std::string> class_names);

struct Batch {
  nn::Tensor images;  // [B, 3, 64, 64]
  std::vector<int> labels;
};

Batch make_batch(const TaskDataset& dataset, std::span<const std::size_t> indices);

}  // namespace qnn4eo::data
