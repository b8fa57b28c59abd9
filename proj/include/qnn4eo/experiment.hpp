#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qnn4eo/trainer.hpp"

namespace qnn4eo::train {

struct CompareRequest {
  /// Directory root; ignored in synthetic mode.
  std::filesystem::path root;
  /// Empty means every class directory under root (directory mode).
  std::vector<std::string> classes;
  /// Synthetic mode when > 0: that many procedural classes, `synthetic_per_class`
  /// images each, drawn with `synthetic_seed`.
  std::size_t synthetic_classes = 0;
  std::size_t synthetic_per_class = 0;
  std::uint64_t synthetic_seed = 0;

  TrainConfig base;
  std::filesystem::path out_dir;
  bool force = false;
  int repeats = 1;
};

struct CompareRow {
  std::string class_a;
  std::string class_b;
  std::optional<double> cnn_accuracy;
  std::optional<double> qnn_accuracy;
  std::string error;  // empty when both variants succeeded

  bool ok() const { return error.empty(); }
  std::optional<double> delta() const {
    if (!cnn_accuracy || !qnn_accuracy) return std::nullopt;
    return *qnn_accuracy - *cnn_accuracy;
  }
};

struct ComparisonTable {
  std::vector<CompareRow> rows;
  std::optional<double> cnn_average;
  std::optional<double> qnn_average;
  std::size_t reused_runs = 0;
  std::size_t trained_runs = 0;

  bool all_ok() const;
};

/// Progress hook: (class_a, class_b, variant, repeat, reused-from-disk).
using CompareProgress = std::function<void(const std::string&, const std::string&, nn::Variant, int, bool)>;

/// Trains both variants on every pair of the task matrix with identical split
/// and initialization seeds. Runs whose report.json exists with a matching
/// fingerprint are reused unless `force`. A failing task is recorded in its row
/// and the loop continues. Writes comparison.csv and comparison.json to out_dir.
ComparisonTable run_compare(const CompareRequest& request, const CompareProgress& progress = {});

std::string to_csv(const ComparisonTable& table);
std::string to_json(const ComparisonTable& table);

/// Directory holding the report and checkpoint for one run.
std::filesystem::path run_directory(const std::filesystem::path& out_dir, const std::string& class_a,
                                    const std::string& class_b, nn::Variant variant, int repeat);

}  // namespace qnn4eo::train
