#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qnn4eo/checkpoint.hpp"
#include "qnn4eo/dataset.hpp"
#include "qnn4eo/model.hpp"
#include "qnn4eo/qnode.hpp"

namespace qnn4eo::train {

inline constexpr int kReportSchemaVersion = 1;

struct TrainConfig {
  nn::Variant variant = nn::Variant::Qnn4eo;
  int epochs = 20;
  double learning_rate = 1e-4;
  int batch_size = 32;
  double split_fraction = 0.2;
  bool stratify = false;
  std::uint64_t seed = 0;
  quantum::QNodeConfig qnode;

  void validate() const;
};

std::string to_json(const TrainConfig& config);

/// Applies the keys present in `json` on top of `base`. Unknown keys are
/// rejected so a typo never silently falls back to a default.
TrainConfig config_from_json(const std::string& json, TrainConfig base = {});

/// Where a task's images come from. Directory sources name a class pair under
/// `root`; synthetic sources name two procedural class indices.
struct DataSource {
  enum class Kind { Directory, Synthetic } kind = Kind::Synthetic;
  std::filesystem::path root;
  std::string class_a;
  std::string class_b;
  std::size_t synthetic_per_class = 0;
  std::size_t synthetic_a = 0;
  std::size_t synthetic_b = 1;
  std::uint64_t synthetic_seed = 0;

  static DataSource directory(std::filesystem::path root, std::string a, std::string b);
  static DataSource synthetic(std::size_t per_class, std::uint64_t seed, std::size_t a = 0, std::size_t b = 1);
};

std::string to_json(const DataSource& source);
DataSource data_source_from_json(const std::string& json);
data::TaskDataset load_source(const DataSource& source);

struct RunReport {
  std::string class_a;
  std::string class_b;
  TrainConfig config;
  DataSource source;
  std::vector<double> epoch_train_loss;
  std::vector<double> epoch_train_accuracy;
  double validation_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  double wall_time_seconds = 0.0;
  std::string fingerprint;
};

std::string to_json(const RunReport& report);
RunReport report_from_json(const std::string& json);

/// Hash of the library version, the canonical config and the data source.
std::string fingerprint(const TrainConfig& config, const DataSource& source);

/// Seeds derived from TrainConfig::seed for each consumer.
std::uint64_t split_seed(const TrainConfig& config);
std::uint64_t init_seed(const TrainConfig& config);
std::uint64_t epoch_seed(const TrainConfig& config, int epoch);

struct TrainOutcome {
  RunReport report;
  nn::Model model;
};

/// Called after each epoch with (epoch index, mean train loss).
using EpochCallback = std::function<void(int, double)>;

/// Full training loop: per-epoch shuffle, forward/backward, Adam update; the
/// validation accuracy is measured once, after the final epoch. Throws
/// NonFinite if any batch loss is not finite.
TrainOutcome train_task(const TrainConfig& config, const data::TaskDataset& dataset, const DataSource& source,
                        const EpochCallback& on_epoch = {});

double accuracy(nn::Model& model, const data::TaskDataset& dataset, std::span<const std::size_t> indices,
                std::size_t batch_size = 64);

/// JSON stored in checkpoint metadata: {"config": ..., "source": ...}.
std::string checkpoint_metadata(const TrainConfig& config, const DataSource& source);

struct EvalResult {
  double accuracy = 0.0;
  std::size_t validation_size = 0;
};

/// Rebuilds the validation split from the checkpoint's stored config and
/// scores the model on it. `source_override` replaces the stored data source.
EvalResult evaluate_checkpoint(const nn::Checkpoint& checkpoint, const std::optional<DataSource>& source_override = {});

/// Writes report.json and model.ckpt into `dir` atomically.
void write_run(const std::filesystem::path& dir, const TrainOutcome& outcome);

}  // namespace qnn4eo::train
