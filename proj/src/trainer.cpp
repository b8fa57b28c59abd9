#include "qnn4eo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <json.hpp>
#include <set>

#include "qnn4eo/adam.hpp"
#include "qnn4eo/error.hpp"
#include "qnn4eo/io.hpp"
#include "qnn4eo/rng.hpp"

namespace qnn4eo::train {

using nlohmann::json;

namespace {

// Stream tags for derive_seed().
constexpr std::uint64_t kSplitStream = 0x5350;
constexpr std::uint64_t kInitStream = 0x494e;
constexpr std::uint64_t kEpochStream = 0x4550;

json config_json(const TrainConfig& c) {
  return {{"variant", nn::to_string(c.variant)},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"split_fraction", c.split_fraction},
          {"stratify", c.stratify},
          {"seed", c.seed},
          {"qnode", {{"shots", c.qnode.shots}, {"shift", c.qnode.shift}, {"seed", c.qnode.seed}}}};
}

json source_json(const DataSource& s) {
  if (s.kind == DataSource::Kind::Directory) {
    return {{"kind", "directory"}, {"root", s.root.string()}, {"class_a", s.class_a}, {"class_b", s.class_b}};
  }
  return {{"kind", "synthetic"},
          {"per_class", s.synthetic_per_class},
          {"class_a", s.synthetic_a},
          {"class_b", s.synthetic_b},
          {"seed", s.synthetic_seed}};
}

DataSource source_from(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "directory") return DataSource::directory(j.at("root").get<std::string>(), j.at("class_a"), j.at("class_b"));
  if (kind == "synthetic") return DataSource::synthetic(j.at("per_class"), j.at("seed"), j.at("class_a"), j.at("class_b"));
  fail(ErrorCode::InvalidArgument, "unknown data source kind '" + kind + "'");
}

void apply_config(const json& j, TrainConfig& c) {
  static const std::set<std::string> kKeys = {"variant", "epochs", "learning_rate", "batch_size", "split_fraction",
                                              "stratify", "seed", "qnode"};
  static const std::set<std::string> kQnodeKeys = {"shots", "shift", "seed"};
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
  if (j.contains("variant")) c.variant = nn::parse_variant(j["variant"].get<std::string>());
  if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
  if (j.contains("split_fraction")) c.split_fraction = j["split_fraction"].get<double>();
  if (j.contains("stratify")) c.stratify = j["stratify"].get<bool>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("qnode")) {
    const json& q = j["qnode"];
    for (const auto& [key, _] : q.items()) {
      if (!kQnodeKeys.count(key)) fail(ErrorCode::InvalidArgument, "unknown qnode config key '" + key + "'");
    }
    if (q.contains("shots")) c.qnode.shots = q["shots"].get<std::uint64_t>();
    if (q.contains("shift")) c.qnode.shift = q["shift"].get<double>();
    if (q.contains("seed")) c.qnode.seed = q["seed"].get<std::uint64_t>();
  }
}

template <typename F>
auto json_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string(what) + ": " + e.what());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail(ErrorCode::InvalidArgument, "learning_rate must be > 0");
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) fail(ErrorCode::InvalidArgument, "split_fraction must lie in (0, 1)");
  qnode.validate();
}

std::string to_json(const TrainConfig& config) { return config_json(config).dump(); }

TrainConfig config_from_json(const std::string& text, TrainConfig base) {
  return json_guard("invalid config", [&] {
    apply_config(json::parse(text), base);
    return base;
  });
}

DataSource DataSource::directory(std::filesystem::path root, std::string a, std::string b) {
  DataSource s;
  s.kind = Kind::Directory;
  s.root = std::move(root);
  s.class_a = std::move(a);
  s.class_b = std::move(b);
  return s;
}

DataSource DataSource::synthetic(std::size_t per_class, std::uint64_t seed, std::size_t a, std::size_t b) {
  DataSource s;
  s.kind = Kind::Synthetic;
  s.synthetic_per_class = per_class;
  s.synthetic_seed = seed;
  s.synthetic_a = a;
  s.synthetic_b = b;
  s.class_a = data::synthetic_class_name(a);
  s.class_b = data::synthetic_class_name(b);
  return s;
}

std::string to_json(const DataSource& source) { return source_json(source).dump(); }

DataSource data_source_from_json(const std::string& text) {
  return json_guard("invalid data source", [&] { return source_from(json::parse(text)); });
}

data::TaskDataset load_source(const DataSource& source) {
  if (source.kind == DataSource::Kind::Directory) return data::load_class_pair(source.root, source.class_a, source.class_b);
  return data::synthetic_task(source.synthetic_a, source.synthetic_b, source.synthetic_per_class, source.synthetic_seed);
}

std::string to_json(const RunReport& r) {
  json j = {{"schema_version", kReportSchemaVersion},
            {"task", {{"class_a", r.class_a}, {"class_b", r.class_b}}},
            {"variant", nn::to_string(r.config.variant)},
            {"config", config_json(r.config)},
            {"source", source_json(r.source)},
            {"epochs", r.epoch_train_loss.size()},
            {"epoch_train_loss", r.epoch_train_loss},
            {"epoch_train_accuracy", r.epoch_train_accuracy},
            {"validation_accuracy", r.validation_accuracy},
            {"train_size", r.train_size},
            {"validation_size", r.validation_size},
            {"wall_time_seconds", r.wall_time_seconds},
            {"fingerprint", r.fingerprint}};
  return j.dump(2);
}

RunReport report_from_json(const std::string& text) {
  return json_guard("invalid run report", [&] {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      fail(ErrorCode::CorruptData, "unsupported report schema version");
    }
    RunReport r;
    r.class_a = j.at("task").at("class_a");
    r.class_b = j.at("task").at("class_b");
    apply_config(j.at("config"), r.config);
    r.source = source_from(j.at("source"));
    r.epoch_train_loss = j.at("epoch_train_loss").get<std::vector<double>>();
    r.epoch_train_accuracy = j.at("epoch_train_accuracy").get<std::vector<double>>();
    r.validation_accuracy = j.at("validation_accuracy");
    r.train_size = j.at("train_size");
    r.validation_size = j.at("validation_size");
    r.wall_time_seconds = j.at("wall_time_seconds");
    r.fingerprint = j.at("fingerprint");
    return r;
  });
}

std::string fingerprint(const TrainConfig& config, const DataSource& source) {
  std::uint64_t h = fnv1a64(QNN4EO_VERSION_STRING);
  h = fnv1a64(config_json(config).dump(), h);
  h = fnv1a64(source_json(source).dump(), h);
  return hex64(h);
}

std::uint64_t split_seed(const TrainConfig& config) { return derive_seed(config.seed, {kSplitStream}); }
std::uint64_t init_seed(const TrainConfig& config) { return derive_seed(config.seed, {kInitStream}); }
std::uint64_t epoch_seed(const TrainConfig& config, int epoch) {
  return derive_seed(config.seed, {kEpochStream, static_cast<std::uint64_t>(epoch)});
}

double accuracy(nn::Model& model, const data::TaskDataset& dataset, std::span<const std::size_t> indices,
                std::size_t batch_size) {
  if (indices.empty()) fail(ErrorCode::InvalidArgument, "accuracy over an empty index set");
  std::size_t correct = 0;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const auto chunk = indices.subspan(start, std::min(batch_size, indices.size() - start));
    const data::Batch b = data::make_batch(dataset, chunk);
    correct += nn::count_correct(model.forward(b.images), b.labels);
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

TrainOutcome train_task(const TrainConfig& config, const data::TaskDataset& dataset, const DataSource& source,
                        const EpochCallback& on_epoch) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const data::SplitView view = data::split(dataset, config.split_fraction, split_seed(config), config.stratify);
  nn::Model model(nn::standard_spec(config.variant, config.qnode), init_seed(config));
  nn::AdamState adam = nn::AdamState::for_parameters(model.parameters(), config.learning_rate);

  RunReport report;
  report.class_a = dataset.class_a;
  report.class_b = dataset.class_b;
  report.config = config;
  report.source = source;
  report.train_size = view.train_indices.size();
  report.validation_size = view.val_indices.size();

  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order = view.train_indices;
    Rng rng(epoch_seed(config, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::size_t> chunk(order.data() + start, std::min(bs, order.size() - start));
      const data::Batch b = data::make_batch(dataset, chunk);
      nn::StepResult step;
      try {
        step = model.forward_backward(b.images, b.labels);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFinite) throw;
        fail(ErrorCode::NonFinite, "non-finite value at epoch " + std::to_string(epoch + 1) + ", batch starting at " +
                                       std::to_string(start) + ": " + e.what());
      }
      loss_sum += step.loss * static_cast<double>(chunk.size());
      correct += step.correct;
      nn::adam_step(model.parameters(), model.gradients(), adam);
    }
    const double mean_loss = loss_sum / static_cast<double>(order.size());
    report.epoch_train_loss.push_back(mean_loss);
    report.epoch_train_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(order.size()));
    if (on_epoch) on_epoch(epoch, mean_loss);
  }

  report.validation_accuracy = accuracy(model, dataset, view.val_indices);
  report.fingerprint = fingerprint(config, source);
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(report), std::move(model)};
}

std::string checkpoint_metadata(const TrainConfig& config, const DataSource& source) {
  return json{{"config", config_json(config)}, {"source", source_json(source)}}.dump();
}

EvalResult evaluate_checkpoint(const nn::Checkpoint& checkpoint, const std::optional<DataSource>& source_override) {
  TrainConfig config;
  DataSource source;
  json_guard("checkpoint metadata", [&] {
    const json meta = json::parse(checkpoint.metadata_json);
    apply_config(meta.at("config"), config);
    source = source_override ? *source_override : source_from(meta.at("source"));
    return 0;
  });
  nn::Model model = nn::instantiate(checkpoint);
  const data::TaskDataset ds = load_source(source);
  const data::SplitView view = data::split(ds, config.split_fraction, split_seed(config), config.stratify);
  return {accuracy(model, ds, view.val_indices), view.val_indices.size()};
}

void write_run(const std::filesystem::path& dir, const TrainOutcome& outcome) {
  const RunReport& r = outcome.report;
  nn::save_checkpoint(dir / "model.ckpt",
                      nn::make_checkpoint(outcome.model, checkpoint_metadata(r.config, r.source)));
  write_file_atomic(dir / "report.json", to_json(r) + "\n");
}

}  // namespace qnn4eo::train
