// Command-line front end: train, eval and compare. Uses the C API only.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qnn4eo/qnn4eo.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct ApiError {
  qnn4eo_status status;
  std::string message;
};

void check(qnn4eo_status s) {
  if (s != QNN4EO_OK) throw ApiError{s, qnn4eo_last_error()};
}

struct StringDeleter {
  void operator()(char* s) const { qnn4eo_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct DatasetDeleter {
  void operator()(qnn4eo_dataset* d) const { qnn4eo_dataset_free(d); }
};
struct RunDeleter {
  void operator()(qnn4eo_run* r) const { qnn4eo_run_free(r); }
};
struct CheckpointDeleter {
  void operator()(qnn4eo_checkpoint* c) const { qnn4eo_checkpoint_free(c); }
};

// Flags shared by train and compare. Each field is applied only when the flag
// was given, so precedence is defaults < --config file < flags.
struct ConfigFlags {
  std::string config_file;
  std::string variant;
  int epochs = 0;
  double learning_rate = 0.0;
  int batch_size = 0;
  double split = 0.0;
  bool stratify = false;
  std::uint64_t seed = 0;
  std::uint64_t shots = 0;
  double shift = 0.0;
  std::uint64_t qnode_seed = 0;

  CLI::Option* config_opt = nullptr;
  CLI::Option* variant_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
  CLI::Option* split_opt = nullptr;
  CLI::Option* stratify_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* shots_opt = nullptr;
  CLI::Option* shift_opt = nullptr;
  CLI::Option* qseed_opt = nullptr;

  void add_to(CLI::App& app, bool with_variant) {
    config_opt = app.add_option("--config", config_file, "JSON config file overriding defaults")->check(CLI::ExistingFile);
    if (with_variant) {
      variant_opt = app.add_option("--variant", variant, "Model variant")
                        ->check(CLI::IsMember({"classical-cnn", "qnn4eo", "cnn", "qnn"}));
    }
    epochs_opt = app.add_option("--epochs", epochs, "Training epochs (default 20)");
    lr_opt = app.add_option("--lr,--learning-rate", learning_rate, "Adam learning rate (default 1e-4)");
    batch_opt = app.add_option("--batch-size", batch_size, "Mini-batch size (default 32)");
    split_opt = app.add_option("--split", split, "Validation fraction (default 0.2)");
    stratify_opt = app.add_flag("--stratify", stratify, "Stratify the validation split by class");
    seed_opt = app.add_option("--seed", seed, "Seed for split, initialization and shuffling");
    shots_opt = app.add_option("--shots", shots, "Quantum node shots (0 = exact expectation)");
    shift_opt = app.add_option("--shift", shift, "Quantum node gradient shift in radians (default pi/2)");
    qseed_opt = app.add_option("--qnode-seed", qnode_seed, "Quantum node sampling seed");
  }

  qnn4eo_train_config resolve() const {
    qnn4eo_train_config c;
    qnn4eo_train_config_default(&c);
    if (config_opt && config_opt->count()) {
      std::ifstream in(config_file);
      std::stringstream ss;
      ss << in.rdbuf();
      check(qnn4eo_train_config_apply_json(ss.str().c_str(), &c));
    }
    if (variant_opt && variant_opt->count()) {
      c.variant = (variant == "qnn4eo" || variant == "qnn") ? QNN4EO_QNN4EO : QNN4EO_CLASSICAL_CNN;
    }
    if (epochs_opt->count()) c.epochs = epochs;
    if (lr_opt->count()) c.learning_rate = learning_rate;
    if (batch_opt->count()) c.batch_size = batch_size;
    if (split_opt->count()) c.split_fraction = split;
    if (stratify_opt->count()) c.stratify = stratify ? 1 : 0;
    if (seed_opt->count()) c.seed = seed;
    if (shots_opt->count()) c.qnode.shots = shots;
    if (shift_opt->count()) c.qnode.shift = shift;
    if (qseed_opt->count()) c.qnode.seed = qnode_seed;
    return c;
  }
};

struct DataFlags {
  std::string root;
  std::vector<std::string> classes;
  std::size_t synthetic = 0;
  std::optional<std::uint64_t> data_seed;

  CLI::Option* root_opt = nullptr;
  CLI::Option* synthetic_opt = nullptr;

  void add_to(CLI::App& app, const char* classes_help) {
    root_opt = app.add_option("--data", root, "Root directory with one subdirectory per class")->check(CLI::ExistingDirectory);
    app.add_option("--classes", classes, classes_help)->delimiter(',');
    synthetic_opt = app.add_option("--synthetic", synthetic, "Use N procedural images per class instead of --data")
                        ->check(CLI::PositiveNumber);
    app.add_option("--data-seed", data_seed, "Seed for synthetic images (default: --seed)");
    root_opt->excludes(synthetic_opt);
  }
  bool given() const { return root_opt->count() || synthetic_opt->count(); }
};

std::string variant_name(qnn4eo_variant v) { return v == QNN4EO_QNN4EO ? "qnn4eo" : "classical-cnn"; }

std::unique_ptr<qnn4eo_dataset, DatasetDeleter> open_pair(const DataFlags& d, std::uint64_t default_seed) {
  qnn4eo_dataset* ds = nullptr;
  if (d.synthetic > 0) {
    check(qnn4eo_dataset_synthetic(0, 1, d.synthetic, d.data_seed.value_or(default_seed), &ds));
  } else {
    if (d.classes.size() != 2) throw CLI::ValidationError("--classes", "needs exactly two class names, e.g. Forest,Industrial");
    check(qnn4eo_dataset_load_pair(d.root.c_str(), d.classes[0].c_str(), d.classes[1].c_str(), &ds));
  }
  return std::unique_ptr<qnn4eo_dataset, DatasetDeleter>(ds);
}

void print_epoch(int epoch, double loss, void*) { std::fprintf(stderr, "epoch %3d  train_loss %.6f\n", epoch + 1, loss); }

int cmd_train(const ConfigFlags& cf, const DataFlags& df, const std::string& out_dir) {
  const qnn4eo_train_config cfg = cf.resolve();
  check(qnn4eo_train_config_validate(&cfg));
  if (!df.given()) throw CLI::ValidationError("train", "one of --data or --synthetic is required");

  auto ds = open_pair(df, cfg.seed);
  qnn4eo_run* raw = nullptr;
  check(qnn4eo_train(ds.get(), &cfg, print_epoch, nullptr, &raw));
  std::unique_ptr<qnn4eo_run, RunDeleter> run(raw);

  check(qnn4eo_run_write(run.get(), out_dir.c_str()));
  char* json = nullptr;
  check(qnn4eo_run_report_json(run.get(), &json));
  OwnedString report(json);
  std::cout << report.get() << "\n";

  double acc = 0.0;
  check(qnn4eo_run_validation_accuracy(run.get(), &acc));
  std::fprintf(stderr, "%s validation accuracy %.4f (written to %s)\n", variant_name(cfg.variant).c_str(), acc,
               out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const DataFlags& df) {
  qnn4eo_checkpoint* raw = nullptr;
  check(qnn4eo_checkpoint_load(checkpoint_path.c_str(), &raw));
  std::unique_ptr<qnn4eo_checkpoint, CheckpointDeleter> ck(raw);

  std::unique_ptr<qnn4eo_dataset, DatasetDeleter> ds;
  if (df.given()) {
    char* meta_raw = nullptr;
    check(qnn4eo_checkpoint_metadata_json(ck.get(), &meta_raw));
    OwnedString meta(meta_raw);
    const auto m = nlohmann::json::parse(meta.get());
    DataFlags d = df;
    if (d.synthetic == 0 && d.classes.empty()) {
      const auto& src = m.at("source");
      d.classes = {src.at("class_a").get<std::string>(), src.at("class_b").get<std::string>()};
    }
    ds = open_pair(d, m.at("config").at("seed").get<std::uint64_t>());
  }

  double acc = 0.0;
  std::size_t n = 0;
  check(qnn4eo_checkpoint_evaluate(ck.get(), ds.get(), &acc, &n));
  std::cout << nlohmann::json{{"checkpoint", checkpoint_path}, {"validation_accuracy", acc}, {"validation_size", n}}.dump()
            << "\n";
  return 0;
}

void print_progress(const char* a, const char* b, qnn4eo_variant v, int repeat, int reused, void*) {
  std::fprintf(stderr, "%s %s vs %s [%s, repeat %d]\n", reused ? "reuse" : "train", a, b, variant_name(v).c_str(), repeat);
}

int cmd_compare(const ConfigFlags& cf, const DataFlags& df, std::size_t synthetic_classes, const std::string& out_dir,
                bool force, int repeats) {
  const qnn4eo_train_config cfg = cf.resolve();
  check(qnn4eo_train_config_validate(&cfg));
  if (!df.given()) throw CLI::ValidationError("compare", "one of --data or --synthetic is required");

  std::vector<const char*> names;
  for (const auto& c : df.classes) names.push_back(c.c_str());

  qnn4eo_compare_request req{};
  req.root = df.synthetic > 0 ? nullptr : df.root.c_str();
  req.classes = names.empty() ? nullptr : names.data();
  req.num_classes = names.size();
  req.synthetic_classes = df.synthetic > 0 ? synthetic_classes : 0;
  req.synthetic_per_class = df.synthetic;
  req.synthetic_seed = df.data_seed.value_or(cfg.seed);
  req.base = cfg;
  req.out_dir = out_dir.c_str();
  req.force = force ? 1 : 0;
  req.repeats = repeats;

  char* raw = nullptr;
  int all_ok = 0;
  check(qnn4eo_compare(&req, print_progress, nullptr, &raw, &all_ok));
  OwnedString table(raw);
  const auto t = nlohmann::json::parse(table.get());

  std::printf("%-24s %-24s %9s %9s %9s\n", "class_a", "class_b", "cnn_acc", "qnn_acc", "delta");
  for (const auto& row : t.at("rows")) {
    if (row.at("status") == "ok") {
      std::printf("%-24s %-24s %9.4f %9.4f %+9.4f\n", row.at("class_a").get<std::string>().c_str(),
                  row.at("class_b").get<std::string>().c_str(), row.at("cnn_acc").get<double>(),
                  row.at("qnn_acc").get<double>(), row.at("delta").get<double>());
    } else {
      std::printf("%-24s %-24s   error: %s\n", row.at("class_a").get<std::string>().c_str(),
                  row.at("class_b").get<std::string>().c_str(), row.at("error").get<std::string>().c_str());
    }
  }
  auto avg = [&](const char* key) {
    return t.at(key).is_null() ? std::string("n/a") : t.at(key).get<std::string>() + "%";
  };
  std::printf("average accuracy: cnn %s  qnn4eo %s\n", avg("cnn_avg_percent").c_str(), avg("qnn_avg_percent").c_str());
  std::printf("table: %s/comparison.csv, %s/comparison.json\n", out_dir.c_str(), out_dir.c_str());
  return all_ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid quantum-classical scene classification: train, evaluate and compare"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qnn4eo_version()));

  auto* train = app.add_subcommand("train", "Train one model variant on one class pair");
  ConfigFlags train_cfg;
  DataFlags train_data;
  std::string train_out = "runs/train";
  train_cfg.add_to(*train, true);
  train_data.add_to(*train, "The two classes of the task, e.g. Forest,Industrial");
  train->add_option("--out", train_out, "Directory for report.json and model.ckpt");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on its validation split");
  std::string checkpoint;
  DataFlags eval_data;
  eval->add_option("checkpoint,--checkpoint", checkpoint, "Checkpoint written by train")->required()->check(CLI::ExistingFile);
  eval_data.add_to(*eval, "Override the class pair recorded in the checkpoint");

  auto* compare = app.add_subcommand("compare", "Train both variants on every class pair and tabulate accuracies");
  ConfigFlags compare_cfg;
  DataFlags compare_data;
  std::string compare_out = "runs/compare";
  std::size_t synthetic_classes = 3;
  bool force = false;
  int repeats = 1;
  compare_cfg.add_to(*compare, false);
  compare_data.add_to(*compare, "Subset of class directories (default: all)");
  compare->add_option("--synthetic-classes", synthetic_classes, "Number of procedural classes with --synthetic")
      ->check(CLI::Range(2, 64));
  compare->add_option("--out", compare_out, "Directory for per-task runs and the comparison table");
  compare->add_flag("--force", force, "Retrain tasks that already have a valid report");
  compare->add_option("--repeats", repeats, "Average each accuracy over k seeds (seed, seed+1, ...)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
    if (*train) return cmd_train(train_cfg, train_data, train_out);
    if (*eval) return cmd_eval(checkpoint, eval_data);
    if (*compare) return cmd_compare(compare_cfg, compare_data, synthetic_classes, compare_out, force, repeats);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const ApiError& e) {
    std::fprintf(stderr, "error (%s): %s\n", qnn4eo_status_name(e.status), e.message.c_str());
    return e.status == QNN4EO_INVALID_ARGUMENT ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return 0;
}
