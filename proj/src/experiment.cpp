#include "qnn4eo/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>

#include "qnn4eo/error.hpp"
#include "qnn4eo/io.hpp"

namespace qnn4eo::train {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::optional<double> reuse_accuracy(const fs::path& dir, const std::string& expected_fingerprint) {
  std::error_code ec;
  if (!fs::exists(dir / "report.json", ec) || !fs::exists(dir / "model.ckpt", ec)) return std::nullopt;
  try {
    const RunReport r = report_from_json(read_file_text(dir / "report.json"));
    if (r.fingerprint != expected_fingerprint) return std::nullopt;
    return r.validation_accuracy;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

bool ComparisonTable::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const CompareRow& r) { return r.ok(); });
}

fs::path run_directory(const fs::path& out_dir, const std::string& class_a, const std::string& class_b,
                       nn::Variant variant, int repeat) {
  std::string leaf = nn::to_string(variant);
  if (repeat > 0) leaf += "-r" + std::to_string(repeat);
  return out_dir / (class_a + "__" + class_b) / leaf;
}

ComparisonTable run_compare(const CompareRequest& req, const CompareProgress& progress) {
  req.base.validate();
  if (req.repeats < 1) fail(ErrorCode::InvalidArgument, "repeats must be >= 1");
  if (req.out_dir.empty()) fail(ErrorCode::InvalidArgument, "compare needs an output directory");

  const bool synthetic = req.synthetic_classes > 0;
  std::vector<std::string> names = req.classes;
  if (synthetic) {
    if (req.synthetic_per_class < 1) fail(ErrorCode::InvalidArgument, "synthetic compare needs images per class");
    names.clear();
    for (std::size_t k = 0; k < req.synthetic_classes; ++k) names.push_back(data::synthetic_class_name(k));
  }
  const auto pairs = synthetic ? data::task_matrix(names) : data::task_matrix(req.root, names);

  auto synthetic_index = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
  };

  ComparisonTable table;
  std::vector<double> cnn_ok, qnn_ok;
  for (const auto& [a, b] : pairs) {
    CompareRow row{a, b, std::nullopt, std::nullopt, {}};
    const DataSource source = synthetic ? DataSource::synthetic(req.synthetic_per_class, req.synthetic_seed,
                                                                synthetic_index(a), synthetic_index(b))
                                        : DataSource::directory(req.root, a, b);
    std::optional<data::TaskDataset> dataset;
    std::vector<double> acc[2];
    try {
      for (int rep = 0; rep < req.repeats; ++rep) {
        for (nn::Variant v : {nn::Variant::ClassicalCnn, nn::Variant::Qnn4eo}) {
          TrainConfig cfg = req.base;
          cfg.variant = v;
          cfg.seed = req.base.seed + static_cast<std::uint64_t>(rep);
          const fs::path dir = run_directory(req.out_dir, a, b, v, rep);
          const std::string fp = fingerprint(cfg, source);

          std::optional<double> reused = req.force ? std::nullopt : reuse_accuracy(dir, fp);
          if (progress) progress(a, b, v, rep, reused.has_value());
          if (reused) {
            acc[v == nn::Variant::Qnn4eo].push_back(*reused);
            ++table.reused_runs;
            continue;
          }
          if (!dataset) dataset = load_source(source);
          const TrainOutcome outcome = train_task(cfg, *dataset, source);
          write_run(dir, outcome);
          acc[v == nn::Variant::Qnn4eo].push_back(outcome.report.validation_accuracy);
          ++table.trained_runs;
        }
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
    row.cnn_accuracy = mean(acc[0]);
    row.qnn_accuracy = mean(acc[1]);
    if (!row.ok()) {
      row.cnn_accuracy.reset();
      row.qnn_accuracy.reset();
    } else {
      cnn_ok.push_back(*row.cnn_accuracy);
      qnn_ok.push_back(*row.qnn_accuracy);
    }
    table.rows.push_back(std::move(row));
  }
  table.cnn_average = mean(cnn_ok);
  table.qnn_average = mean(qnn_ok);

  write_file_atomic(req.out_dir / "comparison.csv", to_csv(table));
  write_file_atomic(req.out_dir / "comparison.json", to_json(table) + "\n");
  return table;
}

std::string to_csv(const ComparisonTable& t) {
  std::string out = "class_a,class_b,cnn_acc,qnn_acc,delta,status\n";
  auto cell = [](const std::optional<double>& v) { return v ? fixed(*v, 6) : std::string(); };
  for (const CompareRow& r : t.rows) {
    out += r.class_a + "," + r.class_b + "," + cell(r.cnn_accuracy) + "," + cell(r.qnn_accuracy) + "," +
           cell(r.delta()) + "," + (r.ok() ? "ok" : "error") + "\n";
  }
  return out;
}

std::string to_json(const ComparisonTable& t) {
  json rows = json::array();
  for (const CompareRow& r : t.rows) {
    rows.push_back({{"class_a", r.class_a},
                    {"class_b", r.class_b},
                    {"cnn_acc", optional_json(r.cnn_accuracy)},
                    {"qnn_acc", optional_json(r.qnn_accuracy)},
                    {"delta", optional_json(r.delta())},
                    {"status", r.ok() ? "ok" : "error"},
                    {"error", r.error}});
  }
  json j = {{"schema_version", kReportSchemaVersion},
            {"rows", rows},
            {"cnn_avg", optional_json(t.cnn_average)},
            {"qnn_avg", optional_json(t.qnn_average)},
            {"cnn_avg_percent", t.cnn_average ? json(fixed(*t.cnn_average * 100.0, 2)) : json(nullptr)},
            {"qnn_avg_percent", t.qnn_average ? json(fixed(*t.qnn_average * 100.0, 2)) : json(nullptr)}};
  return j.dump(2);
}

}  // namespace qnn4eo::train
