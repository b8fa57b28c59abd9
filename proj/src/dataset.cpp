#include "qnn4eo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <opencv2/imgcodecs.hpp>

#include "qnn4eo/error.hpp"
#include "qnn4eo/rng.hpp"

namespace qnn4eo::data {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kSide = 64;

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

nn::Tensor read_image(const fs::path& file) {
  const cv::Mat img = cv::imread(file.string(), cv::IMREAD_COLOR);
  if (img.empty()) fail(ErrorCode::Io, "cannot decode image " + file.string());
  if (img.rows != static_cast<int>(kSide) || img.cols != static_cast<int>(kSide)) {
    fail(ErrorCode::ShapeMismatch, "image " + file.string() + " is " + std::to_string(img.cols) + "x" +
                                       std::to_string(img.rows) + ", expected 64x64");
  }
  if (img.depth() != CV_8U || img.channels() != 3) fail(ErrorCode::CorruptData, "unsupported pixel format in " + file.string());

  nn::Tensor t({3, kSide, kSide});
  for (std::size_t y = 0; y < kSide; ++y) {
    const auto* row = img.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < kSide; ++x) {
      // OpenCV decodes to BGR.
      for (std::size_t c = 0; c < 3; ++c) t[(c * kSide + y) * kSide + x] = row[x][2 - c] / 255.0;
    }
  }
  return t;
}

std::vector<fs::path> class_files(const fs::path& root, const std::string& name) {
  const fs::path dir = root / name;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::Io, "missing class directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (files.empty()) fail(ErrorCode::Io, "class directory " + dir.string() + " contains no PNG/JPEG images");
  return files;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::size_t rounded(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

// Procedural texture for class `k`. Base level and pattern are zero-mean
// around `level`; amplitudes keep every pixel inside [0, 1] without clipping.
nn::Tensor synthetic_image(std::size_t k, Rng& rng) {
  constexpr double kPi = std::numbers::pi;
  const bool blocks = (k % 2) == 1;
  const std::size_t tier = k / 2;
  const double level = (blocks ? 0.60 : 0.35) + 0.04 * static_cast<double>(tier % 3) + rng.uniform(-0.04, 0.04);
  const double noise = 0.04;

  nn::Tensor t({3, kSide, kSide});
  if (!blocks) {
    const double fx = static_cast<double>(1 + tier % 3);
    const double fy = static_cast<double>(1 + (tier + 1) % 2);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    const double amp = 0.12 + rng.uniform(0.0, 0.04);
    for (std::size_t c = 0; c < 3; ++c) {
      const double tint = 0.9 + 0.1 * static_cast<double>(c);
      for (std::size_t y = 0; y < kSide; ++y) {
        for (std::size_t x = 0; x < kSide; ++x) {
          const double u = 2.0 * kPi * static_cast<double>(x) / kSide;
          const double v = 2.0 * kPi * static_cast<double>(y) / kSide;
          const double s = std::sin(fx * u + phase) * std::cos(fy * v);
          t[(c * kSide + y) * kSide + x] = level + amp * tint * s + rng.uniform(-noise, noise);
        }
      }
    }
  } else {
    const std::size_t cell = std::size_t{8} << (tier % 2);  // 8 or 16 px, even cell count
    const double amp = 0.26 + rng.uniform(0.0, 0.04);
    const std::size_t shift = rng.below(2);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < kSide; ++y) {
        for (std::size_t x = 0; x < kSide; ++x) {
          const bool on = ((x / cell + y / cell + shift) % 2) == 0;
          t[(c * kSide + y) * kSide + x] = level + (on ? amp : -amp) + rng.uniform(-noise, noise);
        }
      }
    }
  }
  for (double& v : t.data()) v = std::clamp(v, 0.0, 1.0);
  return t;
}

}  // namespace

TaskDataset load_class_pair(const fs::path& root, const std::string& class_a, const std::string& class_b) {
  if (class_a == class_b) fail(ErrorCode::InvalidArgument, "class pair must name two different classes");
  TaskDataset ds;
  ds.class_a = class_a;
  ds.class_b = class_b;
  const std::string names[2] = {class_a, class_b};
  for (int label = 0; label < 2; ++label) {
    for (const fs::path& f : class_files(root, names[label])) {
      ds.images.push_back(read_image(f));
      ds.labels.push_back(label);
      ds.sources.push_back(f.string());
    }
  }
  return ds;
}

std::vector<std::string> list_classes(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) fail(ErrorCode::Io, "data root " + root.string() + " is not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

SplitView split(const TaskDataset& dataset, double fraction, std::uint64_t seed, bool stratified) {
  if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorCode::InvalidArgument, "split fraction must lie in (0, 1)");
  const std::size_t n = dataset.size();
  Rng rng(seed);
  SplitView view;

  if (!stratified) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    shuffle(perm, rng);
    const std::size_t n_val = rounded(fraction, n);
    view.val_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(n_val, n)));
    view.train_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(std::min(n_val, n)), perm.end());
  } else {
    for (int label = 0; label < 2; ++label) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n; ++i) {
        if (dataset.labels[i] == label) idx.push_back(i);
      }
      shuffle(idx, rng);
      const std::size_t n_val = std::min(rounded(fraction, idx.size()), idx.size());
      view.val_indices.insert(view.val_indices.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
      view.train_indices.insert(view.train_indices.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    }
  }

  if (view.val_indices.empty() || view.train_indices.empty()) {
    fail(ErrorCode::InvalidArgument, "split of " + std::to_string(n) + " samples at fraction " +
                                         std::to_string(fraction) + " leaves an empty side");
  }
  return view;
}

std::string synthetic_class_name(std::size_t index) { return "synthetic-" + std::to_string(index); }

TaskDataset synthetic_task(std::size_t class_a, std::size_t class_b, std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) fail(ErrorCode::InvalidArgument, "n_per_class must be >= 1");
  if (class_a == class_b) fail(ErrorCode::InvalidArgument, "class pair must name two different classes");
  TaskDataset ds;
  ds.class_a = synthetic_class_name(class_a);
  ds.class_b = synthetic_class_name(class_b);
  const std::size_t classes[2] = {class_a, class_b};
  for (int label = 0; label < 2; ++label) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      Rng rng(derive_seed(seed, {classes[label], i}));
      ds.images.push_back(synthetic_image(classes[label], rng));
      ds.labels.push_back(label);
      ds.sources.push_back(synthetic_class_name(classes[label]) + "#" + std::to_string(i));
    }
  }
  return ds;
}

TaskDataset synthetic_pair(std::size_t n_per_class, std::uint64_t seed) { return synthetic_task(0, 1, n_per_class, seed); }

std::vector<std::pair<std::string, std::string>> task_matrix(std::vector<std::string> class_names) {
  std::sort(class_names.begin(), class_names.end());
  class_names.erase(std::unique(class_names.begin(), class_names.end()), class_names.end());
  if (class_names.size() < 2) fail(ErrorCode::InvalidArgument, "task matrix needs at least two classes");
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    for (std::size_t j = i + 1; j < class_names.size(); ++j) pairs.emplace_back(class_names[i], class_names[j]);
  }
  return pairs;
}

std::vector<std::pair<std::string, std::string>> task_matrix(const fs::path& root, std::vector<std::string> class_names) {
  if (class_names.empty()) class_names = list_classes(root);
  return task_matrix(std::move(class_names));
}

Batch make_batch(const TaskDataset& dataset, std::span<const std::size_t> indices) {
  Batch b{nn::Tensor({indices.size(), 3, kSide, kSide}), {}};
  b.labels.reserve(indices.size());
  const std::size_t stride = 3 * kSide * kSide;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t idx = indices[i];
    if (idx >= dataset.size()) fail(ErrorCode::OutOfRange, "sample index out of range");
    const nn::Tensor& img = dataset.images[idx];
    expect_shape(img, {3, kSide, kSide}, "dataset image");
    std::copy(img.data().begin(), img.data().end(), b.images.ptr() + i * stride);
    b.labels.push_back(dataset.labels[idx]);
  }
  return b;
}

}  // namespace qnn4eo::data
