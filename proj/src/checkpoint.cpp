#include "qnn4eo/checkpoint.hpp"

#include <cstring>
#include <json.hpp>

#include "qnn4eo/error.hpp"
#include "qnn4eo/io.hpp"

namespace qnn4eo::nn {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'Q', 'N', 'N', '4', 'E', 'O', 'C', 'K'};

json layer_to_json(const LayerSpec& layer) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Conv2dSpec>) {
          return {{"kind", "conv2d"}, {"in_channels", s.in_channels}, {"out_channels", s.out_channels},
                  {"kernel", s.kernel}, {"stride", s.stride}, {"padding", s.padding}};
        } else if constexpr (std::is_same_v<T, ReluSpec>) {
          return {{"kind", "relu"}};
        } else if constexpr (std::is_same_v<T, MaxPool2dSpec>) {
          return {{"kind", "maxpool2d"}, {"kernel", s.kernel}, {"stride", s.stride}};
        } else if constexpr (std::is_same_v<T, FlattenSpec>) {
          return {{"kind", "flatten"}};
        } else if constexpr (std::is_same_v<T, LinearSpec>) {
          return {{"kind", "linear"}, {"in_features", s.in_features}, {"out_features", s.out_features}};
        } else if constexpr (std::is_same_v<T, QuantumNodeSpec>) {
          return {{"kind", "quantum_node"}, {"shots", s.config.shots}, {"shift", s.config.shift},
                  {"seed", s.config.seed}};
        } else {
          return {{"kind", "log_softmax"}};
        }
      },
      layer);
}

LayerSpec layer_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "conv2d") {
    return Conv2dSpec{j.at("in_channels"), j.at("out_channels"), j.at("kernel"), j.at("stride"), j.at("padding")};
  }
  if (kind == "relu") return ReluSpec{};
  if (kind == "maxpool2d") return MaxPool2dSpec{j.at("kernel"), j.at("stride")};
  if (kind == "flatten") return FlattenSpec{};
  if (kind == "linear") return LinearSpec{j.at("in_features"), j.at("out_features")};
  if (kind == "quantum_node") {
    quantum::QNodeConfig c;
    c.shots = j.at("shots");
    c.shift = j.at("shift");
    c.seed = j.at("seed");
    return QuantumNodeSpec{c};
  }
  if (kind == "log_softmax") return LogSoftmaxSpec{};
  fail(ErrorCode::CorruptData, "unknown layer kind '" + kind + "'");
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put(out, bits);
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes_[pos_++]) << (8 * i);
    return v;
  }

  double get_f64() {
    const auto bits = get<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return end_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) fail(ErrorCode::CorruptData, "checkpoint truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string layer_spec_to_json(const std::vector<LayerSpec>& layers) {
  json arr = json::array();
  for (const auto& l : layers) arr.push_back(layer_to_json(l));
  return arr.dump();
}

std::vector<LayerSpec> layer_spec_from_json(const std::string& text) {
  std::vector<LayerSpec> layers;
  try {
    for (const json& j : json::parse(text)) layers.push_back(layer_from_json(j));
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptData, std::string("invalid layer description: ") + e.what());
  }
  return layers;
}

Checkpoint make_checkpoint(const Model& model, std::string metadata_json) {
  return Checkpoint{model.spec(), model.seed(), model.parameters(), std::move(metadata_json)};
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  json header;
  header["variant"] = to_string(ck.spec.variant);
  header["seed"] = ck.seed;
  header["layers"] = json::parse(layer_spec_to_json(ck.spec.layers));
  header["metadata"] = json::parse(ck.metadata_json);
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.parameters.size()));
  for (const Tensor& t : ck.parameters) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    for (double v : t.data()) put_f64(out, v);
  }
  put<std::uint64_t>(out, fnv1a64(out));
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic + 8 + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    fail(ErrorCode::CorruptData, "not a checkpoint file (bad magic)");
  }
  const std::size_t body = bytes.size() - 8;
  {
    Reader tail(bytes, bytes.size());
    (void)tail.get_string(body);
    const auto stored = tail.get<std::uint64_t>();
    if (stored != fnv1a64(std::span(bytes.data(), body))) fail(ErrorCode::CorruptData, "checkpoint checksum mismatch");
  }

  Reader r(bytes, body);
  (void)r.get_string(sizeof kMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::CorruptData, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = r.get<std::uint32_t>();
  Checkpoint ck;
  try {
    const json header = json::parse(r.get_string(header_len));
    ck.spec.variant = parse_variant(header.at("variant").get<std::string>());
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.spec.layers = layer_spec_from_json(header.at("layers").dump());
    ck.metadata_json = header.value("metadata", json::object()).dump();
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptData, std::string("invalid checkpoint header: ") + e.what());
  }

  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) fail(ErrorCode::CorruptData, "implausible tensor rank in checkpoint");
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    const std::size_t n = shape_numel(shape);
    if (n > r.remaining() / 8) fail(ErrorCode::CorruptData, "checkpoint truncated");
    std::vector<double> data(n);
    for (double& v : data) v = r.get_f64();
    ck.parameters.emplace_back(std::move(shape), std::move(data));
  }
  if (r.remaining() != 0) fail(ErrorCode::CorruptData, "trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

Model instantiate(const Checkpoint& ck) {
  Model model(ck.spec, ck.seed);
  auto& params = model.parameters();
  if (params.size() != ck.parameters.size()) {
    fail(ErrorCode::CorruptData, "checkpoint holds " + std::to_string(ck.parameters.size()) +
                                     " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != ck.parameters[i].shape()) {
      fail(ErrorCode::ShapeMismatch, "checkpoint tensor " + std::to_string(i) + " has shape " +
                                       shape_to_string(ck.parameters[i].shape()) + ", model expects " +
                                       shape_to_string(params[i].shape()));
    }
    if (!ck.parameters[i].all_finite()) fail(ErrorCode::CorruptData, "checkpoint holds non-finite parameters");
    params[i] = ck.parameters[i];
  }
  return model;
}

}  // namespace qnn4eo::nn
