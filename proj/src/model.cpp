#include "qnn4eo/model.hpp"

#include <cmath>

#include "qnn4eo/error.hpp"
#include "qnn4eo/layers.hpp"
#include "qnn4eo/rng.hpp"

namespace qnn4eo::nn {

std::string to_string(Variant v) { return v == Variant::Qnn4eo ? "qnn4eo" : "classical-cnn"; }

Variant parse_variant(const std::string& name) {
  if (name == "classical-cnn" || name == "cnn") return Variant::ClassicalCnn;
  if (name == "qnn4eo" || name == "qnn") return Variant::Qnn4eo;
  fail(ErrorCode::InvalidArgument, "unknown model variant '" + name + "' (expected classical-cnn or qnn4eo)");
}

namespace {

std::vector<LayerSpec> conv_branch() {
  return {
      Conv2dSpec{3, 6, 5}, ReluSpec{}, MaxPool2dSpec{},
      Conv2dSpec{6, 16, 5}, ReluSpec{}, MaxPool2dSpec{},
      Conv2dSpec{16, 32, 3}, ReluSpec{}, MaxPool2dSpec{},
      FlattenSpec{},
      LinearSpec{800, 64}, ReluSpec{},
      LinearSpec{64, 1},
  };
}

}  // namespace

ModelSpec classical_cnn_spec() {
  ModelSpec spec{Variant::ClassicalCnn, conv_branch()};
  spec.layers.push_back(LinearSpec{1, kNumClasses});
  spec.layers.push_back(LogSoftmaxSpec{});
  return spec;
}

ModelSpec qnn4eo_spec(const quantum::QNodeConfig& qnode) {
  ModelSpec spec{Variant::Qnn4eo, conv_branch()};
  spec.layers.push_back(QuantumNodeSpec{qnode});
  spec.layers.push_back(LinearSpec{1, kNumClasses});
  spec.layers.push_back(LogSoftmaxSpec{});
  return spec;
}

ModelSpec standard_spec(Variant variant, const quantum::QNodeConfig& qnode) {
  return variant == Variant::Qnn4eo ? qnn4eo_spec(qnode) : classical_cnn_spec();
}

// --- layers ----------------------------------------------------------------

class Layer {
 public:
  virtual ~Layer() = default;
  /// Per-sample output shape, or throws if `in` is not accepted.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor forward(const Tensor& x, const std::vector<Tensor>& params, bool record) = 0;
  virtual Tensor backward(const Tensor& upstream, const std::vector<Tensor>& params, std::vector<Tensor>& grads) = 0;
};

namespace {

[[noreturn]] void bad_input(const char* layer, const std::string& want, const Shape& got) {
  fail(ErrorCode::ShapeMismatch, std::string(layer) + " expects per-sample input " + want + ", got " +
                                     shape_to_string(got));
}

void kaiming_uniform(Tensor& w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
}

class ConvLayer final : public Layer {
 public:
  ConvLayer(const Conv2dSpec& s, std::size_t w_idx) : s_(s), w_(w_idx), b_(w_idx + 1) {}

  Shape output_shape(const Shape& in) const override {
    if (in.size() != 3 || in[0] != s_.in_channels) {
      bad_input("Conv2d", "[" + std::to_string(s_.in_channels) + ",H,W]", in);
    }
    return {s_.out_channels, window_output_size(in[1], s_.kernel, s_.stride, s_.padding),
            window_output_size(in[2], s_.kernel, s_.stride, s_.padding)};
  }

  Tensor forward(const Tensor& x, const std::vector<Tensor>& p, bool record) override {
    return conv2d_forward(x, p[w_], p[b_], s_.stride, s_.padding, record ? &tape_ : nullptr);
  }

  Tensor backward(const Tensor& up, const std::vector<Tensor>&, std::vector<Tensor>& g) override {
    Conv2dGrads r = conv2d_backward(tape_, up);
    g[w_] = std::move(r.grad_weights);
    g[b_] = std::move(r.grad_bias);
    return std::move(r.grad_input);
  }

 private:
  Conv2dSpec s_;
  std::size_t w_, b_;
  Conv2dTape tape_;
};

class ReluLayer final : public Layer {
 public:
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x, const std::vector<Tensor>&, bool record) override {
    return relu_forward(x, record ? &tape_ : nullptr);
  }
  Tensor backward(const Tensor& up, const std::vector<Tensor>&, std::vector<Tensor>&) override {
    return relu_backward(tape_, up);
  }

 private:
  ReluTape tape_;
};

class MaxPoolLayer final : public Layer {
 public:
  explicit MaxPoolLayer(const MaxPool2dSpec& s) : s_(s) {}
  Shape output_shape(const Shape& in) const override {
    if (in.size() != 3) bad_input("MaxPool2d", "[C,H,W]", in);
    return {in[0], window_output_size(in[1], s_.kernel, s_.stride, 0),
            window_output_size(in[2], s_.kernel, s_.stride, 0)};
  }
  Tensor forward(const Tensor& x, const std::vector<Tensor>&, bool record) override {
    return maxpool_forward(x, s_.kernel, s_.stride, record ? &tape_ : nullptr);
  }
  Tensor backward(const Tensor& up, const std::vector<Tensor>&, std::vector<Tensor>&) override {
    return maxpool_backward(tape_, up);
  }

 private:
  MaxPool2dSpec s_;
  MaxPoolTape tape_;
};

class FlattenLayer final : public Layer {
 public:
  Shape output_shape(const Shape& in) const override { return {shape_numel(in)}; }
  Tensor forward(const Tensor& x, const std::vector<Tensor>&, bool record) override {
    return flatten_forward(x, record ? &tape_ : nullptr);
  }
  Tensor backward(const Tensor& up, const std::vector<Tensor>&, std::vector<Tensor>&) override {
    return flatten_backward(tape_, up);
  }

 private:
  FlattenTape tape_;
};

class LinearLayer final : public Layer {
 public:
  LinearLayer(const LinearSpec& s, std::size_t w_idx) : s_(s), w_(w_idx), b_(w_idx + 1) {}
  Shape output_shape(const Shape& in) const override {
    if (in.size() != 1 || in[0] != s_.in_features) bad_input("Linear", "[" + std::to_string(s_.in_features) + "]", in);
    return {s_.out_features};
  }
  Tensor forward(const Tensor& x, const std::vector<Tensor>& p, bool record) override {
    return linear_forward(x, p[w_], p[b_], record ? &tape_ : nullptr);
  }
  Tensor backward(const Tensor& up, const std::vector<Tensor>&, std::vector<Tensor>& g) override {
    LinearGrads r = linear_backward(tape_, up);
    g[w_] = std::move(r.grad_weights);
    g[b_] = std::move(r.grad_bias);
    return std::move(r.grad_input);
  }

 private:
  LinearSpec s_;
  std::size_t w_, b_;
  LinearTape tape_;
};

// Applies the single-qubit node elementwise to a [N, 1] activation. In shot
// mode every element of every call draws from its own stream, derived from
// (config seed, call counter, sample index).
class QuantumLayer final : public Layer {
 public:
  explicit QuantumLayer(const QuantumNodeSpec& s) : s_(s) { s_.config.validate(); }

  Shape output_shape(const Shape& in) const override {
    if (in != Shape{1}) bad_input("QuantumNode", "[1]", in);
    return {1};
  }

  Tensor forward(const Tensor& x, const std::vector<Tensor>&, bool record) override {
    expect_rank(x, 2, "quantum node input");
    Tensor out(x.shape());
    std::vector<quantum::QNodeTape> tapes(x.size());
    const std::uint64_t call = calls_++;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const quantum::QNodeResult r = quantum::qnode_forward(x[i], element_config(call, i));
      out[i] = r.output;
      tapes[i] = r.tape;
    }
    if (record) {
      tapes_ = std::move(tapes);
      tape_call_ = call;
    }
    return out;
  }

  Tensor backward(const Tensor& up, const std::vector<Tensor>&, std::vector<Tensor>&) override {
    if (up.size() != tapes_.size()) fail(ErrorCode::ShapeMismatch, "quantum node upstream gradient size mismatch");
    Tensor grad(up.shape());
    for (std::size_t i = 0; i < up.size(); ++i) {
      grad[i] = quantum::qnode_backward(tapes_[i], up[i], element_config(tape_call_, i));
    }
    return grad;
  }

 private:
  quantum::QNodeConfig element_config(std::uint64_t call, std::size_t index) const {
    quantum::QNodeConfig c = s_.config;
    if (c.shots > 0) c.seed = derive_seed(s_.config.seed, {call, index});
    return c;
  }

  QuantumNodeSpec s_;
  std::uint64_t calls_ = 0;
  std::uint64_t tape_call_ = 0;
  std::vector<quantum::QNodeTape> tapes_;
};

class LogSoftmaxLayer final : public Layer {
 public:
  Shape output_shape(const Shape& in) const override {
    if (in.size() != 1) bad_input("LogSoftmax", "[K]", in);
    return in;
  }
  Tensor forward(const Tensor& x, const std::vector<Tensor>&, bool record) override {
    return log_softmax_forward(x, record ? &tape_ : nullptr);
  }
  Tensor backward(const Tensor& up, const std::vector<Tensor>&, std::vector<Tensor>&) override {
    return log_softmax_backward(tape_, up);
  }

 private:
  LogSoftmaxTape tape_;
};

Shape with_batch(std::size_t n, const Shape& s) {
  Shape out{n};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

// --- model -----------------------------------------------------------------

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
  if (spec_.layers.empty()) fail(ErrorCode::InvalidArgument, "model spec has no layers");
  if (!std::holds_alternative<LogSoftmaxSpec>(spec_.layers.back())) {
    fail(ErrorCode::InvalidArgument, "model spec must end with LogSoftmax");
  }

  std::size_t quantum_nodes = 0;
  std::size_t param_layer = 0;
  Shape shape = kImageShape;
  for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
    const LayerSpec& ls = spec_.layers[li];
    std::unique_ptr<Layer> layer;

    // Parameterized layers are seeded by their rank among parameterized
    // layers, so both variants initialize shared layers identically.
    auto add_params = [&](Shape w_shape, std::size_t fan_in, std::size_t out) {
      const std::size_t idx = params_.size();
      Rng rng(derive_seed(seed_, {param_layer++}));
      Tensor w(std::move(w_shape));
      kaiming_uniform(w, fan_in, rng);
      params_.push_back(std::move(w));
      params_.emplace_back(Shape{out});
      return idx;
    };

    if (const auto* c = std::get_if<Conv2dSpec>(&ls)) {
      if (c->in_channels == 0 || c->out_channels == 0) fail(ErrorCode::InvalidArgument, "conv channels must be > 0");
      layer = std::make_unique<ConvLayer>(*c, 0);
      (void)layer->output_shape(shape);
      const std::size_t idx = add_params({c->out_channels, c->in_channels, c->kernel, c->kernel},
                                         c->in_channels * c->kernel * c->kernel, c->out_channels);
      layer = std::make_unique<ConvLayer>(*c, idx);
    } else if (std::holds_alternative<ReluSpec>(ls)) {
      layer = std::make_unique<ReluLayer>();
    } else if (const auto* m = std::get_if<MaxPool2dSpec>(&ls)) {
      layer = std::make_unique<MaxPoolLayer>(*m);
    } else if (std::holds_alternative<FlattenSpec>(ls)) {
      layer = std::make_unique<FlattenLayer>();
    } else if (const auto* l = std::get_if<LinearSpec>(&ls)) {
      if (l->in_features == 0 || l->out_features == 0) fail(ErrorCode::InvalidArgument, "linear widths must be > 0");
      layer = std::make_unique<LinearLayer>(*l, 0);
      (void)layer->output_shape(shape);
      const std::size_t idx = add_params({l->out_features, l->in_features}, l->in_features, l->out_features);
      layer = std::make_unique<LinearLayer>(*l, idx);
    } else if (const auto* q = std::get_if<QuantumNodeSpec>(&ls)) {
      ++quantum_nodes;
      layer = std::make_unique<QuantumLayer>(*q);
    } else {
      if (li + 1 != spec_.layers.size()) fail(ErrorCode::InvalidArgument, "LogSoftmax must be the last layer");
      layer = std::make_unique<LogSoftmaxLayer>();
    }

    try {
      shape = layer->output_shape(shape);
    } catch (const Error& e) {
      fail(ErrorCode::ShapeMismatch, "layer " + std::to_string(li) + ": " + e.what());
    }
    shapes_.push_back(shape);
    layers_.push_back(std::move(layer));
  }

  if (shape != Shape{kNumClasses}) {
    fail(ErrorCode::ShapeMismatch, "model output must be [2], got " + shape_to_string(shape));
  }
  if (spec_.variant == Variant::Qnn4eo && quantum_nodes != 1) {
    fail(ErrorCode::InvalidArgument, "qnn4eo spec must contain exactly one quantum node");
  }
  if (spec_.variant == Variant::ClassicalCnn && quantum_nodes != 0) {
    fail(ErrorCode::InvalidArgument, "classical-cnn spec must not contain a quantum node");
  }

  grads_.reserve(params_.size());
  for (const Tensor& p : params_) grads_.push_back(Tensor::zeros_like(p));
}

Model::~Model() = default;
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;

std::size_t Model::num_layers() const noexcept { return layers_.size(); }

std::size_t Model::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const Tensor& p : params_) n += p.size();
  return n;
}

void Model::check_input(const Tensor& batch) const {
  if (batch.rank() != 4 || batch.dim(0) == 0) {
    fail(ErrorCode::ShapeMismatch, "model input must be a non-empty [N,3,64,64] batch, got " +
                                       shape_to_string(batch.shape()));
  }
  expect_shape(batch, with_batch(batch.dim(0), kImageShape), "model input");
  if (!batch.all_finite()) fail(ErrorCode::NonFinite, "model input contains non-finite values");
}

Tensor Model::forward(const Tensor& batch) {
  check_input(batch);
  return forward_range(batch, 0, layers_.size());
}

Tensor Model::forward_range(const Tensor& activation, std::size_t first, std::size_t last) {
  if (first > last || last > layers_.size()) fail(ErrorCode::OutOfRange, "invalid layer range");
  Tensor x = activation;
  for (std::size_t i = first; i < last; ++i) x = layers_[i]->forward(x, params_, false);
  return x;
}

StepResult Model::forward_backward(const Tensor& batch, std::span<const int> labels) {
  check_input(batch);
  Tensor x = batch;
  for (auto& layer : layers_) x = layer->forward(x, params_, true);

  const LossResult loss = nll_loss(x, labels);
  if (!std::isfinite(loss.loss)) fail(ErrorCode::NonFinite, "loss is not finite");

  Tensor g = loss.grad;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g, params_, grads_);

  StepResult r;
  r.loss = loss.loss;
  r.correct = count_correct(x, labels);
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(labels.size());
  return r;
}

std::vector<int> Model::predict(const Tensor& batch) { return argmax_rows(forward(batch)); }

Model build_model(const ModelSpec& spec, std::uint64_t seed) { return Model(spec, seed); }

std::vector<int> argmax_rows(const Tensor& log_probs) {
  expect_rank(log_probs, 2, "argmax_rows");
  const std::size_t n = log_probs.dim(0), k = log_probs.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (log_probs[i * k + j] > log_probs[i * k + best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::size_t count_correct(const Tensor& log_probs, std::span<const int> labels) {
  const std::vector<int> pred = argmax_rows(log_probs);
  if (labels.size() != pred.size()) fail(ErrorCode::ShapeMismatch, "label count does not match batch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  return correct;
}

}  // namespace qnn4eo::nn
