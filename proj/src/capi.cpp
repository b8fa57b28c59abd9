#include "qnn4eo/qnn4eo.h"

#include <cstring>
#include <json.hpp>
#include <new>
#include <optional>
#include <string>

#include "qnn4eo/checkpoint.hpp"
#include "qnn4eo/error.hpp"
#include "qnn4eo/experiment.hpp"
#include "qnn4eo/qnode.hpp"
#include "qnn4eo/statevector.hpp"
#include "qnn4eo/trainer.hpp"

struct qnn4eo_state {
  qnn4eo::quantum::StateVector value;
};

struct qnn4eo_dataset {
  qnn4eo::data::TaskDataset data;
  qnn4eo::train::DataSource source;
};

struct qnn4eo_run {
  qnn4eo::train::TrainOutcome outcome;
};

struct qnn4eo_checkpoint {
  qnn4eo::nn::Checkpoint value;
};

namespace {

using namespace qnn4eo;

thread_local std::string g_last_error;

qnn4eo_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return QNN4EO_INVALID_ARGUMENT;
    case ErrorCode::OutOfRange: return QNN4EO_OUT_OF_RANGE;
    case ErrorCode::ShapeMismatch: return QNN4EO_SHAPE_MISMATCH;
    case ErrorCode::Io: return QNN4EO_IO_ERROR;
    case ErrorCode::CorruptData: return QNN4EO_CORRUPT_DATA;
    case ErrorCode::NonFinite: return QNN4EO_NON_FINITE;
    case ErrorCode::Internal: return QNN4EO_INTERNAL;
  }
  return QNN4EO_INTERNAL;
}

// Runs `f`, translating exceptions into a status and the thread's last error.
template <typename F>
qnn4eo_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return QNN4EO_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return QNN4EO_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QNN4EO_INTERNAL;
  }
}

template <typename T>
void require(const T* p, const char* name) {
  if (p == nullptr) fail(ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

quantum::Gate to_gate(const qnn4eo_gate& g) {
  using quantum::GateKind;
  GateKind kind;
  switch (g.kind) {
    case QNN4EO_GATE_X: kind = GateKind::PauliX; break;
    case QNN4EO_GATE_Y: kind = GateKind::PauliY; break;
    case QNN4EO_GATE_Z: kind = GateKind::PauliZ; break;
    case QNN4EO_GATE_H: kind = GateKind::Hadamard; break;
    case QNN4EO_GATE_RY: kind = GateKind::RotY; break;
    case QNN4EO_GATE_PHASE: kind = GateKind::PhaseR; break;
    case QNN4EO_GATE_CNOT: kind = GateKind::ControlledNot; break;
    default: fail(ErrorCode::InvalidArgument, "unknown gate kind " + std::to_string(static_cast<int>(g.kind)));
  }
  return {kind, g.target, kind == GateKind::ControlledNot ? g.control : -1, g.angle};
}

void check_dimension(const quantum::StateVector& s, size_t dimension) {
  if (dimension != s.dimension()) {
    fail(ErrorCode::ShapeMismatch, "buffer holds " + std::to_string(dimension) + " entries, state has " +
                                       std::to_string(s.dimension()));
  }
}

quantum::QNodeConfig to_qnode(const qnn4eo_qnode_config& c) { return {c.shots, c.shift, c.seed}; }
qnn4eo_qnode_config from_qnode(const quantum::QNodeConfig& c) { return {c.shots, c.shift, c.seed}; }

train::TrainConfig to_config(const qnn4eo_train_config& c) {
  if (c.variant != QNN4EO_CLASSICAL_CNN && c.variant != QNN4EO_QNN4EO) {
    fail(ErrorCode::InvalidArgument, "unknown model variant");
  }
  train::TrainConfig t;
  t.variant = c.variant == QNN4EO_QNN4EO ? nn::Variant::Qnn4eo : nn::Variant::ClassicalCnn;
  t.epochs = c.epochs;
  t.learning_rate = c.learning_rate;
  t.batch_size = c.batch_size;
  t.split_fraction = c.split_fraction;
  t.stratify = c.stratify != 0;
  t.seed = c.seed;
  t.qnode = to_qnode(c.qnode);
  return t;
}

qnn4eo_train_config from_config(const train::TrainConfig& t) {
  qnn4eo_train_config c{};
  c.variant = t.variant == nn::Variant::Qnn4eo ? QNN4EO_QNN4EO : QNN4EO_CLASSICAL_CNN;
  c.epochs = t.epochs;
  c.learning_rate = t.learning_rate;
  c.batch_size = t.batch_size;
  c.split_fraction = t.split_fraction;
  c.stratify = t.stratify ? 1 : 0;
  c.seed = t.seed;
  c.qnode = from_qnode(t.qnode);
  return c;
}

std::vector<std::string> string_list(const char* const* items, size_t n) {
  std::vector<std::string> out;
  if (n > 0) require(items, "classes");
  for (size_t i = 0; i < n; ++i) {
    require(items[i], "class name");
    out.emplace_back(items[i]);
  }
  return out;
}

}  // namespace

extern "C" {

const char* qnn4eo_version(void) { return QNN4EO_VERSION_STRING; }

const char* qnn4eo_status_name(qnn4eo_status status) {
  switch (status) {
    case QNN4EO_OK: return "ok";
    case QNN4EO_INVALID_ARGUMENT: return "invalid argument";
    case QNN4EO_OUT_OF_RANGE: return "out of range";
    case QNN4EO_SHAPE_MISMATCH: return "shape mismatch";
    case QNN4EO_IO_ERROR: return "i/o error";
    case QNN4EO_CORRUPT_DATA: return "corrupt data";
    case QNN4EO_NON_FINITE: return "non-finite value";
    case QNN4EO_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* qnn4eo_last_error(void) { return g_last_error.c_str(); }

void qnn4eo_string_free(char* s) { std::free(s); }

// --- statevector -----------------------------------------------------------

qnn4eo_status qnn4eo_state_zero(int num_qubits, qnn4eo_state** out) {
  return guarded([&] {
    require(out, "out");
    *out = new qnn4eo_state{quantum::zero_state(num_qubits)};
  });
}

qnn4eo_status qnn4eo_state_from_amplitudes(const double* amplitudes, size_t dimension, qnn4eo_state** out) {
  return guarded([&] {
    require(out, "out");
    require(amplitudes, "amplitudes");
    std::vector<quantum::Amplitude> amps(dimension);
    for (size_t i = 0; i < dimension; ++i) amps[i] = {amplitudes[2 * i], amplitudes[2 * i + 1]};
    *out = new qnn4eo_state{quantum::StateVector(std::move(amps))};
  });
}

void qnn4eo_state_free(qnn4eo_state* state) { delete state; }

qnn4eo_status qnn4eo_state_num_qubits(const qnn4eo_state* state, int* out) {
  return guarded([&] {
    require(state, "state");
    require(out, "out");
    *out = state->value.num_qubits();
  });
}

qnn4eo_status qnn4eo_state_dimension(const qnn4eo_state* state, size_t* out) {
  return guarded([&] {
    require(state, "state");
    require(out, "out");
    *out = state->value.dimension();
  });
}

qnn4eo_status qnn4eo_state_apply(const qnn4eo_state* state, const qnn4eo_gate* gate, qnn4eo_state** out) {
  return guarded([&] {
    require(state, "state");
    require(gate, "gate");
    require(out, "out");
    *out = new qnn4eo_state{quantum::apply_gate(state->value, to_gate(*gate))};
  });
}

qnn4eo_status qnn4eo_state_apply_inplace(qnn4eo_state* state, const qnn4eo_gate* gate) {
  return guarded([&] {
    require(state, "state");
    require(gate, "gate");
    state->value.apply(to_gate(*gate));
  });
}

qnn4eo_status qnn4eo_state_amplitudes(const qnn4eo_state* state, double* out, size_t dimension) {
  return guarded([&] {
    require(state, "state");
    require(out, "out");
    check_dimension(state->value, dimension);
    const auto amps = state->value.amplitudes();
    for (size_t i = 0; i < amps.size(); ++i) {
      out[2 * i] = amps[i].real();
      out[2 * i + 1] = amps[i].imag();
    }
  });
}

qnn4eo_status qnn4eo_state_probabilities(const qnn4eo_state* state, double* out, size_t dimension) {
  return guarded([&] {
    require(state, "state");
    require(out, "out");
    check_dimension(state->value, dimension);
    const auto p = quantum::probabilities(state->value);
    std::copy(p.begin(), p.end(), out);
  });
}

qnn4eo_status qnn4eo_state_sample(const qnn4eo_state* state, uint64_t shots, uint64_t seed, uint64_t* out,
                                  size_t dimension) {
  return guarded([&] {
    require(state, "state");
    require(out, "out");
    check_dimension(state->value, dimension);
    const auto m = quantum::sample(state->value, shots, seed);
    std::fill(out, out + dimension, 0);
    for (const auto& [basis, count] : m.counts) out[basis] = count;
  });
}

qnn4eo_status qnn4eo_state_z_expectation(const qnn4eo_state* state, int qubit, double* out) {
  return guarded([&] {
    require(state, "state");
    require(out, "out");
    *out = quantum::z_expectation(state->value, qubit);
  });
}

// --- qnode -------------------------------------------------------------------

void qnn4eo_qnode_config_default(qnn4eo_qnode_config* config) {
  if (config) *config = from_qnode(quantum::QNodeConfig{});
}

qnn4eo_status qnn4eo_qnode_forward(double theta, const qnn4eo_qnode_config* config, double* output) {
  return guarded([&] {
    require(config, "config");
    require(output, "output");
    *output = quantum::qnode_forward(theta, to_qnode(*config)).output;
  });
}

qnn4eo_status qnn4eo_qnode_backward(double theta, double upstream_grad, const qnn4eo_qnode_config* config,
                                    double* grad) {
  return guarded([&] {
    require(config, "config");
    require(grad, "grad");
    const quantum::QNodeConfig c = to_qnode(*config);
    const auto fwd = quantum::qnode_forward(theta, c);
    *grad = quantum::qnode_backward(fwd.tape, upstream_grad, c);
  });
}

// --- config ------------------------------------------------------------------

void qnn4eo_train_config_default(qnn4eo_train_config* config) {
  if (config) *config = from_config(train::TrainConfig{});
}

qnn4eo_status qnn4eo_train_config_apply_json(const char* json, qnn4eo_train_config* config) {
  return guarded([&] {
    require(json, "json");
    require(config, "config");
    *config = from_config(train::config_from_json(json, to_config(*config)));
  });
}

qnn4eo_status qnn4eo_train_config_validate(const qnn4eo_train_config* config) {
  return guarded([&] {
    require(config, "config");
    to_config(*config).validate();
  });
}

qnn4eo_status qnn4eo_train_config_to_json(const qnn4eo_train_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = dup_string(train::to_json(to_config(*config)));
  });
}

// --- datasets ----------------------------------------------------------------

qnn4eo_status qnn4eo_dataset_load_pair(const char* root, const char* class_a, const char* class_b,
                                       qnn4eo_dataset** out) {
  return guarded([&] {
    require(root, "root");
    require(class_a, "class_a");
    require(class_b, "class_b");
    require(out, "out");
    auto source = train::DataSource::directory(root, class_a, class_b);
    *out = new qnn4eo_dataset{train::load_source(source), source};
  });
}

qnn4eo_status qnn4eo_dataset_synthetic(size_t class_a, size_t class_b, size_t n_per_class, uint64_t seed,
                                       qnn4eo_dataset** out) {
  return guarded([&] {
    require(out, "out");
    auto source = train::DataSource::synthetic(n_per_class, seed, class_a, class_b);
    *out = new qnn4eo_dataset{train::load_source(source), source};
  });
}

void qnn4eo_dataset_free(qnn4eo_dataset* dataset) { delete dataset; }

qnn4eo_status qnn4eo_dataset_size(const qnn4eo_dataset* dataset, size_t* out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    *out = dataset->data.size();
  });
}

qnn4eo_status qnn4eo_dataset_labels(const qnn4eo_dataset* dataset, int* out, size_t count) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    if (count != dataset->data.size()) fail(ErrorCode::ShapeMismatch, "label buffer size does not match dataset");
    std::copy(dataset->data.labels.begin(), dataset->data.labels.end(), out);
  });
}

qnn4eo_status qnn4eo_task_matrix(const char* root, const char* const* classes, size_t num_classes, char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    auto names = string_list(classes, num_classes);
    const auto pairs = root ? data::task_matrix(root, std::move(names)) : data::task_matrix(std::move(names));
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [a, b] : pairs) j.push_back({a, b});
    *out_json = dup_string(j.dump());
  });
}

// --- runs ----------------------------------------------------------------------

qnn4eo_status qnn4eo_train(const qnn4eo_dataset* dataset, const qnn4eo_train_config* config,
                           qnn4eo_epoch_callback on_epoch, void* user, qnn4eo_run** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(config, "config");
    require(out, "out");
    train::EpochCallback cb;
    if (on_epoch) cb = [on_epoch, user](int epoch, double loss) { on_epoch(epoch, loss, user); };
    *out = new qnn4eo_run{train::train_task(to_config(*config), dataset->data, dataset->source, cb)};
  });
}

void qnn4eo_run_free(qnn4eo_run* run) { delete run; }

qnn4eo_status qnn4eo_run_validation_accuracy(const qnn4eo_run* run, double* out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = run->outcome.report.validation_accuracy;
  });
}

qnn4eo_status qnn4eo_run_report_json(const qnn4eo_run* run, char** out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = dup_string(train::to_json(run->outcome.report));
  });
}

qnn4eo_status qnn4eo_run_write(const qnn4eo_run* run, const char* dir) {
  return guarded([&] {
    require(run, "run");
    require(dir, "dir");
    train::write_run(dir, run->outcome);
  });
}

// --- checkpoints -----------------------------------------------------------

qnn4eo_status qnn4eo_checkpoint_load(const char* path, qnn4eo_checkpoint** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new qnn4eo_checkpoint{nn::load_checkpoint(path)};
  });
}

void qnn4eo_checkpoint_free(qnn4eo_checkpoint* checkpoint) { delete checkpoint; }

qnn4eo_status qnn4eo_checkpoint_evaluate(const qnn4eo_checkpoint* checkpoint, const qnn4eo_dataset* dataset,
                                         double* accuracy, size_t* validation_size) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(accuracy, "accuracy");
    std::optional<train::DataSource> source;
    if (dataset) source = dataset->source;
    const train::EvalResult r = train::evaluate_checkpoint(checkpoint->value, source);
    *accuracy = r.accuracy;
    if (validation_size) *validation_size = r.validation_size;
  });
}

qnn4eo_status qnn4eo_checkpoint_metadata_json(const qnn4eo_checkpoint* checkpoint, char** out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    *out = dup_string(checkpoint->value.metadata_json);
  });
}

// --- compare ---------------------------------------------------------------

qnn4eo_status qnn4eo_compare(const qnn4eo_compare_request* request, qnn4eo_compare_callback progress, void* user,
                             char** table_json, int* all_ok) {
  return guarded([&] {
    require(request, "request");
    require(table_json, "table_json");
    require(request->out_dir, "out_dir");
    train::CompareRequest req;
    if (request->root) req.root = request->root;
    req.classes = string_list(request->classes, request->num_classes);
    req.synthetic_classes = request->synthetic_classes;
    req.synthetic_per_class = request->synthetic_per_class;
    req.synthetic_seed = request->synthetic_seed;
    req.base = to_config(request->base);
    req.out_dir = request->out_dir;
    req.force = request->force != 0;
    req.repeats = request->repeats;
    if (req.synthetic_classes == 0 && req.root.empty()) fail(ErrorCode::InvalidArgument, "compare needs a data root");

    train::CompareProgress cb;
    if (progress) {
      cb = [progress, user](const std::string& a, const std::string& b, nn::Variant v, int rep, bool reused) {
        progress(a.c_str(), b.c_str(), v == nn::Variant::Qnn4eo ? QNN4EO_QNN4EO : QNN4EO_CLASSICAL_CNN, rep,
                 reused ? 1 : 0, user);
      };
    }
    const train::ComparisonTable table = train::run_compare(req, cb);
    *table_json = dup_string(train::to_json(table));
    if (all_ok) *all_ok = table.all_ok() ? 1 : 0;
  });
}

}  // extern "C"
