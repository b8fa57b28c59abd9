/*
 * qnn4eo C API.
 *
 * Every function returns a qnn4eo_status; on failure a human-readable message
 * is available from qnn4eo_last_error() on the calling thread. Objects are
 * opaque handles owned by the caller and released with their _free function.
 * Strings returned through char** out-parameters are released with
 * qnn4eo_string_free().
 */
#ifndef QNN4EO_QNN4EO_H_
#define QNN4EO_QNN4EO_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32) && !defined(__CYGWIN__)
#ifdef QNN4EO_BUILDING_LIBRARY
#define QNN4EO_API __declspec(dllexport)
#else
#define QNN4EO_API __declspec(dllimport)
#endif
#else
#define QNN4EO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qnn4eo_status {
  QNN4EO_OK = 0,
  QNN4EO_INVALID_ARGUMENT = 1,
  QNN4EO_OUT_OF_RANGE = 2,
  QNN4EO_SHAPE_MISMATCH = 3,
  QNN4EO_IO_ERROR = 4,
  QNN4EO_CORRUPT_DATA = 5,
  QNN4EO_NON_FINITE = 6,
  QNN4EO_INTERNAL = 7
} qnn4eo_status;

QNN4EO_API const char* qnn4eo_version(void);
QNN4EO_API const char* qnn4eo_status_name(qnn4eo_status status);
QNN4EO_API const char* qnn4eo_last_error(void);
QNN4EO_API void qnn4eo_string_free(char* s);

/* ---- statevector simulator --------------------------------------------- */

typedef struct qnn4eo_state qnn4eo_state;

typedef enum qnn4eo_gate_kind {
  QNN4EO_GATE_X = 0,
  QNN4EO_GATE_Y = 1,
  QNN4EO_GATE_Z = 2,
  QNN4EO_GATE_H = 3,
  QNN4EO_GATE_RY = 4,
  QNN4EO_GATE_PHASE = 5,
  QNN4EO_GATE_CNOT = 6
} qnn4eo_gate_kind;

typedef struct qnn4eo_gate {
  qnn4eo_gate_kind kind;
  int target;
  int control; /* CNOT only */
  double angle; /* RY theta or PHASE phi, radians */
} qnn4eo_gate;

QNN4EO_API qnn4eo_status qnn4eo_state_zero(int num_qubits, qnn4eo_state** out);
/* `amplitudes` holds `dimension` complex values as interleaved (re, im). */
QNN4EO_API qnn4eo_status qnn4eo_state_from_amplitudes(const double* amplitudes, size_t dimension, qnn4eo_state** out);
QNN4EO_API void qnn4eo_state_free(qnn4eo_state* state);
QNN4EO_API qnn4eo_status qnn4eo_state_num_qubits(const qnn4eo_state* state, int* out);
QNN4EO_API qnn4eo_status qnn4eo_state_dimension(const qnn4eo_state* state, size_t* out);
/* Returns a new state; `state` is left unchanged. */
QNN4EO_API qnn4eo_status qnn4eo_state_apply(const qnn4eo_state* state, const qnn4eo_gate* gate, qnn4eo_state** out);
/* In-place variant. */
QNN4EO_API qnn4eo_status qnn4eo_state_apply_inplace(qnn4eo_state* state, const qnn4eo_gate* gate);
QNN4EO_API qnn4eo_status qnn4eo_state_amplitudes(const qnn4eo_state* state, double* out, size_t dimension);
QNN4EO_API qnn4eo_status qnn4eo_state_probabilities(const qnn4eo_state* state, double* out, size_t dimension);
/* Dense counts: out[i] is the number of shots that read basis state i. */
QNN4EO_API qnn4eo_status qnn4eo_state_sample(const qnn4eo_state* state, uint64_t shots, uint64_t seed,
                                             uint64_t* out, size_t dimension);
QNN4EO_API qnn4eo_status qnn4eo_state_z_expectation(const qnn4eo_state* state, int qubit, double* out);

/* ---- quantum node ------------------------------------------------------ */

typedef struct qnn4eo_qnode_config {
  uint64_t shots; /* 0 = exact expectation */
  double shift;   /* gradient shift, radians, in (0, pi] */
  uint64_t seed;
} qnn4eo_qnode_config;

QNN4EO_API void qnn4eo_qnode_config_default(qnn4eo_qnode_config* config);
QNN4EO_API qnn4eo_status qnn4eo_qnode_forward(double theta, const qnn4eo_qnode_config* config, double* output);
QNN4EO_API qnn4eo_status qnn4eo_qnode_backward(double theta, double upstream_grad, const qnn4eo_qnode_config* config,
                                               double* grad);

/* ---- training configuration -------------------------------------------- */

typedef enum qnn4eo_variant { QNN4EO_CLASSICAL_CNN = 0, QNN4EO_QNN4EO = 1 } qnn4eo_variant;

typedef struct qnn4eo_train_config {
  qnn4eo_variant variant;
  int epochs;
  double learning_rate;
  int batch_size;
  double split_fraction;
  int stratify;
  uint64_t seed;
  qnn4eo_qnode_config qnode;
} qnn4eo_train_config;

QNN4EO_API void qnn4eo_train_config_default(qnn4eo_train_config* config);
/* Overrides the fields named in a JSON object. */
QNN4EO_API qnn4eo_status qnn4eo_train_config_apply_json(const char* json, qnn4eo_train_config* config);
QNN4EO_API qnn4eo_status qnn4eo_train_config_validate(const qnn4eo_train_config* config);
QNN4EO_API qnn4eo_status qnn4eo_train_config_to_json(const qnn4eo_train_config* config, char** out);

/* ---- datasets ---------------------------------------------------------- */

typedef struct qnn4eo_dataset qnn4eo_dataset;

QNN4EO_API qnn4eo_status qnn4eo_dataset_load_pair(const char* root, const char* class_a, const char* class_b,
                                                  qnn4eo_dataset** out);
/* Procedural classes `class_a` and `class_b`; (0, 1) is the canonical pair. */
QNN4EO_API qnn4eo_status qnn4eo_dataset_synthetic(size_t class_a, size_t class_b, size_t n_per_class, uint64_t seed,
                                                  qnn4eo_dataset** out);
QNN4EO_API void qnn4eo_dataset_free(qnn4eo_dataset* dataset);
QNN4EO_API qnn4eo_status qnn4eo_dataset_size(const qnn4eo_dataset* dataset, size_t* out);
QNN4EO_API qnn4eo_status qnn4eo_dataset_labels(const qnn4eo_dataset* dataset, int* out, size_t count);
/* JSON array of [class_a, class_b] pairs; an empty class list means every
 * class directory under root. */
QNN4EO_API qnn4eo_status qnn4eo_task_matrix(const char* root, const char* const* classes, size_t num_classes,
                                            char** out_json);

/* ---- training runs ----------------------------------------------------- */

typedef struct qnn4eo_run qnn4eo_run;
typedef void (*qnn4eo_epoch_callback)(int epoch, double train_loss, void* user);

QNN4EO_API qnn4eo_status qnn4eo_train(const qnn4eo_dataset* dataset, const qnn4eo_train_config* config,
                                      qnn4eo_epoch_callback on_epoch, void* user, qnn4eo_run** out);
QNN4EO_API void qnn4eo_run_free(qnn4eo_run* run);
QNN4EO_API qnn4eo_status qnn4eo_run_validation_accuracy(const qnn4eo_run* run, double* out);
QNN4EO_API qnn4eo_status qnn4eo_run_report_json(const qnn4eo_run* run, char** out);
/* Writes report.json and model.ckpt into `dir`, creating it if needed. */
QNN4EO_API qnn4eo_status qnn4eo_run_write(const qnn4eo_run* run, const char* dir);

/* ---- checkpoints ------------------------------------------------------- */

typedef struct qnn4eo_checkpoint qnn4eo_checkpoint;

QNN4EO_API qnn4eo_status qnn4eo_checkpoint_load(const char* path, qnn4eo_checkpoint** out);
QNN4EO_API void qnn4eo_checkpoint_free(qnn4eo_checkpoint* checkpoint);
/* Scores the checkpoint on the validation split rebuilt from its stored seed.
 * `dataset` may be NULL to reload the data source recorded at training time. */
QNN4EO_API qnn4eo_status qnn4eo_checkpoint_evaluate(const qnn4eo_checkpoint* checkpoint, const qnn4eo_dataset* dataset,
                                                    double* accuracy, size_t* validation_size);
QNN4EO_API qnn4eo_status qnn4eo_checkpoint_metadata_json(const qnn4eo_checkpoint* checkpoint, char** out);

/* ---- pairwise comparison ----------------------------------------------- */

typedef struct qnn4eo_compare_request {
  const char* root;            /* directory mode */
  const char* const* classes;  /* optional subset; NULL/0 = all */
  size_t num_classes;
  size_t synthetic_classes;    /* > 0 selects synthetic mode */
  size_t synthetic_per_class;
  uint64_t synthetic_seed;
  qnn4eo_train_config base;
  const char* out_dir;
  int force;
  int repeats;
} qnn4eo_compare_request;

typedef void (*qnn4eo_compare_callback)(const char* class_a, const char* class_b, qnn4eo_variant variant, int repeat,
                                        int reused, void* user);

/* On success *table_json holds the comparison table and *all_ok is 1 when
 * every task succeeded. Per-task failures do not fail the call. */
QNN4EO_API qnn4eo_status qnn4eo_compare(const qnn4eo_compare_request* request, qnn4eo_compare_callback progress,
                                        void* user, char** table_json, int* all_ok);

#ifdef __cplusplus
}
#endif

#endif /* QNN4EO_QNN4EO_H_ */
