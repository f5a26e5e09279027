/* ncf: learned compress-and-forward relaying for the Gaussian primitive relay
 * channel.
 *
 * All functions return an ncf_status. On failure a thread-local message is
 * available from ncf_last_error() until the next call on the same thread.
 * Strings returned through char** are owned by the caller and released with
 * ncf_string_free(). SNRs are in dB; rates and MI are in bits.
 */
#ifndef NCF_NCF_H
#define NCF_NCF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NCF_API __declspec(dllexport)
#else
#define NCF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ncf_status {
  NCF_OK = 0,
  NCF_ERR_INVALID_ARGUMENT = 1,
  NCF_ERR_NUMERICAL = 2,
  NCF_ERR_IO = 3,
  NCF_ERR_FORMAT = 4,
  NCF_ERR_DIVERGED = 5,
  NCF_ERR_INTERNAL = 99
} ncf_status;

typedef struct ncf_model ncf_model;
/* A set of named text outputs (CSV, SVG, JSON). */
typedef struct ncf_artifacts ncf_artifacts;

NCF_API const char* ncf_version(void);
NCF_API const char* ncf_last_error(void);
NCF_API void ncf_string_free(char* s);

/* -- models --------------------------------------------------------------- */

NCF_API ncf_status ncf_model_load(const char* path, ncf_model** out);
NCF_API ncf_status ncf_model_save(const ncf_model* model, const char* path);
NCF_API void ncf_model_free(ncf_model* model);
/* JSON summary: scheme, variant, iq_mode, K, hidden, parameter count, metadata. */
NCF_API ncf_status ncf_model_info(const ncf_model* model, char** out_json);
/* Value of one metadata key, or NCF_ERR_INVALID_ARGUMENT if absent. */
NCF_API ncf_status ncf_model_metadata(const ncf_model* model, const char* key, char** out_value);

/* -- configuration and training ------------------------------------------- */

/* Parses and validates a JSON config; writes the fully resolved config. */
NCF_API ncf_status ncf_config_resolve(const char* config_json, char** out_json);

typedef struct ncf_epoch {
  int epoch;
  int stage;
  double loss;
  double rate_bits;
  double distortion_bits;
  double temperature;
  double learning_rate;
  double wall_seconds;
} ncf_epoch;

typedef void (*ncf_epoch_callback)(const ncf_epoch* epoch, void* user);

/* Trains one model. history_csv excludes wall-clock time so it is
 * reproducible byte for byte. */
NCF_API ncf_status ncf_train(const char* config_json, ncf_epoch_callback on_epoch, void* user, ncf_model** out_model,
                             char** out_history_csv);

/* -- evaluation ------------------------------------------------------------ */

typedef struct ncf_eval_report {
  double rate_bits;
  double rate_stderr;
  double mi_bits; /* lower bound log2|X| - D */
  double mi_stderr;
  double ser;
  double ser_stderr;
  double index_entropy_bits;
  long n_samples;
  double dest_db;
  double relay_db;
} ncf_eval_report;

NCF_API ncf_status ncf_evaluate(const ncf_model* model, double dest_db, double relay_db, long n_samples,
                                uint64_t seed, ncf_eval_report* out);

/* Evaluates at `count` SNR points and formats an eval CSV (one row each).
 * Point i uses stream i of `seed`. */
NCF_API ncf_status ncf_evaluate_csv(const ncf_model* model, const char* label, const double* dest_db,
                                    const double* relay_db, size_t count, long n_samples, uint64_t seed, int workers,
                                    char** out_csv);

/* -- baselines ------------------------------------------------------------- */

NCF_API ncf_status ncf_cf_gaussian_rate(double dest_db, double relay_db, double relay_rate, int is_complex,
                                        double* out_bits);
NCF_API ncf_status ncf_modulation_mi(const char* scheme, double power, double gamma_db, int quadrature_order,
                                     double* out_bits);
NCF_API ncf_status ncf_map_ser(const char* scheme, double power, double gamma_db, double* out);

/* One row per (SNR point, relay rate). */
NCF_API ncf_status ncf_baseline_csv(const char* scheme, double power, const double* dest_db, const double* relay_db,
                                    size_t points, const double* relay_rates, size_t rates, int quadrature_order,
                                    char** out_csv);

/* -- sweeps ---------------------------------------------------------------- */

typedef struct ncf_sweep_options {
  long eval_samples;
  uint64_t eval_seed;
  int has_eval_snr;
  double eval_dest_db;
  double eval_relay_db;
  int workers;
  int best_of_seeds;
} ncf_sweep_options;

NCF_API void ncf_sweep_options_default(ncf_sweep_options* opts);

/* Artifacts: "sweep.csv", then per row "model_<i>.json" and "history_<i>.csv"
 * in sweep.csv row order. */
NCF_API ncf_status ncf_sweep(const char* config_json, const double* lambdas, size_t n_lambdas, const uint64_t* seeds,
                             size_t n_seeds, const ncf_sweep_options* opts, ncf_artifacts** out);

/* -- robustness ------------------------------------------------------------ */

typedef struct ncf_robust_options {
  const int* scenarios; /* subset of {1,2,3}; NULL means all */
  size_t n_scenarios;
  const double* levels_db; /* NULL means 0..6 dB */
  size_t n_levels;
  double fixed_db;
  long eval_samples;
  uint64_t eval_seed;
  int workers;
} ncf_robust_options;

NCF_API void ncf_robust_options_default(ncf_robust_options* opts);

/* Artifacts: "robust.csv". */
NCF_API ncf_status ncf_robust(const ncf_model* const* models, const char* const* labels, size_t n_models,
                              const ncf_robust_options* opts, ncf_artifacts** out);

/* -- interpretability exports --------------------------------------------- */

typedef struct ncf_export_options {
  int resolution;      /* cells per dimension for 1-D schemes */
  int resolution_2d;   /* cells per dimension for complex schemes */
  int has_range;       /* 0: +-(h*max|x| + 4 sigma) at the SNRs below */
  double range;        /* symmetric half-width when has_range */
  double dest_db;      /* NaN: training SNR from model metadata */
  double relay_db;
  long fidelity_samples; /* 0 skips the table-vs-network check */
  uint64_t seed;
  int svg;
} ncf_export_options;

NCF_API void ncf_export_options_default(ncf_export_options* opts);

/* Artifacts: boundaries.csv, decisions.csv, relay_table.csv, dest_table.csv,
 * optionally fidelity.csv and boundaries.svg / heatmap SVGs. */
NCF_API ncf_status ncf_export(const ncf_model* model, const ncf_export_options* opts, ncf_artifacts** out);

/* -- artifacts -------------------------------------------------------------- */

NCF_API size_t ncf_artifacts_count(const ncf_artifacts* a);
NCF_API const char* ncf_artifacts_name(const ncf_artifacts* a, size_t i);
NCF_API const char* ncf_artifacts_data(const ncf_artifacts* a, size_t i, size_t* out_len);
NCF_API void ncf_artifacts_free(ncf_artifacts* a);

#ifdef __cplusplus
}
#endif

#endif /* NCF_NCF_H */
