/* C interface to the smooth-network generalization lab.
 *
 * Every fallible call returns a gbl_status; on failure gbl_last_error()
 * returns the message for the calling thread until its next failing call.
 * Strings handed out through char** are owned by the caller and released
 * with gbl_string_free. Handles are released with their *_free function;
 * passing NULL to any *_free is a no-op. */
#ifndef GBL_GBL_H
#define GBL_GBL_H

#include <stddef.h>
#include <stdint.h>

#if defined(GBL_BUILDING_LIBRARY)
#define GBL_API __attribute__((visibility("default")))
#else
#define GBL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 0..3 double as process exit codes. */
typedef enum gbl_status {
  GBL_OK = 0,
  GBL_CONFIG_ERROR = 1,
  GBL_DIVERGED = 2,
  GBL_IO_ERROR = 3,
  GBL_CHECK_FAILED = 4,
  GBL_INVALID_ARGUMENT = 5,
  GBL_INTERNAL = 6
} gbl_status;

typedef struct gbl_config gbl_config;
typedef struct gbl_model gbl_model;
typedef struct gbl_dataset gbl_dataset;
typedef struct gbl_metrics gbl_metrics;

typedef struct gbl_record {
  uint64_t iter;
  double train_loss;
  double test_loss; /* NaN when not evaluated */
  double gen_gap;
  double dist_from_init;
  double grad_norm;
  double cum_train_loss;
  double eta;
  int descent_violation;
} gbl_record;

GBL_API const char* gbl_version(void);
GBL_API const char* gbl_last_error(void);
GBL_API const char* gbl_status_name(gbl_status status);
GBL_API void gbl_string_free(char* s);

/* Flat JSON configuration plus "key=value" overrides. */
GBL_API gbl_status gbl_config_new(gbl_config** out);
GBL_API gbl_status gbl_config_from_file(const char* path, gbl_config** out);
GBL_API gbl_status gbl_config_from_json(const char* json, gbl_config** out);
GBL_API gbl_status gbl_config_set(gbl_config* cfg, const char* assignment);
GBL_API void gbl_config_free(gbl_config* cfg);

/* Training or test split described by the data keys of cfg. */
GBL_API gbl_status gbl_dataset_load(const gbl_config* cfg, int test_split, gbl_dataset** out);
GBL_API size_t gbl_dataset_size(const gbl_dataset* data);
GBL_API size_t gbl_dataset_dim(const gbl_dataset* data);
GBL_API void gbl_dataset_free(gbl_dataset* data);

/* Network from the net keys of cfg, initialized from its seed. */
GBL_API gbl_status gbl_model_init(const gbl_config* cfg, size_t input_dim, gbl_model** out);
GBL_API gbl_status gbl_model_load(const char* checkpoint_path, gbl_model** out);
GBL_API gbl_status gbl_model_save(const gbl_model* model, const char* checkpoint_path);
GBL_API size_t gbl_model_num_params(const gbl_model* model);
GBL_API size_t gbl_model_input_dim(const gbl_model* model);
GBL_API gbl_status gbl_model_forward(const gbl_model* model, const double* x, size_t dim,
                                     double* out);
GBL_API gbl_status gbl_model_grad(const gbl_model* model, const double* x, size_t dim,
                                  double* out, size_t num_params);
/* Mean logistic loss of the model on a dataset. */
GBL_API gbl_status gbl_model_loss(const gbl_model* model, const gbl_dataset* data, double* out);
GBL_API void gbl_model_free(gbl_model* model);

GBL_API gbl_status gbl_metrics_read(const char* csv_path, gbl_metrics** out);
GBL_API size_t gbl_metrics_rows(const gbl_metrics* metrics);
GBL_API gbl_status gbl_metrics_get(const gbl_metrics* metrics, size_t row, gbl_record* out);
GBL_API void gbl_metrics_free(gbl_metrics* metrics);

/* Commands. Output files land in out_dir, created if absent. */
GBL_API gbl_status gbl_run_train(const gbl_config* cfg, const char* out_dir);
GBL_API gbl_status gbl_run_xor(const gbl_config* cfg, const char* out_dir);
GBL_API gbl_status gbl_run_sweep(const gbl_config* cfg, const char* out_dir, unsigned jobs);
/* BoundReport JSON for the metrics CSV named by the "metrics" key. */
GBL_API gbl_status gbl_run_bounds(const gbl_config* cfg, char** json_out);
/* Human-readable report; GBL_CHECK_FAILED when any property fails. */
GBL_API gbl_status gbl_run_check(int corrupt_activation, char** report_out);

#ifdef __cplusplus
}
#endif

#endif
