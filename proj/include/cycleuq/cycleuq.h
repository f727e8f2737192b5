#ifndef CYCLEUQ_H
#define CYCLEUQ_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef CYCLEUQ_BUILDING
#    define CUQ_API __declspec(dllexport)
#  else
#    define CUQ_API __declspec(dllimport)
#  endif
#elif __GNUC__ >= 4
#  define CUQ_API __attribute__((visibility("default")))
#else
#  define CUQ_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status; the message of the most recent
 * failure on the calling thread is available from cuq_last_error(). */
typedef enum cuq_status {
  CUQ_OK = 0,
  CUQ_ERR_USAGE = 1,
  CUQ_ERR_DATA = 2,
  CUQ_ERR_NUMERIC = 3,
  CUQ_ERR_IO = 4,
  CUQ_ERR_INTERNAL = 5
} cuq_status;

CUQ_API const char* cuq_last_error(void);
CUQ_API const char* cuq_version(void);
/* Releases strings returned through char** out-parameters. */
CUQ_API void cuq_free_string(char* s);

/* ---- configuration ---------------------------------------------------- */

typedef struct cuq_config cuq_config;

/* testbed: "deblur" or "sr". */
CUQ_API cuq_status cuq_config_default(const char* testbed, cuq_config** out);
CUQ_API cuq_status cuq_config_load(const char* path, cuq_config** out);
CUQ_API cuq_status cuq_config_parse(const char* json, cuq_config** out);
/* "section.key=value"; value is parsed as JSON, else taken as a string. */
CUQ_API cuq_status cuq_config_set(cuq_config* cfg, const char* assignment);
CUQ_API cuq_status cuq_config_to_json(const cuq_config* cfg, char** out);
CUQ_API void cuq_config_free(cuq_config* cfg);

/* ---- images and kernels ----------------------------------------------- */

typedef struct cuq_image cuq_image;

CUQ_API cuq_status cuq_image_create(size_t height, size_t width, const double* data, cuq_image** out);
/* .pgm is read as 16-bit PGM, anything else as CGF1. */
CUQ_API cuq_status cuq_image_load(const char* path, cuq_image** out);
CUQ_API cuq_status cuq_image_save(const cuq_image* img, const char* path);
CUQ_API size_t cuq_image_height(const cuq_image* img);
CUQ_API size_t cuq_image_width(const cuq_image* img);
CUQ_API const double* cuq_image_data(const cuq_image* img);
CUQ_API void cuq_image_free(cuq_image* img);

typedef struct cuq_kernel cuq_kernel;

CUQ_API cuq_status cuq_kernel_generate(uint64_t seed, int size, int steps, cuq_kernel** out);
CUQ_API cuq_status cuq_kernel_load(const char* path, cuq_kernel** out);
CUQ_API cuq_status cuq_kernel_save(const cuq_kernel* k, const char* path);
CUQ_API int cuq_kernel_size(const cuq_kernel* k);
CUQ_API const double* cuq_kernel_weights(const cuq_kernel* k);
CUQ_API void cuq_kernel_free(cuq_kernel* k);

/* ---- cycles ------------------------------------------------------------ */

typedef enum cuq_forward_kind { CUQ_FORWARD_BLUR = 0, CUQ_FORWARD_POOL = 1 } cuq_forward_kind;

typedef struct cuq_forward_desc {
  cuq_forward_kind kind;
  const cuq_kernel* kernel; /* blur */
  int pool_factor;          /* pool */
} cuq_forward_desc;

typedef enum cuq_solver_kind { CUQ_SOLVER_WIENER = 0, CUQ_SOLVER_LANDWEBER = 1 } cuq_solver_kind;

typedef struct cuq_solver_desc {
  cuq_solver_kind kind;
  const cuq_kernel* kernel; /* wiener */
  double lambda;
  int factor;               /* landweber */
  int steps;                /* landweber */
  double step_size;         /* landweber; <= 0 selects 1/L_op */
  int clamp;                /* landweber */
} cuq_solver_desc;

typedef struct cuq_trace cuq_trace;

typedef struct cuq_features {
  double eps_x, eps_y, b_x, b_y, dx1;
  double k_x, k_y;
  double r2_x, r2_y;
} cuq_features;

CUQ_API cuq_status cuq_run_cycles(const cuq_image* x, const cuq_solver_desc* solver,
                                  const cuq_forward_desc* forward, int n_cycles, cuq_trace** out);
CUQ_API int cuq_trace_cycles(const cuq_trace* t);
/* dy has n_cycles entries, dx has n_cycles + 1. */
CUQ_API const double* cuq_trace_dy(const cuq_trace* t);
CUQ_API const double* cuq_trace_dx(const cuq_trace* t);
CUQ_API cuq_status cuq_trace_output(const cuq_trace* t, cuq_image** out);
CUQ_API cuq_status cuq_trace_write_csv(const cuq_trace* t, const char* path);
CUQ_API cuq_status cuq_trace_dump_images(const cuq_trace* t, const char* dir);
CUQ_API cuq_status cuq_trace_features(const cuq_trace* t, cuq_features* out);
CUQ_API cuq_status cuq_trace_eps0(const cuq_trace* t, const cuq_image* ground_truth, double* out);
/* Bound verification report for one trace. ground_truth may be NULL, in
 * which case only the recursive bound is meaningful. */
CUQ_API cuq_status cuq_trace_bounds_json(const cuq_trace* t, const cuq_solver_desc* solver,
                                         const cuq_forward_desc* forward, const cuq_image* ground_truth,
                                         uint64_t seed, char** out);
CUQ_API void cuq_trace_free(cuq_trace* t);

/* ---- classifier and predictor ------------------------------------------ */

typedef struct cuq_classifier cuq_classifier;

/* Tunes on a feature CSV (eps_x,eps_y,b_x,b_y,dx1,label[,eps0]) using the
 * config's classifier section. dx1_only restricts the model to dx1. */
CUQ_API cuq_status cuq_classifier_train_csv(const char* features_csv, const cuq_config* cfg, int dx1_only,
                                            cuq_classifier** out);
CUQ_API cuq_status cuq_classifier_load(const char* path, cuq_classifier** out);
CUQ_API cuq_status cuq_classifier_save(const cuq_classifier* c, const char* path);
CUQ_API cuq_status cuq_classifier_predict(const cuq_classifier* c, const cuq_features* f, double* proba,
                                          int* label);
/* Metrics JSON {accuracy, auc, ap, f1, n_samples}; predictions CSV written
 * to predictions_csv when non-NULL. */
CUQ_API cuq_status cuq_classifier_evaluate_csv(const cuq_classifier* c, const char* features_csv,
                                               const char* predictions_csv, char** metrics_json);
CUQ_API void cuq_classifier_free(cuq_classifier* c);

/* Fits the linear ||eps_0|| predictor on rows carrying eps0 and writes the
 * model JSON; training R^2 is returned through r_squared. */
CUQ_API cuq_status cuq_predictor_fit_csv(const char* features_csv, double ridge, const char* model_path,
                                         double* r_squared);

/* ---- pipelines ---------------------------------------------------------- */

CUQ_API cuq_status cuq_generate_dataset(const cuq_config* cfg, const char* dir, size_t* n_rows);
/* lambda < 0 calibrates per scene class on the manifest's label-0 rows. */
CUQ_API cuq_status cuq_fit_features(const cuq_config* cfg, const char* data_dir, double lambda,
                                    const char* out_csv);
CUQ_API cuq_status cuq_run_deblur_experiment(const cuq_config* cfg, const char* out_dir);
CUQ_API cuq_status cuq_run_sr_experiment(const cuq_config* cfg, const char* out_dir);
CUQ_API cuq_status cuq_run_bounds_suite(const cuq_config* cfg, const char* out_dir);
CUQ_API cuq_status cuq_emit_plotdata(const char* report_dir, const char* out_dir, int n_curves);

#ifdef __cplusplus
}
#endif

#endif
