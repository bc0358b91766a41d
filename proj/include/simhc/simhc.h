#ifndef SIMHC_SIMHC_H
#define SIMHC_SIMHC_H

#include <stddef.h>
#include <stdint.h>

#if defined(SIMHC_BUILDING)
#define SIMHC_API __attribute__((visibility("default")))
#else
#define SIMHC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum simhc_status {
  SIMHC_OK = 0,
  SIMHC_E_INVALID_ARGUMENT = 1,
  SIMHC_E_DEGENERATE = 2,
  SIMHC_E_IO = 3,
  SIMHC_E_FORMAT = 4,
  SIMHC_E_NO_SOLUTION = 5,
  SIMHC_E_INTERNAL = 6
} simhc_status;

typedef enum simhc_kind { SIMHC_UPNP = 0, SIMHC_GRPS = 1 } simhc_kind;

typedef enum simhc_noise_mode { SIMHC_NOISE_UNIFORM = 0, SIMHC_NOISE_GAUSSIAN = 1 } simhc_noise_mode;

typedef enum simhc_sampling { SIMHC_SAMPLING_BOX = 0, SIMHC_SAMPLING_SHELL = 1 } simhc_sampling;

/* Values match the order of track statuses in reports. */
typedef enum simhc_track_status {
  SIMHC_TRACK_CONVERGED = 0,
  SIMHC_TRACK_CONVERGED_LEAST_SQUARES = 1,
  SIMHC_TRACK_NOT_CONVERGED = 2,
  SIMHC_TRACK_DIVERGED = 3,
  SIMHC_TRACK_SINGULAR_JACOBIAN = 4,
  SIMHC_TRACK_MAX_STEPS_EXCEEDED = 5
} simhc_track_status;

#define SIMHC_TRACK_STATUS_COUNT 6

typedef enum simhc_method {
  SIMHC_METHOD_HC = 0,
  SIMHC_METHOD_LM = 1,
  /* Report the initializer's pose without solving. */
  SIMHC_METHOD_INIT_ONLY = 2
} simhc_method;

typedef enum simhc_predictor { SIMHC_PREDICTOR_EULER = 0, SIMHC_PREDICTOR_RK4 = 1 } simhc_predictor;

/* q is (w, x, y, z) with w >= 0. */
typedef struct simhc_pose {
  double q[4];
  double t[3];
  double s;
} simhc_pose;

typedef struct simhc_scene_config {
  simhc_kind kind;
  int n_cameras;
  int n_points;
  simhc_sampling point_sampling;
  double point_lo[3];
  double point_hi[3];
  double shell_min_depth;
  double shell_max_depth;
  double camera_lo[3];
  double camera_hi[3];
  double origin_lo[3];
  double origin_hi[3];
  double rotation_angle_range;
  double scale_min;
  double scale_max;
  double noise_px;
  simhc_noise_mode noise_mode;
  double virtual_focal_px;
  double outlier_fraction;
  uint64_t seed;
} simhc_scene_config;

typedef struct simhc_solve_options {
  simhc_method method;
  simhc_predictor predictor;
  double step_size;
  int max_newton_iters;
  double newton_tol;
  double divergence_radius;
  double singular_tol;
  /* Use only the first n correspondences; 0 uses all. */
  int n_points;
  /* Distinguishes repeated initializer draws on one scene. */
  uint64_t draw;
  int lm_max_iters;
} simhc_solve_options;

typedef struct simhc_solve_result {
  simhc_pose pose;
  simhc_pose init;
  simhc_track_status track_status;
  double residual_norm;
  int steps;
  /* NaN when undefined (zero ground-truth translation). */
  double rot_err_deg;
  double trans_err_pct;
  double scale_err_pct;
  double time_us;
  /* GRPS: tracked scale <= 0. */
  int infeasible;
  /* UPnP: every recovered depth positive. */
  int depths_positive;
} simhc_solve_result;

typedef struct simhc_ransac_options {
  int max_iters;
  double confidence;
  double inlier_threshold;
  /* 0 selects 8 for GRPS and 4 for UPnP. */
  int sample_size;
  uint64_t seed;
} simhc_ransac_options;

typedef struct simhc_ransac_result {
  simhc_pose pose;
  int n_inliers;
  int iterations;
  int status_counts[SIMHC_TRACK_STATUS_COUNT];
  int solver_errors;
  double rot_err_deg;
  double trans_err_pct;
  double scale_err_pct;
  double wall_time_ms;
} simhc_ransac_result;

typedef struct simhc_scene simhc_scene;
typedef struct simhc_model simhc_model;
typedef struct simhc_initializer simhc_initializer;

/* Message for the last failed call on this thread; never NULL. */
SIMHC_API const char* simhc_last_error(void);
SIMHC_API const char* simhc_status_string(simhc_status status);
SIMHC_API const char* simhc_track_status_string(simhc_track_status status);
SIMHC_API const char* simhc_version(void);

SIMHC_API uint64_t simhc_derive_seed(uint64_t root, uint64_t stream, uint64_t index);

SIMHC_API simhc_status simhc_scene_config_default(simhc_kind kind, simhc_scene_config* out);
SIMHC_API simhc_status simhc_scene_generate(const simhc_scene_config* cfg, simhc_scene** out);
SIMHC_API simhc_status simhc_scene_from_json(const char* text, simhc_scene** out);
/* *out must be released with simhc_string_free. */
SIMHC_API simhc_status simhc_scene_to_json(const simhc_scene* scene, char** out);
SIMHC_API void simhc_scene_free(simhc_scene* scene);
SIMHC_API void simhc_string_free(char* s);
SIMHC_API simhc_status simhc_scene_kind(const simhc_scene* scene, simhc_kind* out);
SIMHC_API simhc_status simhc_scene_size(const simhc_scene* scene, size_t* out);
SIMHC_API simhc_status simhc_scene_gt(const simhc_scene* scene, simhc_pose* out);
SIMHC_API simhc_status simhc_scene_get_config(const simhc_scene* scene, simhc_scene_config* out);
SIMHC_API simhc_status simhc_scene_outliers(const simhc_scene* scene, unsigned char* mask, size_t len);

SIMHC_API simhc_status simhc_model_load(const char* path, simhc_model** out);
SIMHC_API void simhc_model_free(simhc_model* model);
SIMHC_API simhc_status simhc_model_kind(const simhc_model* model, simhc_kind* out);

SIMHC_API simhc_status simhc_initializer_random(uint64_t seed, simhc_initializer** out);
/* Perturbs the ground truth of whichever scene it is used on. With up_to
   set, rotation and translation magnitudes are drawn from [0, value]. */
SIMHC_API simhc_status simhc_initializer_oracle(double rot_deg, double trans_frac, double scale_frac,
                                                int up_to, uint64_t seed, simhc_initializer** out);
/* The initializer keeps its own reference; the model may be freed afterwards. */
SIMHC_API simhc_status simhc_initializer_model(const simhc_model* model, simhc_initializer** out);
SIMHC_API void simhc_initializer_free(simhc_initializer* init);

SIMHC_API simhc_status simhc_solve_options_default(simhc_kind kind, simhc_solve_options* out);
SIMHC_API simhc_status simhc_solve(const simhc_scene* scene, const simhc_initializer* init,
                                   const simhc_solve_options* opts, simhc_solve_result* out);

SIMHC_API simhc_status simhc_ransac_options_default(simhc_kind kind, simhc_ransac_options* out);
/* mask may be NULL; otherwise mask_len must equal the scene size. */
SIMHC_API simhc_status simhc_ransac(const simhc_scene* scene, const simhc_initializer* init,
                                    const simhc_solve_options* tracker,
                                    const simhc_ransac_options* opts, simhc_ransac_result* out,
                                    unsigned char* mask, size_t mask_len);

#ifdef __cplusplus
}
#endif

#endif
