/* motinv: unsupervised convolutional feature learning from video under a
 * motion-invariance constraint.
 *
 * C interface. Objects are opaque handles owned by the caller and released
 * with the matching *_free function. Every fallible call returns a
 * motinv_status; on failure motinv_last_error() describes the cause (the
 * message is thread-local and valid until the next call on that thread).
 */
#ifndef MOTINV_MOTINV_H
#define MOTINV_MOTINV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MOTINV_API __declspec(dllexport)
#else
#define MOTINV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum motinv_status {
  MOTINV_OK = 0,
  MOTINV_ERR_INVALID_ARGUMENT = 1,
  MOTINV_ERR_DIMENSION = 2,
  MOTINV_ERR_IO = 3,
  MOTINV_ERR_CONFIG = 4,
  MOTINV_ERR_DIVERGED = 5,
  MOTINV_ERR_INTERNAL = 6,
  MOTINV_ERR_CHECK_FAILED = 7 /* check-grad found a gradient outside tolerance */
} motinv_status;

typedef enum motinv_pattern {
  MOTINV_PATTERN_CHECKERBOARD = 0,
  MOTINV_PATTERN_SINUSOID = 1,
  MOTINV_PATTERN_RANDOM_TEXTURE = 2
} motinv_pattern;

typedef enum motinv_mode { MOTINV_MODE_SOFTMAX = 0, MOTINV_MODE_LINEAR_PENALTY = 1 } motinv_mode;

typedef enum motinv_scheme { MOTINV_SCHEME_TRANSPORT = 0, MOTINV_SCHEME_EULERIAN = 1 } motinv_scheme;

typedef struct motinv_clip motinv_clip;
typedef struct motinv_flow motinv_flow;
typedef struct motinv_bank motinv_bank;

/* Scalars of one action evaluation, in nats where applicable. */
typedef struct motinv_breakdown {
  double marginal_entropy;
  double conditional_entropy;
  double information;
  double motion;
  double spatial;
  double temporal;
  double constraint;
  double action;
} motinv_breakdown;

typedef struct motinv_action_options {
  double lambda_motion;
  double lambda_spatial;
  double lambda_temporal;
  double lambda_constraint;
  double dtau;
  motinv_scheme scheme;
} motinv_action_options;

typedef struct motinv_run_options {
  const char* config_path; /* required */
  const char* out_dir;     /* NULL: keep the config's [experiment] out */
  int has_seed;            /* non-zero: seed overrides the config seed */
  uint64_t seed;
  unsigned threads;        /* hint only; results never depend on it */
  double flow_alpha;       /* > 0: Horn-Schunck smoothness override */
  size_t flow_iters;       /* > 0: Horn-Schunck iteration override */
} motinv_run_options;

MOTINV_API const char* motinv_last_error(void);
MOTINV_API const char* motinv_version(void);

/* Clips */
MOTINV_API motinv_status motinv_clip_synthesize(motinv_pattern pattern, double period, uint64_t seed,
                                                size_t channels, double v1, double v2, size_t frames,
                                                size_t height, size_t width, motinv_clip** out_clip,
                                                motinv_flow** out_flow);
MOTINV_API motinv_status motinv_clip_load(const char* path_pattern, motinv_clip** out_clip);
MOTINV_API motinv_status motinv_clip_shape(const motinv_clip* clip, size_t* frames, size_t* height,
                                           size_t* width, size_t* channels);
/* Samples in (t, row, col, channel) order; valid while the clip lives. */
MOTINV_API const double* motinv_clip_data(const motinv_clip* clip);
MOTINV_API void motinv_clip_free(motinv_clip* clip);

/* Flow fields */
MOTINV_API motinv_status motinv_flow_horn_schunck(const motinv_clip* clip, double alpha, size_t iters,
                                                  motinv_flow** out_flow);
MOTINV_API motinv_status motinv_flow_read(const char* path, motinv_flow** out_flow);
MOTINV_API motinv_status motinv_flow_write(const motinv_flow* flow, const char* path);
/* (t, row, col, component) order, component 0 along columns. */
MOTINV_API const double* motinv_flow_data(const motinv_flow* flow);
MOTINV_API void motinv_flow_free(motinv_flow* flow);

/* Filter banks */
MOTINV_API motinv_status motinv_bank_init(size_t n, size_t inputs, size_t kernel, motinv_mode mode,
                                          uint64_t seed, double scale, motinv_bank** out_bank);
MOTINV_API motinv_status motinv_bank_load(const char* path, motinv_bank** out_bank);
MOTINV_API motinv_status motinv_bank_save(const motinv_bank* bank, const char* path);
MOTINV_API motinv_status motinv_bank_shape(const motinv_bank* bank, size_t* n, size_t* inputs, size_t* kernel);
/* n * inputs * kernel * kernel taps in (i, j, a, b) order; writable. */
MOTINV_API double* motinv_bank_taps(motinv_bank* bank);
MOTINV_API void motinv_bank_free(motinv_bank* bank);

/* Action of a single layer on a clip, with uniform temporal weights.
 * prev may be NULL (treated as bank, so the temporal term is zero).
 * gradient may be NULL; otherwise it receives one value per tap. */
MOTINV_API motinv_status motinv_action_evaluate(const motinv_bank* bank, const motinv_bank* prev,
                                                const motinv_clip* clip, const motinv_flow* flow,
                                                const motinv_action_options* options,
                                                motinv_breakdown* out, double* gradient);

/* End-to-end commands: "synth", "train", "eval", "check-grad". Progress and
 * reports of check-grad go to stdout. */
MOTINV_API motinv_status motinv_run(const char* command, const motinv_run_options* options);

#ifdef __cplusplus
}
#endif

#endif /* MOTINV_MOTINV_H */
