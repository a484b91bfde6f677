#ifndef LBPP_LBPP_H
#define LBPP_LBPP_H

/*
 * C interface to the lbpp library: Laplace-approximated Bayesian intensity
 * estimation for permanental point processes, lambda(x) = f(x)^2 / 2 with a
 * Gaussian-process prior on f.
 *
 * Conventions
 *   - Every function returns an lbpp_status. On failure, lbpp_last_error()
 *     returns a message for the calling thread.
 *   - Point arrays are row-major n x d (point i, coordinate j at x[i*d + j])
 *     in the units of the domain they belong to.
 *   - Handles are opaque and owned by the caller; release them with the
 *     matching *_free function (passing NULL is allowed).
 *   - Intensities returned through this API are per unit volume of the
 *     original domain.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LBPP_BUILDING_LIBRARY)
#    define LBPP_API __declspec(dllexport)
#  else
#    define LBPP_API __declspec(dllimport)
#  endif
#else
#  define LBPP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lbpp_status {
  LBPP_OK = 0,
  LBPP_ERR_INVALID_ARGUMENT = 1,
  LBPP_ERR_IO = 2,
  LBPP_ERR_PARSE = 3,
  LBPP_ERR_DOMAIN = 4,
  LBPP_ERR_CONVERGENCE = 5,
  LBPP_ERR_NUMERICAL = 6,
  LBPP_ERR_BUFFER_TOO_SMALL = 7,
  LBPP_ERR_INTERNAL = 8
} lbpp_status;

typedef struct lbpp_pattern lbpp_pattern;
typedef struct lbpp_model lbpp_model;
typedef struct lbpp_intensity lbpp_intensity;
typedef struct lbpp_selection lbpp_selection;

LBPP_API const char* lbpp_version(void);
LBPP_API const char* lbpp_status_name(lbpp_status status);
/* Message of the last failed call on this thread ("" if none). */
LBPP_API const char* lbpp_last_error(void);

/* ---- point patterns ---------------------------------------------------- */

/* CSV with one point per row; an optional header row and '#' comment lines
 * are skipped. Every point must lie in [lower, upper]. */
LBPP_API lbpp_status lbpp_pattern_load_csv(const char* path, size_t dim,
                                           const double* lower,
                                           const double* upper,
                                           lbpp_pattern** out);
LBPP_API lbpp_status lbpp_pattern_create(size_t dim, size_t count,
                                         const double* points,
                                         const double* lower,
                                         const double* upper,
                                         lbpp_pattern** out);
LBPP_API size_t lbpp_pattern_count(const lbpp_pattern* pattern);
LBPP_API size_t lbpp_pattern_dim(const lbpp_pattern* pattern);
/* Copies count*dim values; capacity is in doubles. */
LBPP_API lbpp_status lbpp_pattern_get_points(const lbpp_pattern* pattern,
                                             double* buffer, size_t capacity);
LBPP_API lbpp_status lbpp_pattern_get_domain(const lbpp_pattern* pattern,
                                             double* lower, double* upper);
LBPP_API lbpp_status lbpp_pattern_write_csv(const lbpp_pattern* pattern,
                                            const char* path,
                                            const char* comment);
/* Each point goes to `train` with probability p, otherwise to `test`. */
LBPP_API lbpp_status lbpp_pattern_split(const lbpp_pattern* pattern, double p,
                                        uint64_t seed, lbpp_pattern** train,
                                        lbpp_pattern** test);
LBPP_API void lbpp_pattern_free(lbpp_pattern* pattern);

/* ---- prior families and fitting ---------------------------------------- */

typedef enum lbpp_family_kind {
  LBPP_FAMILY_COSINE = 0,  /* cosine basis, thin-plate spectrum */
  LBPP_FAMILY_GAUSSIAN = 1 /* Gaussian kernel via Nystrom */
} lbpp_family_kind;

typedef struct lbpp_family {
  lbpp_family_kind kind;
  /* Cosine: frequencies per dimension (basis size is size_per_dim^d).
   * Gaussian: Nystrom grid points per dimension. */
  size_t size_per_dim;
  double a;
  double b;
  int m_order;
  double gamma;       /* kernel amplitude, k(x,x) = gamma^2 */
  double lengthscale; /* in original units */
  size_t max_rank;    /* 0 = keep all numerically positive eigenpairs */
} lbpp_family;

LBPP_API lbpp_status lbpp_family_default(lbpp_family_kind kind,
                                         lbpp_family* out);

typedef struct lbpp_fit_options {
  int max_newton_iters;
  double grad_tol;
} lbpp_fit_options;

LBPP_API void lbpp_fit_options_default(lbpp_fit_options* out);

/* options may be NULL for defaults. */
LBPP_API lbpp_status lbpp_fit(const lbpp_pattern* data,
                              const lbpp_family* family,
                              const lbpp_fit_options* options,
                              lbpp_model** out);

typedef struct lbpp_marginal {
  double data_term;
  double quadratic_term;
  double v_term;
  double logdet_s;
  double constant;
  double total;
} lbpp_marginal;

typedef struct lbpp_model_info {
  size_t dim;
  size_t basis_size;
  size_t num_points;
  int iterations;
  double jacobian; /* pi^d / vol(domain) */
  lbpp_marginal marginal;
} lbpp_model_info;

LBPP_API lbpp_status lbpp_model_info_get(const lbpp_model* model,
                                         lbpp_model_info* out);
LBPP_API lbpp_status lbpp_model_weights(const lbpp_model* model,
                                        double* buffer, size_t capacity);

typedef struct lbpp_prediction {
  double mu;             /* predictive mean of f (standardized units) */
  double sigma2;         /* predictive variance of f (standardized units) */
  double gamma_shape;    /* moment-matched Gamma law of the intensity */
  double gamma_scale;    /* original units */
  double mean_intensity; /* original units */
  double q10;
  double q50;
  double q90;
  int variance_clamped;
} lbpp_prediction;

/* x: count points in the model's original domain. */
LBPP_API lbpp_status lbpp_model_predict(const lbpp_model* model,
                                        const double* x, size_t count,
                                        lbpp_prediction* out);
/* Posterior expected number of points in the domain. */
LBPP_API lbpp_status lbpp_model_integrated_intensity(const lbpp_model* model,
                                                     double* out);
/* config_json: optional JSON object stored alongside the model (may be NULL). */
LBPP_API lbpp_status lbpp_model_save(const lbpp_model* model, const char* path,
                                     const char* config_json);
LBPP_API lbpp_status lbpp_model_load(const char* path, lbpp_model** out);
LBPP_API void lbpp_model_free(lbpp_model* model);

/* ---- hyperparameter selection (type-II maximum likelihood) -------------- */

/* Searched parameter: "a", "b", "ab" (a = b) for the cosine family,
 * "gamma", "lengthscale" for the Gaussian family. Bounds are log10. */
typedef struct lbpp_param_range {
  const char* name;
  double log10_lower;
  double log10_upper;
  size_t grid_points;
} lbpp_param_range;

typedef enum lbpp_strategy {
  LBPP_STRATEGY_GRID = 0,
  LBPP_STRATEGY_NELDER_MEAD = 1
} lbpp_strategy;

LBPP_API lbpp_status lbpp_select(const lbpp_pattern* data,
                                 const lbpp_family* family,
                                 const lbpp_param_range* ranges,
                                 size_t num_ranges, lbpp_strategy strategy,
                                 int budget, const lbpp_fit_options* options,
                                 lbpp_selection** out);

typedef struct lbpp_selection_row {
  int converged;
  size_t basis_size;
  int iterations;
  lbpp_marginal marginal;
  const char* failure; /* owned by the selection; "" when converged */
} lbpp_selection_row;

/* Rows are ordered by total log marginal, failed fits last. */
LBPP_API size_t lbpp_selection_rows(const lbpp_selection* selection);
LBPP_API size_t lbpp_selection_num_params(const lbpp_selection* selection);
LBPP_API const char* lbpp_selection_param_name(const lbpp_selection* selection,
                                               size_t k);
LBPP_API int lbpp_selection_evaluations(const lbpp_selection* selection);
/* params receives num_params values (linear scale); may be NULL. */
LBPP_API lbpp_status lbpp_selection_row_get(const lbpp_selection* selection,
                                            size_t row, lbpp_selection_row* out,
                                            double* params);
/* Copies the best row's parameters into family. */
LBPP_API lbpp_status lbpp_selection_apply_best(const lbpp_selection* selection,
                                               lbpp_family* family);
LBPP_API lbpp_status lbpp_selection_write_csv(const lbpp_selection* selection,
                                              const char* path,
                                              const char* comment);
LBPP_API void lbpp_selection_free(lbpp_selection* selection);

/* ---- intensity functions ------------------------------------------------ */

/* Posterior mean intensity of a fitted model. */
LBPP_API lbpp_status lbpp_intensity_from_model(const lbpp_model* model,
                                               lbpp_intensity** out);
/* Edge-corrected Gaussian kernel smoother. bandwidth <= 0 selects it by
 * leave-one-out likelihood; the value used (standardized coordinates) is
 * written to chosen_bandwidth if non-NULL. */
LBPP_API lbpp_status lbpp_intensity_ks(const lbpp_pattern* data,
                                       double bandwidth,
                                       double* chosen_bandwidth,
                                       lbpp_intensity** out);
/* Synthetic 1-d intensity on [0, 10]: half the square of a Gaussian-kernel
 * GP draw (amplitude 5, lengthscale 0.5). */
LBPP_API lbpp_status lbpp_intensity_toy(uint64_t seed, lbpp_intensity** out);
LBPP_API lbpp_status lbpp_intensity_constant(size_t dim, const double* lower,
                                             const double* upper, double value,
                                             lbpp_intensity** out);
LBPP_API size_t lbpp_intensity_dim(const lbpp_intensity* intensity);
LBPP_API lbpp_status lbpp_intensity_get_domain(const lbpp_intensity* intensity,
                                               double* lower, double* upper);
LBPP_API lbpp_status lbpp_intensity_eval(const lbpp_intensity* intensity,
                                         const double* x, size_t count,
                                         double* out);
/* Poisson process draw by thinning; needs an intensity with a known bound. */
LBPP_API lbpp_status lbpp_intensity_sample(const lbpp_intensity* intensity,
                                           uint64_t seed, lbpp_pattern** out);
LBPP_API void lbpp_intensity_free(lbpp_intensity* intensity);

/* ---- evaluation ---------------------------------------------------------
 * Integrals use a midpoint rule with points_per_dim nodes per axis
 * (0 = default resolution). */

LBPP_API lbpp_status lbpp_eval_integral(const lbpp_intensity* intensity,
                                        size_t points_per_dim, double* out);
LBPP_API lbpp_status lbpp_eval_l2(const lbpp_intensity* estimate,
                                  const lbpp_intensity* truth,
                                  size_t points_per_dim, double* out);
LBPP_API lbpp_status lbpp_eval_expected_ll(const lbpp_intensity* truth,
                                           const lbpp_intensity* estimate,
                                           size_t points_per_dim, double* out);
LBPP_API lbpp_status lbpp_eval_test_ll(const lbpp_intensity* estimate,
                                       const lbpp_pattern* test,
                                       size_t points_per_dim, double* out);
LBPP_API lbpp_status lbpp_eval_kl(const lbpp_intensity* f,
                                  const lbpp_intensity* g,
                                  size_t points_per_dim, double* out);

#ifdef __cplusplus
}
#endif

#endif
