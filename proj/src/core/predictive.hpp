#pragma once

#include <vector>

#include <Eigen/Dense>

#include "inference.hpp"
#include "intensity.hpp"

namespace lbpp {

// Gaussian predictive of f at a point and the moment-matched Gamma law of
// lambda = f^2 / 2 (shape/scale parameterization).
struct PredictiveDist {
  double mu = 0.0;
  double sigma2 = 0.0;
  double gamma_shape = 0.0;
  double gamma_scale = 0.0;
  bool variance_clamped = false;

  [[nodiscard]] double mean_intensity() const {
    return 0.5 * (mu * mu + sigma2);
  }
};

struct VarianceEstimate {
  double value = 0.0;
  bool clamped = false;
};

// Phi(x)' w_hat, x in standard coordinates.
double predictive_mean_f(const FittedModel& model,
                         const Eigen::Ref<const Eigen::VectorXd>& x);

// Dual form sum_i alpha_i k~(x_i, x); equal to predictive_mean_f at the mode.
double predictive_mean_f_dual(const FittedModel& model,
                              const Eigen::Ref<const Eigen::VectorXd>& x);

// k~(x,x) - (alpha o k~(X,x))' S^-1 (alpha o k~(X,x)). Values below
// 1e-14 k~(x,x) are clamped to that floor and flagged.
VarianceEstimate predictive_var_f(const FittedModel& model,
                                  const Eigen::Ref<const Eigen::VectorXd>& x);

PredictiveDist intensity_posterior(double mu, double sigma2);

double gamma_cdf(const PredictiveDist& dist, double x);
double gamma_quantile(const PredictiveDist& dist, double p);

// Full predictive at one point / at every column of `x` (standard coords).
// The batch path builds one design matrix per block.
PredictiveDist predict(const FittedModel& model,
                       const Eigen::Ref<const Eigen::VectorXd>& x);
std::vector<PredictiveDist> predict_batch(const FittedModel& model,
                                          const Points& x);

// Posterior mean intensity (mu^2 + sigma^2)/2, optionally times the
// jacobian to express it per unit volume of the original domain.
double mean_intensity(const FittedModel& model,
                      const Eigen::Ref<const Eigen::VectorXd>& x,
                      bool original_units = false);

// Integral of the posterior mean intensity over the domain, i.e. the expected
// count. Closed form for exactly orthonormal bases; midpoint quadrature
// otherwise.
double integrated_mean_intensity(const FittedModel& model);

// Posterior mean intensity as an intensity on the model's original domain,
// in original units.
IntensityFn mean_intensity_fn(std::shared_ptr<const FittedModel> model);

}  // namespace lbpp
