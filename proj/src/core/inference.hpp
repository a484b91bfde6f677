#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "domain.hpp"
#include "spectral_basis.hpp"

namespace lbpp {

struct FitOptions {
  int max_newton_iters = 100;
  // Bound on the max-abs gradient of the mode objective.
  double grad_tol = 1e-10;
  double ls_shrink = 0.5;
  double ls_sufficient_decrease = 1e-4;
  // Start point; when empty the flat-rate initialization is used.
  std::optional<Eigen::VectorXd> initial_weights;
};

void validate(const FitOptions& opts);

// Terms of the approximate log marginal likelihood.
struct MarginalParts {
  double data_term = 0.0;       // sum_i log(f(x_i)^2 / 2)
  double quadratic_term = 0.0;  // w' (I + Lambda^-1) w
  double v_term = 0.0;          // sum_i log(1 / (1 + lambda_i))
  double logdet_s = 0.0;        // log |S|
  double constant = 0.0;        // m log 2

  [[nodiscard]] double total() const {
    return data_term - 0.5 * quadratic_term +
           0.5 * (v_term - logdet_s + constant);
  }
};

inline constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

// Laplace posterior over the basis weights at its mode, plus everything the
// predictive and evidence computations reuse.
class FittedModel {
 public:
  [[nodiscard]] const SpectralBasis& basis() const { return *basis_; }
  [[nodiscard]] std::shared_ptr<const SpectralBasis> basis_ptr() const {
    return basis_;
  }
  [[nodiscard]] const NormalizedPattern& data() const { return data_; }
  [[nodiscard]] const Eigen::VectorXd& w_hat() const { return w_hat_; }
  [[nodiscard]] const Eigen::VectorXd& alpha_hat() const { return alpha_hat_; }
  [[nodiscard]] const Eigen::VectorXd& f_at_data() const { return f_data_; }
  [[nodiscard]] const Eigen::MatrixXd& design_data() const { return design_; }
  [[nodiscard]] const Eigen::MatrixXd& k_tilde_xx() const { return k_tilde_; }
  [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& s_factor() const {
    return s_factor_;
  }
  [[nodiscard]] const std::vector<double>& objective_trace() const {
    return trace_;
  }
  [[nodiscard]] int iterations() const { return iterations_; }
  [[nodiscard]] const MarginalParts& log_marginal_parts() const {
    return parts_;
  }
  [[nodiscard]] Eigen::Index num_points() const { return f_data_.size(); }

  // Caches K~(X,X), alpha and the factorization of S for a given mode.
  static FittedModel assemble(std::shared_ptr<const SpectralBasis> basis,
                              NormalizedPattern data, Eigen::VectorXd w_hat,
                              std::vector<double> trace, int iterations);

 private:
  FittedModel(std::shared_ptr<const SpectralBasis> basis,
              NormalizedPattern data)
      : basis_(std::move(basis)), data_(std::move(data)) {}

  std::shared_ptr<const SpectralBasis> basis_;
  NormalizedPattern data_;
  Eigen::VectorXd w_hat_;
  Eigen::VectorXd alpha_hat_;
  Eigen::VectorXd f_data_;
  Eigen::MatrixXd design_;
  Eigen::MatrixXd k_tilde_;
  Eigen::LLT<Eigen::MatrixXd> s_factor_;
  std::vector<double> trace_;
  int iterations_ = 0;
  MarginalParts parts_;
};

// log h(X|w) - w'(I + Lambda^-1)w / 2 - log|Lambda| / 2 - (N/2) log 2pi,
// or kInfeasible if f(x_i) = 0 at some data point.
double joint_log_density(const Eigen::VectorXd& w, const SpectralBasis& basis,
                         const Points& data);

// The mode objective log h(X|w) - w'(I + Lambda^-1)w / 2 and its gradient,
// given the design matrix of the data.
double mode_objective(const Eigen::VectorXd& w, const Eigen::MatrixXd& design,
                      const Eigen::VectorXd& eigenvalues);
Eigen::VectorXd mode_gradient(const Eigen::VectorXd& w,
                              const Eigen::MatrixXd& design,
                              const Eigen::VectorXd& eigenvalues);

// Weights of the constant function with intensity m / vol (the homogeneous
// rate), falling back to a kernel-sum start if the projection is not positive
// at every data point.
Eigen::VectorXd flat_rate_start(const SpectralBasis& basis,
                                const Eigen::MatrixXd& design);

// Newton ascent on the mode objective with a sign-preserving backtracking
// line search. Requires at least one data point.
FittedModel fit_mode(std::shared_ptr<const SpectralBasis> basis,
                     const NormalizedPattern& data,
                     const FitOptions& opts = {});

// alpha_i = 2 / f(x_i).
Eigen::VectorXd extract_alpha(const FittedModel& model);

// |w - (I + Lambda^-1)^-1 grad log h(X|w)|_inf at the mode.
double stationarity_residual(const FittedModel& model);

// Gradient of sum_i 2 log|K~_i. alpha| - alpha' K~ alpha / 2 at alpha_hat.
Eigen::VectorXd dual_objective_gradient(const FittedModel& model);

}  // namespace lbpp
