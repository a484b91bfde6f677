#include "inference.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace lbpp {

void validate(const FitOptions& opts) {
  if (opts.max_newton_iters < 1) throw_invalid("max_newton_iters must be >= 1");
  if (!(opts.grad_tol > 0.0)) throw_invalid("grad_tol must be > 0");
  if (!(opts.ls_shrink > 0.0 && opts.ls_shrink < 1.0)) {
    throw_invalid("line-search shrink must lie in (0, 1)");
  }
  if (!(opts.ls_sufficient_decrease > 0.0 && opts.ls_sufficient_decrease < 1.0)) {
    throw_invalid("sufficient-decrease constant must lie in (0, 1)");
  }
}

namespace {

Eigen::ArrayXd prior_precision(const Eigen::VectorXd& eigenvalues) {
  return 1.0 + eigenvalues.array().inverse();
}

double data_term(const Eigen::VectorXd& f) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (f[i] == 0.0) return kInfeasible;
    s += std::log(0.5 * f[i] * f[i]);
  }
  return s;
}

}  // namespace

double joint_log_density(const Eigen::VectorXd& w, const SpectralBasis& basis,
                         const Points& data) {
  if (w.size() != basis.size()) throw_invalid("weight vector has wrong length");
  const Eigen::VectorXd f = basis.design_matrix(data) * w;
  const double h = data_term(f);
  if (h == kInfeasible) return kInfeasible;
  const auto n = static_cast<double>(basis.size());
  return h - 0.5 * (w.array().square() * prior_precision(basis.eigenvalues())).sum() -
         0.5 * basis.eigenvalues().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

double mode_objective(const Eigen::VectorXd& w, const Eigen::MatrixXd& design,
                      const Eigen::VectorXd& eigenvalues) {
  const double h = data_term(design * w);
  if (h == kInfeasible) return kInfeasible;
  return h - 0.5 * (w.array().square() * prior_precision(eigenvalues)).sum();
}

Eigen::VectorXd mode_gradient(const Eigen::VectorXd& w,
                              const Eigen::MatrixXd& design,
                              const Eigen::VectorXd& eigenvalues) {
  const Eigen::VectorXd f = design * w;
  const Eigen::VectorXd inv = (2.0 / f.array()).matrix();
  return design.transpose() * inv -
         (prior_precision(eigenvalues) * w.array()).matrix();
}

Eigen::VectorXd flat_rate_start(const SpectralBasis& basis,
                                const Eigen::MatrixXd& design) {
  const auto m = static_cast<double>(design.rows());
  const auto d = basis.dim();
  const double level = std::sqrt(2.0 * m / basis.domain_measure());

  auto positive = [&](const Eigen::VectorXd& w) {
    return design.rows() == 0 || ((design * w).array() > 0.0).all();
  };

  Eigen::VectorXd w = Eigen::VectorXd::Zero(basis.size());
  if (std::holds_alternative<CosineDescriptor>(basis.descriptor())) {
    // Index 0 is beta = 0, phi_0 = pi^{-d/2}.
    w[0] = level * std::pow(std::numbers::pi, 0.5 * static_cast<double>(d));
  } else {
    const Eigen::Index per_dim = d == 1 ? 512 : (d == 2 ? 64 : 12);
    const Points grid = midpoint_grid(basis.domain(), per_dim);
    const double weight =
        basis.domain_measure() / static_cast<double>(grid.cols());
    w = weight * level *
        basis.design_matrix(grid).transpose() *
        Eigen::VectorXd::Ones(grid.cols());
  }
  if (positive(w)) return w;

  // Kernel-sum start: f(x) = sum_j k_N(x, x_j), positive for positive kernels.
  w = basis.eigenvalues().asDiagonal() * design.transpose() *
      Eigen::VectorXd::Ones(design.rows());
  const double norm = w.norm();
  if (norm > 0.0) w *= std::sqrt(2.0 * m) / norm;
  if (positive(w)) return w;
  throw_numerical(
      "could not find a start point with positive f at every data point");
}

FittedModel FittedModel::assemble(std::shared_ptr<const SpectralBasis> basis,
                                  NormalizedPattern data, Eigen::VectorXd w_hat,
                                  std::vector<double> trace, int iterations) {
  if (!basis) throw_invalid("model needs a basis");
  if (w_hat.size() != basis->size()) throw_invalid("mode has wrong length");
  FittedModel model(std::move(basis), std::move(data));
  const auto& b = *model.basis_;
  const Points& x = model.data_.pattern.points();
  const Eigen::Index m = x.cols();

  model.design_ = b.design_matrix(x);
  Eigen::VectorXd f = model.design_ * w_hat;
  // Canonical sign: the mode with nonnegative mean f over the data.
  if (m > 0 && f.mean() < 0.0) {
    w_hat = -w_hat;
    f = -f;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(std::abs(f[i]) >= 1e-300)) {
      std::ostringstream os;
      os << "degenerate fit: f(x_" << i << ") = " << f[i];
      throw_numerical(os.str());
    }
  }
  model.w_hat_ = std::move(w_hat);
  model.f_data_ = f;
  model.alpha_hat_ = (2.0 / f.array()).matrix();
  model.trace_ = std::move(trace);
  model.iterations_ = iterations;

  const Eigen::VectorXd shrink = b.shrinkage();
  const Eigen::MatrixXd scaled = model.design_ * shrink.cwiseSqrt().asDiagonal();
  model.k_tilde_ = Eigen::MatrixXd(m, m);
  model.k_tilde_.setZero();
  model.k_tilde_.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  model.k_tilde_.triangularView<Eigen::StrictlyUpper>() =
      model.k_tilde_.transpose();

  const Eigen::VectorXd& alpha = model.alpha_hat_;
  Eigen::MatrixXd s =
      (model.k_tilde_.array() * (alpha * alpha.transpose()).array()).matrix();
  s.diagonal().array() += 2.0;
  model.s_factor_.compute(s);
  if (model.s_factor_.info() != Eigen::Success) {
    throw_numerical("S = K~ o (alpha alpha') + 2I is not positive definite");
  }

  MarginalParts& p = model.parts_;
  p.data_term = data_term(f);
  p.quadratic_term =
      (model.w_hat_.array().square() * prior_precision(b.eigenvalues())).sum();
  p.v_term = -b.eigenvalues().array().log1p().sum();
  p.logdet_s = 2.0 * model.s_factor_.matrixLLT().diagonal().array().log().sum();
  p.constant = static_cast<double>(m) * std::numbers::ln2;
  return model;
}

FittedModel fit_mode(std::shared_ptr<const SpectralBasis> basis,
                     const NormalizedPattern& data, const FitOptions& opts) {
  validate(opts);
  if (!basis) throw_invalid("fit needs a basis");
  const Eigen::Index m = data.pattern.size();
  if (m < 1) throw_invalid("fit needs at least one data point");
  if (data.pattern.dim() != basis->dim()) {
    throw_invalid("data and basis dimensions differ");
  }

  const Eigen::MatrixXd design = basis->design_matrix(data.pattern.points());
  const Eigen::VectorXd& lambda = basis->eigenvalues();
  const Eigen::VectorXd precision = prior_precision(lambda).matrix();

  Eigen::VectorXd w;
  if (opts.initial_weights) {
    w = *opts.initial_weights;
    if (w.size() != basis->size()) throw_invalid("initial weights have wrong length");
  } else {
    w = flat_rate_start(*basis, design);
  }

  // The barrier keeps every f(x_i) on the side of zero it starts on.
  Eigen::VectorXd f = design * w;
  const Eigen::ArrayXd sign = f.array().sign();
  if ((sign == 0.0).any()) throw_invalid("start point has f(x_i) = 0");
  auto feasible = [&](const Eigen::VectorXd& fv) {
    return ((fv.array() * sign) > 0.0).all();
  };

  double obj = mode_objective(w, design, lambda);
  std::vector<double> trace{obj};
  Eigen::MatrixXd hess(basis->size(), basis->size());
  Eigen::LLT<Eigen::MatrixXd> llt;

  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd inv_f = f.cwiseInverse();
    const Eigen::VectorXd grad =
        2.0 * design.transpose() * inv_f - precision.cwiseProduct(w);
    if (grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      return FittedModel::assemble(std::move(basis), data, std::move(w),
                                   std::move(trace), iter);
    }
    if (iter == opts.max_newton_iters) {
      std::ostringstream os;
      os << "Newton iteration did not reach |grad|_inf <= " << opts.grad_tol
         << " in " << iter << " iterations (final |grad|_inf = "
         << grad.lpNorm<Eigen::Infinity>() << ")";
      throw ConvergenceError(os.str(), trace);
    }

    // -Hessian = I + Lambda^-1 + 2 sum_i phi_i phi_i' / f_i^2
    const Eigen::MatrixXd scaled =
        (std::numbers::sqrt2 * inv_f).asDiagonal() * design;
    hess.setZero();
    hess.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    hess.diagonal() += precision;
    llt.compute(hess.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) throw_numerical("Newton system is not positive definite");
    const Eigen::VectorXd step = llt.solve(grad);
    const double slope = grad.dot(step);

    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd w_new, f_new;
    double obj_new = kInfeasible;
    while (t > 1e-16) {
      w_new = w + t * step;
      f_new = design * w_new;
      if (feasible(f_new)) {
        obj_new = mode_objective(w_new, design, lambda);
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(obj));
        if (obj_new >= obj + opts.ls_sufficient_decrease * t * slope - noise) {
          accepted = true;
          break;
        }
      }
      t *= opts.ls_shrink;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "line search failed at iteration " << iter
         << " (|grad|_inf = " << grad.lpNorm<Eigen::Infinity>() << ")";
      throw ConvergenceError(os.str(), trace);
    }
    w = std::move(w_new);
    f = std::move(f_new);
    obj = obj_new;
    trace.push_back(obj);
  }
}

Eigen::VectorXd extract_alpha(const FittedModel& model) {
  const Eigen::VectorXd& f = model.f_at_data();
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (!(std::abs(f[i]) >= 1e-300)) throw_numerical("degenerate fit: f(x_i) = 0");
  }
  return (2.0 / f.array()).matrix();
}

double stationarity_residual(const FittedModel& model) {
  const Eigen::VectorXd& lambda = model.basis().eigenvalues();
  const Eigen::VectorXd grad_h =
      2.0 * model.design_data().transpose() * model.f_at_data().cwiseInverse();
  const Eigen::VectorXd fixed_point =
      (grad_h.array() / prior_precision(lambda)).matrix();
  return (model.w_hat() - fixed_point).lpNorm<Eigen::Infinity>();
}

Eigen::VectorXd dual_objective_gradient(const FittedModel& model) {
  const Eigen::MatrixXd& k = model.k_tilde_xx();
  const Eigen::VectorXd& alpha = model.alpha_hat();
  const Eigen::VectorXd ka = k * alpha;
  return k * (2.0 * ka.cwiseInverse() - alpha);
}

}  // namespace lbpp
