#include "predictive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"
#include "evaluation.hpp"
#include "kernels.hpp"

namespace lbpp {

namespace {

constexpr Eigen::Index kBlock = 2048;
constexpr double kVarianceFloor = 1e-14;

struct FMoments {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma2;
  std::vector<bool> clamped;
};

// Mean and variance of f at a block of standard-coordinate points.
FMoments f_moments(const FittedModel& model, const Points& x) {
  const SpectralBasis& basis = model.basis();
  const Eigen::MatrixXd design = basis.design_matrix(x);  // q x N
  const Eigen::VectorXd shrink = basis.shrinkage();

  FMoments out;
  out.mu = design * model.w_hat();
  const Eigen::VectorXd prior =
      (design.array().square().rowwise() * shrink.transpose().array())
          .rowwise()
          .sum();

  // alpha o k~(X, x*) for every query column, then L^-1 of it.
  Eigen::MatrixXd v = model.design_data() * shrink.asDiagonal() *
                      design.transpose();  // m x q
  v = model.alpha_hat().asDiagonal() * v;
  model.s_factor().matrixL().solveInPlace(v);
  out.sigma2 = prior - v.colwise().squaredNorm().transpose();

  out.clamped.assign(static_cast<std::size_t>(x.cols()), false);
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const double floor = kVarianceFloor * prior[i];
    if (!(out.sigma2[i] >= floor)) {
      out.sigma2[i] = floor;
      out.clamped[static_cast<std::size_t>(i)] = true;
    }
  }
  return out;
}

}  // namespace

double predictive_mean_f(const FittedModel& model,
                         const Eigen::Ref<const Eigen::VectorXd>& x) {
  return model.basis().row(x).dot(model.w_hat());
}

double predictive_mean_f_dual(const FittedModel& model,
                              const Eigen::Ref<const Eigen::VectorXd>& x) {
  Points p = x;
  const Eigen::MatrixXd k =
      equivalent_kernel_matrix(model.basis(), model.data().pattern.points(), p);
  return model.alpha_hat().dot(k.col(0));
}

VarianceEstimate predictive_var_f(const FittedModel& model,
                                  const Eigen::Ref<const Eigen::VectorXd>& x) {
  Points p = x;
  const FMoments mom = f_moments(model, p);
  return VarianceEstimate{mom.sigma2[0], mom.clamped[0]};
}

PredictiveDist intensity_posterior(double mu, double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2) || !std::isfinite(mu)) {
    std::ostringstream os;
    os << "intensity posterior needs sigma^2 > 0 (got " << sigma2 << ")";
    throw Error(ErrorCode::kDomain, os.str());
  }
  const double mu2 = mu * mu;
  const double second = mu2 + sigma2;
  PredictiveDist d;
  d.mu = mu;
  d.sigma2 = sigma2;
  d.gamma_shape = second * second / (2.0 * sigma2 * (2.0 * mu2 + sigma2));
  d.gamma_scale = (2.0 * mu2 * sigma2 + sigma2 * sigma2) / second;
  return d;
}

double gamma_cdf(const PredictiveDist& dist, double x) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(dist.gamma_shape, x / dist.gamma_scale);
}

double gamma_quantile(const PredictiveDist& dist, double p) {
  if (!(p > 0.0 && p < 1.0)) throw_invalid("quantile level must lie in (0, 1)");
  return dist.gamma_scale * boost::math::gamma_p_inv(dist.gamma_shape, p);
}

PredictiveDist predict(const FittedModel& model,
                       const Eigen::Ref<const Eigen::VectorXd>& x) {
  Points p = x;
  return predict_batch(model, p).front();
}

std::vector<PredictiveDist> predict_batch(const FittedModel& model,
                                          const Points& x) {
  std::vector<PredictiveDist> out;
  out.reserve(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index start = 0; start < x.cols(); start += kBlock) {
    const Eigen::Index n = std::min(kBlock, x.cols() - start);
    const FMoments mom = f_moments(model, Points(x.middleCols(start, n)));
    for (Eigen::Index i = 0; i < n; ++i) {
      PredictiveDist d = intensity_posterior(mom.mu[i], mom.sigma2[i]);
      d.variance_clamped = mom.clamped[static_cast<std::size_t>(i)];
      out.push_back(d);
    }
  }
  return out;
}

double mean_intensity(const FittedModel& model,
                      const Eigen::Ref<const Eigen::VectorXd>& x,
                      bool original_units) {
  const double v = predict(model, x).mean_intensity();
  return original_units ? v * model.data().jacobian : v;
}

double integrated_mean_intensity(const FittedModel& model) {
  const SpectralBasis& basis = model.basis();
  if (!basis.exact_l2_orthonormal()) {
    const Quadrature q = Quadrature::standard_resolution(basis.domain());
    return q.integrate([&](const Points& x) {
      const FMoments mom = f_moments(model, x);
      return Eigen::VectorXd(0.5 * (mom.mu.array().square() + mom.sigma2.array()));
    });
  }
  // 1/2 (w'w + tr Q), tr Q = tr Z^-1 - tr(S^-1 V'Z^-2 V).
  const Eigen::VectorXd shrink = basis.shrinkage();
  Eigen::MatrixXd b = model.alpha_hat().asDiagonal() * model.design_data() *
                      shrink.asDiagonal();  // m x N
  model.s_factor().matrixL().solveInPlace(b);
  const double trace_q = shrink.sum() - b.squaredNorm();
  return 0.5 * (model.w_hat().squaredNorm() + trace_q);
}

IntensityFn mean_intensity_fn(std::shared_ptr<const FittedModel> model) {
  if (!model) throw_invalid("null model");
  const BoxDomain original = model->data().original;
  const double jac = model->data().jacobian;
  auto eval = [model, original, jac](const Points& x) {
    const Points u = to_standard(original, x);
    Eigen::VectorXd out(x.cols());
    for (Eigen::Index start = 0; start < u.cols(); start += kBlock) {
      const Eigen::Index n = std::min(kBlock, u.cols() - start);
      const FMoments mom = f_moments(*model, Points(u.middleCols(start, n)));
      out.segment(start, n) =
          jac * 0.5 * (mom.mu.array().square() + mom.sigma2.array());
    }
    return out;
  };
  IntensityFn fn{original, eval, 0.0, true, "posterior mean intensity"};
  const Eigen::Index d = original.dim();
  const Points grid = midpoint_grid(original, d == 1 ? 4096 : (d == 2 ? 64 : 16));
  fn.upper_bound = 1.2 * eval(grid).maxCoeff();
  return fn;
}

}  // namespace lbpp
