#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cosine_basis.hpp"
#include "domain.hpp"
#include "inference.hpp"
#include "rng.hpp"

#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace lbpp::test {

inline std::string data_path(const std::string& name) {
  return std::string(LBPP_DATA_DIR) + "/" + name;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

inline NormalizedPattern standard_pattern(const Points& u) {
  const auto dom = BoxDomain::standard(u.rows());
  return normalize(PointPattern(u, dom));
}

inline Points uniform_points(Eigen::Index d, Eigen::Index m, Rng& rng, double lo = 0.0,
                             double hi = std::numbers::pi) {
  boost::random::uniform_01<double> u;
  Points p(d, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < d; ++j) p(j, i) = lo + (hi - lo) * u(rng);
  return p;
}

inline double log_uniform(Rng& rng, double lo, double hi) {
  boost::random::uniform_01<double> u;
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * u(rng));
}

// A small random 1-d or 2-d problem fitted with the cosine basis.
struct SmallProblem {
  std::shared_ptr<const SpectralBasis> basis;
  NormalizedPattern data;
  FittedModel model;
};

inline SmallProblem small_problem(std::uint64_t seed) {
  auto rng = make_rng(seed);
  boost::random::uniform_int_distribution<int> dim_draw(1, 2);
  const Eigen::Index d = dim_draw(rng);
  const Eigen::Index n = d == 1 ? boost::random::uniform_int_distribution<int>(2, 20)(rng)
                                : boost::random::uniform_int_distribution<int>(2, 4)(rng);
  const Eigen::Index m = boost::random::uniform_int_distribution<int>(1, 40)(rng);
  ThinPlateParams tp{log_uniform(rng, 0.1, 10.0), log_uniform(rng, 0.1, 10.0), 2};
  auto basis = std::make_shared<const SpectralBasis>(build_cosine_basis(d, n, tp));
  auto data = standard_pattern(uniform_points(d, m, rng));
  auto model = fit_mode(basis, data);
  return {basis, data, std::move(model)};
}

// Q = (I + Lambda^-1 + W)^-1 built directly in weight space.
inline Eigen::MatrixXd dense_posterior_cov(const FittedModel& model) {
  const auto& lam = model.basis().eigenvalues();
  const auto& phi = model.design_data();
  const Eigen::VectorXd f = phi * model.w_hat();
  Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(lam.size(), lam.size());
  prec.diagonal() += lam.cwiseInverse();
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    prec += 2.0 * phi.row(i).transpose() * phi.row(i) / (f[i] * f[i]);
  }
  return prec.inverse();
}

// Direct weight-space log marginal: log h - w'Zw/2 - log|Lambda|/2 + log|Q|/2.
inline double dense_log_marginal(const FittedModel& model) {
  const auto& lam = model.basis().eigenvalues();
  const Eigen::VectorXd f = model.design_data() * model.w_hat();
  double log_h = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) log_h += std::log(0.5 * f[i] * f[i]);
  const Eigen::VectorXd& w = model.w_hat();
  const double quad = w.squaredNorm() + (w.array().square() / lam.array()).sum();
  const Eigen::MatrixXd q = dense_posterior_cov(model);
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  const double logdet_q = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return log_h - 0.5 * quad - 0.5 * lam.array().log().sum() + 0.5 * logdet_q;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace lbpp::test
