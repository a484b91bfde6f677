#include <numbers>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "doctest.h"
#include "errors.hpp"
#include "evaluation.hpp"
#include "predictive.hpp"
#include "simulation.hpp"
#include "support.hpp"

using namespace lbpp;
constexpr double kPi = std::numbers::pi;

namespace {

IntensityFn piecewise(const std::vector<double>& levels) {
  const BoxDomain dom(Eigen::VectorXd::Zero(1),
                      Eigen::VectorXd::Constant(1, static_cast<double>(levels.size())));
  const double top = *std::max_element(levels.begin(), levels.end());
  return IntensityFn{dom,
                     [levels](const Points& x) {
                       Eigen::VectorXd v(x.cols());
                       for (Eigen::Index i = 0; i < x.cols(); ++i) {
                         const auto c = std::min<std::size_t>(static_cast<std::size_t>(x(0, i)),
                                                              levels.size() - 1);
                         v[i] = levels[c];
                       }
                       return v;
                     },
                     top, false, "piecewise"};
}

}  // namespace

TEST_CASE("prior weight draws") {
  const auto basis = build_cosine_basis(1, 8, {0.5, 0.5, 2});
  CHECK(sample_gp_weights(basis, 3) == sample_gp_weights(basis, 3));
  CHECK(sample_gp_weights(basis, 3) != sample_gp_weights(basis, 4));
  const int n = 20000;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(8, 8);
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd w = sample_gp_weights(basis, derive_seed(9, static_cast<std::uint64_t>(k)));
    cov += w * w.transpose();
  }
  cov /= n;
  const Eigen::MatrixXd target = basis.eigenvalues().asDiagonal();
  CHECK((cov - target).cwiseAbs().maxCoeff() <= 0.05 * basis.eigenvalues().maxCoeff());
}

TEST_CASE("toy suite") {
  const Quadrature q(toy_domain(), 4096);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto lam = make_toy_intensity(ToyConfig{}, toy_domain(), seed);
    const Points grid = midpoint_grid(toy_domain(), 4096);
    const Eigen::VectorXd v = lam.eval(grid);
    CHECK(v.minCoeff() >= 0.0);
    CHECK(lam.upper_bound >= v.maxCoeff());
    CHECK(lam.bound_is_empirical);
    const double count = q.integrate(lam.eval);
    CHECK(std::isfinite(count));
    CHECK(count > 0.0);
    // Same seed, same function.
    const auto again = make_toy_intensity(ToyConfig{}, toy_domain(), seed);
    CHECK(again.eval(grid.leftCols(50)) == lam.eval(grid.leftCols(50)));
  }
}

TEST_CASE("thinning: constant and zero intensity") {
  const BoxDomain dom = BoxDomain::standard(2);
  const double c = 1.5;
  const auto lam = constant_intensity(dom, c);
  const int reps = 2000;
  double s = 0.0, ss = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double k = static_cast<double>(sample_poisson_thinning(lam, derive_seed(1, r)).size());
    s += k;
    ss += k * k;
  }
  const double mean = s / reps, var = ss / reps - mean * mean;
  const double target = c * dom.volume();
  CHECK(std::abs(mean - target) <= 3.0 * std::sqrt(target / reps));
  // Poisson: variance equals the mean (sd of the sample variance ~ sqrt(2/reps) * var).
  CHECK(std::abs(var - target) <= 4.0 * std::sqrt(2.0 / reps) * target + 3.0 * std::sqrt(target / reps));

  const auto zero = constant_intensity(dom, 0.0);
  for (int r = 0; r < 20; ++r) CHECK(sample_poisson_thinning(zero, r).size() == 0);

  const auto p1 = sample_poisson_thinning(lam, 5);
  const auto p2 = sample_poisson_thinning(lam, 5);
  CHECK(p1.points() == p2.points());
}

TEST_CASE("thinning: linear intensity splits 1:3") {
  const BoxDomain dom = BoxDomain::standard(1);
  const IntensityFn lam{dom, [](const Points& x) { return Eigen::VectorXd(x.row(0).transpose()); },
                        kPi, false, "linear"};
  double left = 0, right = 0;
  for (int r = 0; r < 2000; ++r) {
    const auto p = sample_poisson_thinning(lam, derive_seed(2, r));
    for (Eigen::Index i = 0; i < p.size(); ++i) (p.points()(0, i) < kPi / 2 ? left : right) += 1.0;
  }
  // left ~ Poisson(2000 pi^2/8), right ~ Poisson(2000 * 3 pi^2/8).
  const double ratio = left / right;
  const double se = ratio * std::sqrt(1.0 / left + 1.0 / right);
  CHECK(std::abs(ratio - 1.0 / 3.0) <= 3.0 * se);
}

TEST_CASE("thinning: cell counts are independent Poissons") {
  const std::vector<double> levels{1.0, 3.0, 0.5, 2.0};
  const auto lam = piecewise(levels);
  const int reps = 5000;
  std::vector<std::vector<int>> counts(4, std::vector<int>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto p = sample_poisson_thinning(lam, derive_seed(3, r));
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      counts[static_cast<std::size_t>(p.points()(0, i))][static_cast<std::size_t>(r)]++;
    }
  }
  double chi2 = 0.0;
  int df = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    const boost::math::poisson_distribution<double> pois(levels[c]);
    // Bins 0..K-1 and a tail bin, each with expected count >= 5.
    int k_max = 0;
    while (reps * boost::math::pdf(pois, k_max) >= 5.0 &&
           reps * boost::math::cdf(boost::math::complement(pois, k_max)) >= 5.0) {
      ++k_max;
    }
    std::vector<double> obs(static_cast<std::size_t>(k_max + 1), 0.0);
    for (int v : counts[c]) obs[static_cast<std::size_t>(std::min(v, k_max))] += 1.0;
    for (int k = 0; k <= k_max; ++k) {
      const double p = k < k_max ? boost::math::pdf(pois, k)
                                 : boost::math::cdf(boost::math::complement(pois, k - 1));
      const double e = reps * p;
      chi2 += (obs[static_cast<std::size_t>(k)] - e) * (obs[static_cast<std::size_t>(k)] - e) / e;
    }
    df += k_max;
  }
  // Independence between cells: the joint (cell 0, cell 1) table against the
  // product of Poisson marginals.
  {
    const boost::math::poisson_distribution<double> p0(levels[0]), p1(levels[1]);
    const int k0 = 3, k1 = 5;
    std::vector<double> obs((k0 + 1) * (k1 + 1), 0.0);
    for (int r = 0; r < reps; ++r) {
      const int a = std::min(counts[0][static_cast<std::size_t>(r)], k0);
      const int b = std::min(counts[1][static_cast<std::size_t>(r)], k1);
      obs[static_cast<std::size_t>(a * (k1 + 1) + b)] += 1.0;
    }
    auto mass = [](const auto& d, int k, int kmax) {
      return k < kmax ? boost::math::pdf(d, k) : boost::math::cdf(boost::math::complement(d, k - 1));
    };
    for (int a = 0; a <= k0; ++a) {
      for (int b = 0; b <= k1; ++b) {
        const double e = reps * mass(p0, a, k0) * mass(p1, b, k1);
        const double o = obs[static_cast<std::size_t>(a * (k1 + 1) + b)];
        chi2 += (o - e) * (o - e) / e;
      }
    }
    df += (k0 + 1) * (k1 + 1) - 1;
  }
  const double p_value = boost::math::gamma_q(0.5 * df, 0.5 * chi2);
  CHECK(p_value > 0.001);
}

TEST_CASE("thinning refuses a violated bound") {
  auto lam = constant_intensity(BoxDomain::standard(1), 2.0);
  lam.upper_bound = 1.0;
  try {
    (void)sample_poisson_thinning(lam, 1);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
  }
}

TEST_CASE("posterior weight draws centre on the mode") {
  const auto p = lbpp::test::small_problem(2);
  const Eigen::MatrixXd q = lbpp::test::dense_posterior_cov(p.model);
  const int n = 20000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p.model.w_hat().size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(mean.size(), mean.size());
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd w = sample_posterior_weights(p.model, derive_seed(4, k));
    mean += w;
    cov += (w - p.model.w_hat()) * (w - p.model.w_hat()).transpose();
  }
  mean /= n;
  cov /= n;
  const Eigen::VectorXd se = (q.diagonal() / n).cwiseSqrt();
  CHECK(((mean - p.model.w_hat()).cwiseQuotient(se)).cwiseAbs().maxCoeff() <= 5.0);
  CHECK((cov - q).cwiseAbs().maxCoeff() <= 0.05 * q.diagonal().maxCoeff());
}
