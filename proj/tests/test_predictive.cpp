#include <numbers>

#include <boost/random/normal_distribution.hpp>

#include "doctest.h"
#include "errors.hpp"
#include "evaluation.hpp"
#include "kernels.hpp"
#include "predictive.hpp"
#include "support.hpp"

using namespace lbpp;
constexpr double kPi = std::numbers::pi;

TEST_CASE("predictive mean: primal, dual and data points") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = lbpp::test::small_problem(seed);
    const auto& m = p.model;
    const auto& x = m.data().pattern.points();
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      CHECK(lbpp::test::rel_err(predictive_mean_f(m, x.col(i)), 2.0 / m.alpha_hat()[i]) <= 1e-10);
    }
    auto rng = make_rng(seed + 100);
    const Points q = lbpp::test::uniform_points(x.rows(), 50, rng);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < q.cols(); ++i) {
      const double a = predictive_mean_f(m, q.col(i));
      const double b = predictive_mean_f_dual(m, q.col(i));
      worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-3 * m.f_at_data().cwiseAbs().maxCoeff()));
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("predictive variance equals the weight-space posterior") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = lbpp::test::small_problem(seed);
    const auto& m = p.model;
    const Eigen::MatrixXd q = lbpp::test::dense_posterior_cov(m);
    auto rng = make_rng(seed + 200);
    const Points xs = lbpp::test::uniform_points(m.basis().dim(), 20, rng);
    for (Eigen::Index i = 0; i < xs.cols(); ++i) {
      const Eigen::VectorXd phi = m.basis().row(xs.col(i));
      const double direct = phi.dot(q * phi);
      const auto v = predictive_var_f(m, xs.col(i));
      CHECK(lbpp::test::rel_err(v.value, direct) <= 1e-10);
      CHECK(v.value <= equivalent_kernel(m.basis(), xs.col(i), xs.col(i)) + 1e-10);
      CHECK(v.value > 0.0);
    }
  }
}

TEST_CASE("variance is lower near the data") {
  Points x(1, 1);
  x << 0.5;
  const auto basis = std::make_shared<const SpectralBasis>(build_cosine_basis(1, 32, {0.01, 0.1, 2}));
  const auto m = fit_mode(basis, lbpp::test::standard_pattern(x));
  const double near = predictive_var_f(m, Eigen::VectorXd::Constant(1, 0.5)).value;
  const double far = predictive_var_f(m, Eigen::VectorXd::Constant(1, 2.8)).value;
  CHECK(near < far);
}

TEST_CASE("gamma surrogate") {
  const auto zero = intensity_posterior(0.0, 2.0);
  CHECK(zero.gamma_shape == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(zero.gamma_scale == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(zero.mean_intensity() == doctest::Approx(1.0).epsilon(1e-15));

  const double mu = 1.3, s2 = 0.7;
  const auto d = intensity_posterior(mu, s2);
  CHECK(lbpp::test::rel_err(d.gamma_shape * d.gamma_scale, 0.5 * (mu * mu + s2)) <= 1e-14);
  CHECK(lbpp::test::rel_err(d.gamma_shape * d.gamma_scale * d.gamma_scale,
                            mu * mu * s2 + 0.5 * s2 * s2) <= 1e-14);
  CHECK(lbpp::test::rel_err(d.mean_intensity(), d.gamma_shape * d.gamma_scale) <= 1e-12);

  auto rng = make_rng(77);
  boost::random::normal_distribution<double> z(2.0, 1.0);
  const int n = 1'000'000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = z(rng);
    const double l = 0.5 * f * f;
    s += l;
    ss += l * l;
  }
  const double mean = s / n;
  const double se = std::sqrt((ss / n - mean * mean) / n);
  const auto g = intensity_posterior(2.0, 1.0);
  CHECK(std::abs(mean - g.gamma_shape * g.gamma_scale) <= 3.0 * se);

  for (double bad : {0.0, -1.0}) {
    try {
      (void)intensity_posterior(1.0, bad);
      FAIL("expected a domain error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDomain);
    }
  }
}

TEST_CASE("gamma quantiles") {
  PredictiveDist expo;
  expo.gamma_shape = 1.0;
  expo.gamma_scale = 0.8;
  for (double p : {0.1, 0.5, 0.9}) {
    CHECK(lbpp::test::rel_err(gamma_quantile(expo, p), -0.8 * std::log1p(-p)) <= 1e-12);
  }
  PredictiveDist half;
  half.gamma_shape = 0.5;
  half.gamma_scale = 1.0;
  CHECK(lbpp::test::rel_err(gamma_quantile(half, 0.5), 0.227468211559786) <= 1e-10);
  PredictiveDist g;
  g.gamma_shape = 2.7;
  g.gamma_scale = 0.4;
  CHECK(lbpp::test::rel_err(gamma_quantile(g, 0.1), 0.3685959204416338) <= 1e-10);
  CHECK(lbpp::test::rel_err(gamma_quantile(g, 0.5), 0.9499921630800193) <= 1e-10);
  CHECK(lbpp::test::rel_err(gamma_quantile(g, 0.9), 1.960929834863622) <= 1e-10);
  for (double p : {0.1, 0.5, 0.9}) CHECK(std::abs(gamma_cdf(g, gamma_quantile(g, p)) - p) <= 1e-8);
  CHECK_THROWS_AS(gamma_quantile(g, 0.0), Error);
  CHECK_THROWS_AS(gamma_quantile(g, 1.0), Error);
}

TEST_CASE("batch and pointwise prediction agree, bands are ordered") {
  const auto p = lbpp::test::small_problem(5);
  auto rng = make_rng(6);
  const Points xs = lbpp::test::uniform_points(p.model.basis().dim(), 3000, rng);
  const auto batch = predict_batch(p.model, xs);
  REQUIRE(batch.size() == 3000);
  for (Eigen::Index i = 0; i < xs.cols(); i += 7) {
    const auto one = predict(p.model, xs.col(i));
    const auto& b = batch[static_cast<std::size_t>(i)];
    CHECK(std::abs(one.mu - b.mu) <= 1e-12 * (1.0 + std::abs(one.mu)));
    CHECK(std::abs(one.sigma2 - b.sigma2) <= 1e-12 * (1.0 + one.sigma2));
  }
  for (const auto& b : batch) {
    const double q10 = gamma_quantile(b, 0.1), q50 = gamma_quantile(b, 0.5),
                 q90 = gamma_quantile(b, 0.9);
    REQUIRE(q10 < q50);
    REQUIRE(q50 < q90);
    REQUIRE(b.mean_intensity() > 0.0);
  }
}

TEST_CASE("mean intensity in original units") {
  const BoxDomain dom(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
  const auto red = load_point_pattern(lbpp::test::data_path("redwood.csv"), dom);
  const auto data = normalize(red);
  const auto basis = std::make_shared<const SpectralBasis>(build_cosine_basis(2, 6, {1, 1, 2}));
  const auto m = fit_mode(basis, data);
  const Eigen::Vector2d u(1.0, 2.0);
  CHECK(lbpp::test::rel_err(mean_intensity(m, u, true), kPi * kPi * mean_intensity(m, u)) <= 1e-14);
  const auto pm = std::make_shared<const FittedModel>(m);
  const auto fn = mean_intensity_fn(pm);
  const Eigen::Vector2d x = to_original_point(dom, u);
  CHECK(lbpp::test::rel_err(fn(x), mean_intensity(m, u, true)) <= 1e-12);
  // Same expected count either way.
  const double count_orig = Quadrature(dom, 128).integrate(fn.eval);
  CHECK(lbpp::test::rel_err(count_orig, integrated_mean_intensity(m)) <= 1e-4);
}

TEST_CASE("integrated intensity matches quadrature") {
  auto rng = make_rng(21);
  const auto data = lbpp::test::standard_pattern(lbpp::test::uniform_points(1, 60, rng));
  const auto basis = std::make_shared<const SpectralBasis>(build_cosine_basis(1, 64, {0.05, 0.05, 2}));
  const auto m = fit_mode(basis, data);
  const Quadrature q(BoxDomain::standard(1), 4096);
  const double quad = q.integrate([&](const Points& x) {
    const auto pr = predict_batch(m, x);
    Eigen::VectorXd v(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) v[i] = pr[static_cast<std::size_t>(i)].mean_intensity();
    return v;
  });
  CHECK(lbpp::test::rel_err(integrated_mean_intensity(m), quad) <= 1e-4);

  // Nystrom basis takes the quadrature path; compare with a finer rule.
  const BoxDomain dom(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0));
  const auto ny = std::make_shared<const SpectralBasis>(
      gaussian_nystrom_basis({3.0, 0.3}, dom, {64, {}}, true));
  const auto mn = fit_mode(ny, data);
  const double fine = Quadrature(BoxDomain::standard(1), 8192).integrate([&](const Points& x) {
    Eigen::VectorXd v(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) v[i] = mean_intensity(mn, x.col(i));
    return v;
  });
  CHECK(lbpp::test::rel_err(integrated_mean_intensity(mn), fine) <= 1e-4);
}
