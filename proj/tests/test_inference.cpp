#include <numbers>

#include "doctest.h"
#include "errors.hpp"
#include "kernels.hpp"
#include "predictive.hpp"
#include "simulation.hpp"
#include "support.hpp"

using namespace lbpp;
constexpr double kPi = std::numbers::pi;

namespace {

std::shared_ptr<const SpectralBasis> cosine(Eigen::Index d, Eigen::Index n, double a, double b) {
  return std::make_shared<const SpectralBasis>(build_cosine_basis(d, n, {a, b, 2}));
}

}  // namespace

TEST_CASE("joint log density") {
  const auto basis = cosine(1, 6, 1, 1);
  auto rng = make_rng(4);
  Eigen::VectorXd w = Eigen::VectorXd::Random(6);
  const auto& lam = basis->eigenvalues();
  const double prior = -0.5 * (w.squaredNorm() + (w.array().square() / lam.array()).sum()) -
                       0.5 * lam.array().log().sum() - 3.0 * std::log(2 * kPi);
  CHECK(joint_log_density(w, *basis, Points(1, 0)) == doctest::Approx(prior).epsilon(1e-14));

  const Points x = lbpp::test::uniform_points(1, 9, rng);
  const double c = -2.5;
  const Eigen::VectorXd cw = c * w;
  const double data_w = joint_log_density(w, *basis, x) - joint_log_density(w, *basis, Points(1, 0));
  const double data_cw = joint_log_density(cw, *basis, x) - joint_log_density(cw, *basis, Points(1, 0));
  CHECK(data_cw - data_w == doctest::Approx(2.0 * 9 * std::log(std::abs(c))).epsilon(1e-12));

  CHECK(joint_log_density(Eigen::VectorXd::Zero(6), *basis, x) == kInfeasible);
  CHECK_THROWS_AS(joint_log_density(Eigen::VectorXd::Zero(3), *basis, x), Error);
}

TEST_CASE("analytic gradient matches central differences") {
  auto rng = make_rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index d = 1 + trial % 2;
    const auto basis = cosine(d, d == 1 ? 12 : 4, 0.5, 0.7);
    const Points x = lbpp::test::uniform_points(d, 25, rng);
    const Eigen::MatrixXd phi = basis->design_matrix(x);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(basis->size());
    w[0] = 3.0;
    w.tail(basis->size() - 1) = 0.1 * Eigen::VectorXd::Random(basis->size() - 1);
    REQUIRE((phi * w).cwiseAbs().minCoeff() > 0.5);
    const Eigen::VectorXd g = mode_gradient(w, phi, basis->eigenvalues());
    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      Eigen::VectorXd wp = w, wm = w;
      wp[i] += h;
      wm[i] -= h;
      const double fd = (mode_objective(wp, phi, basis->eigenvalues()) -
                         mode_objective(wm, phi, basis->eigenvalues())) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("single point fit agrees with brute-force maximization") {
  Points x(1, 1);
  x << kPi / 2;
  const auto data = lbpp::test::standard_pattern(x);
  {
    const auto basis = cosine(1, 8, 1, 1);
    const auto model = fit_mode(basis, data);
    CHECK(stationarity_residual(model) <= 1e-8);
    const double total = integrated_mean_intensity(model);
    CHECK(total > 0.0);
    CHECK(total < 3.0);
  }
  const auto basis2 = cosine(1, 2, 1, 1);
  const auto model2 = fit_mode(basis2, data);
  const Eigen::MatrixXd phi = basis2->design_matrix(x);
  // Coarse-to-fine grid search over the two weights, restricted to f > 0.
  Eigen::Vector2d centre(1.0, 0.0);
  double span = 4.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int level = 0; level < 12; ++level) {
    Eigen::Vector2d next = centre;
    for (int i = -40; i <= 40; ++i) {
      for (int j = -40; j <= 40; ++j) {
        const Eigen::Vector2d w = centre + span / 40.0 * Eigen::Vector2d(i, j);
        if ((phi * w)[0] <= 0.0) continue;
        const double v = mode_objective(w, phi, basis2->eigenvalues());
        if (v > best) {
          best = v;
          next = w;
        }
      }
    }
    centre = next;
    span /= 8.0;
  }
  CHECK((model2.w_hat() - centre).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("fitted model invariants") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = lbpp::test::small_problem(seed);
    const auto& m = p.model;
    // Mode and dual stationarity.
    CHECK(stationarity_residual(m) <= 1e-8 * (1.0 + m.w_hat().cwiseAbs().maxCoeff()));
    CHECK(dual_objective_gradient(m).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(mode_gradient(m.w_hat(), m.design_data(), m.basis().eigenvalues()).cwiseAbs().maxCoeff() <= 1e-10);
    // alpha = 2 / f and the weight-space reconstruction.
    const Eigen::VectorXd& f = m.f_at_data();
    CHECK((extract_alpha(m) - m.alpha_hat()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.alpha_hat().cwiseProduct(f) - Eigen::VectorXd::Constant(f.size(), 2.0)).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::VectorXd shrink = m.basis().shrinkage();
    const Eigen::VectorXd w_rec = shrink.cwiseProduct(m.design_data().transpose() * m.alpha_hat());
    CHECK((w_rec - m.w_hat()).norm() <= 1e-8 * (1.0 + m.w_hat().norm()));
    const Eigen::VectorXd f_rec = m.k_tilde_xx() * m.alpha_hat();
    CHECK((f_rec - f).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + f.cwiseAbs().maxCoeff()));
    CHECK(f.mean() >= 0.0);
    // alpha has the sign of f.
    for (Eigen::Index i = 0; i < f.size(); ++i) CHECK((m.alpha_hat()[i] > 0) == (f[i] > 0));
    // The trace never decreases.
    const auto& tr = m.objective_trace();
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] >= tr[i - 1] - 1e-12 * (1.0 + std::abs(tr[i - 1])));
  }
}

TEST_CASE("sign canonicalization") {
  const auto p = lbpp::test::small_problem(3);
  FitOptions opts;
  opts.initial_weights = -p.model.w_hat() * 1.01;
  const auto flipped = fit_mode(p.basis, p.data, opts);
  CHECK((flipped.w_hat() - p.model.w_hat()).cwiseAbs().maxCoeff() <= 1e-8 * (1 + p.model.w_hat().norm()));
  const auto re = FittedModel::assemble(p.basis, p.data, -p.model.w_hat(), {}, 0);
  CHECK(re.w_hat() == p.model.w_hat());
}

TEST_CASE("toy data converges quickly") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto truth = make_toy_intensity(ToyConfig{}, toy_domain(), seed);
    const auto sample = sample_poisson_thinning(truth, 100 + seed);
    REQUIRE(sample.size() > 0);
    const auto data = normalize(sample);
    const auto model = fit_mode(cosine(1, 64, 0.01, 0.01), data);
    CHECK(model.iterations() <= 50);
  }
}

TEST_CASE("prior dominance shrinks the weights") {
  auto rng = make_rng(12);
  const auto data = lbpp::test::standard_pattern(lbpp::test::uniform_points(1, 15, rng));
  double prev = std::numeric_limits<double>::infinity();
  for (double b : {1.0, 1e2, 1e4, 1e6}) {
    const auto m = fit_mode(cosine(1, 10, 1, b), data);
    CHECK(m.w_hat().norm() < prev);
    prev = m.w_hat().norm();
  }
  CHECK(prev < 0.05);
}

TEST_CASE("duplicating the data raises the fitted mass") {
  auto rng = make_rng(13);
  const Points x = lbpp::test::uniform_points(1, 20, rng);
  Points xx(1, 40);
  xx << x, x;
  const auto basis = cosine(1, 16, 0.1, 0.1);
  const auto m1 = fit_mode(basis, lbpp::test::standard_pattern(x));
  const auto m2 = fit_mode(basis, lbpp::test::standard_pattern(xx));
  CHECK(integrated_mean_intensity(m2) > integrated_mean_intensity(m1));
}

TEST_CASE("fit errors") {
  const auto basis = cosine(1, 8, 1, 1);
  CHECK_THROWS_AS(fit_mode(basis, lbpp::test::standard_pattern(Points(1, 0))), Error);
  auto rng = make_rng(14);
  const auto data = lbpp::test::standard_pattern(lbpp::test::uniform_points(1, 30, rng));
  FitOptions opts;
  opts.max_newton_iters = 1;
  try {
    (void)fit_mode(basis, data, opts);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.code() == ErrorCode::kConvergence);
    CHECK(!e.trace().empty());
  }
  FitOptions bad;
  bad.ls_shrink = 1.5;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = FitOptions{};
  bad.initial_weights = Eigen::VectorXd::Zero(8);
  CHECK_THROWS_AS(fit_mode(basis, data, bad), Error);
}

TEST_CASE("nystrom basis fits from the flat-rate start") {
  const BoxDomain dom(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
  const auto red = load_point_pattern(lbpp::test::data_path("redwood.csv"), dom);
  const auto data = normalize(red);
  auto basis = std::make_shared<const SpectralBasis>(
      gaussian_nystrom_basis({10.0, 0.1}, dom, {16, {}}, true));
  const auto m = fit_mode(basis, data);
  CHECK(stationarity_residual(m) <= 1e-8 * (1.0 + m.w_hat().cwiseAbs().maxCoeff()));
  CHECK(dual_objective_gradient(m).cwiseAbs().maxCoeff() <= 1e-6);
}
