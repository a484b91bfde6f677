#include <functional>
#include <numbers>

#include "doctest.h"
#include "errors.hpp"
#include "support.hpp"

using namespace lbpp;
constexpr double kPi = std::numbers::pi;

TEST_CASE("multi-index enumeration") {
  CHECK(enumerate_multi_indices(2, 32).size() == 1024);
  const auto one = enumerate_multi_indices(1, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].beta == std::vector<int>{0});
  const auto cube = enumerate_multi_indices(3, 2);
  REQUIRE(cube.size() == 8);
  CHECK(cube.front().beta == std::vector<int>{0, 0, 0});
  CHECK(cube[1].beta == std::vector<int>{0, 0, 1});
  CHECK(cube.back().beta == std::vector<int>{1, 1, 1});
  CHECK_THROWS_AS(enumerate_multi_indices(4, 100), Error);
  CHECK_THROWS_AS(enumerate_multi_indices(1, 0), Error);
}

TEST_CASE("cosine eigenfunctions") {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.7);
  CHECK(eval_cosine({{0}}, x) == doctest::Approx(1.0 / std::sqrt(kPi)).epsilon(1e-15));
  CHECK(eval_cosine({{1}}, Eigen::VectorXd::Zero(1)) ==
        doctest::Approx(std::sqrt(2.0 / kPi)).epsilon(1e-15));
  double s = 0.0;
  const int g = 512;
  for (int k = 0; k < g; ++k) {
    const double v = eval_cosine({{3}}, Eigen::VectorXd::Constant(1, (k + 0.5) * kPi / g));
    s += v * v * kPi / g;
  }
  CHECK(std::abs(s - 1.0) <= 1e-10);
  CHECK(eval_cosine({{0, 0}}, Eigen::Vector2d(1, 2)) == doctest::Approx(1.0 / kPi));
}

TEST_CASE("thin-plate spectrum") {
  CHECK(thin_plate_eigenvalue({{0, 0}}, {1, 1, 2}) == 1.0);
  CHECK(thin_plate_eigenvalue({{1, 1}}, {1, 1, 2}) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(thin_plate_eigenvalue({{0}}, {3, 0.25, 1}) == 4.0);
  CHECK_THROWS_AS(validate(ThinPlateParams{0.0, 1.0, 2}), Error);
  CHECK_THROWS_AS(validate(ThinPlateParams{1.0, -1.0, 2}), Error);
  CHECK_THROWS_AS(validate(ThinPlateParams{1.0, 1.0, 0}), Error);
}

namespace {

// d^k/dx^k cos(b x) = b^k cos(b x + k pi/2).
double cos_derivative(int b, int k, double x) {
  return std::pow(static_cast<double>(b), k) * std::cos(b * x + k * kPi / 2);
}

// Delta^m applied to the product of cosines, expanded term by term.
double laplacian_power(const std::vector<int>& beta, const Eigen::VectorXd& x, int m,
                       std::vector<int>& orders) {
  if (m == 0) {
    double v = 1.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
      v *= cos_derivative(beta[j], orders[j], x[static_cast<Eigen::Index>(j)]);
    }
    return v;
  }
  double s = 0.0;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    orders[j] += 2;
    s += laplacian_power(beta, x, m - 1, orders);
    orders[j] -= 2;
  }
  return s;
}

}  // namespace

TEST_CASE("eigen-relation of the regularization operator") {
  auto rng = make_rng(11);
  boost::random::uniform_int_distribution<int> freq(0, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 1 + trial % 3;
    const int m = 1 + trial % 2;
    MultiIndex beta;
    for (Eigen::Index j = 0; j < d; ++j) beta.beta.push_back(freq(rng));
    const ThinPlateParams tp{lbpp::test::log_uniform(rng, 0.1, 10),
                             lbpp::test::log_uniform(rng, 0.1, 10), m};
    const Eigen::VectorXd x = lbpp::test::uniform_points(d, 1, rng).col(0);
    std::vector<int> orders(static_cast<std::size_t>(d), 0);
    double norm = std::pow(2.0 / kPi, 0.5 * static_cast<double>(d));
    for (int b : beta.beta) if (b == 0) norm /= std::sqrt(2.0);
    const double lap = norm * laplacian_power(beta.beta, x, m, orders);
    const double sign = m % 2 == 0 ? 1.0 : -1.0;
    const double lhs = tp.a * sign * lap + tp.b * eval_cosine(beta, x);
    const double rhs = eval_cosine(beta, x) / thin_plate_eigenvalue(beta, tp);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("cosine basis ordering") {
  const ThinPlateParams tp{0.3, 2.0, 2};
  const auto basis = build_cosine_basis(2, 32, tp);
  CHECK(basis.size() == 1024);
  CHECK(basis.eigenvalues()[0] == doctest::Approx(1.0 / tp.b));
  CHECK(basis.eigenvalues().maxCoeff() <= 1.0 / tp.b);
  for (Eigen::Index i = 1; i < basis.size(); ++i) {
    REQUIRE(basis.eigenvalues()[i] <= basis.eigenvalues()[i - 1]);
  }
  const auto idx = cosine_basis_indices(2, 32);
  REQUIRE(idx.size() == 1024);
  CHECK(idx[1].beta == std::vector<int>{0, 1});
  CHECK(idx[2].beta == std::vector<int>{1, 0});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    REQUIRE(basis.eigenvalues()[static_cast<Eigen::Index>(i)] ==
            thin_plate_eigenvalue(idx[i], tp));
  }
  // Spectrum is non-increasing in s(beta).
  for (std::size_t i = 1; i < idx.size(); ++i) REQUIRE(idx[i].order() >= idx[i - 1].order());
}

TEST_CASE("design matrix") {
  const auto basis = build_cosine_basis(1, 16, {1, 1, 2});
  CHECK(basis.design_matrix(Points(1, 0)).rows() == 0);
  CHECK(basis.design_matrix(Points(1, 0)).cols() == 16);
  Points one(1, 1);
  one << 1.234;
  CHECK(basis.design_matrix(one)(0, 0) == doctest::Approx(1.0 / std::sqrt(kPi)));
  CHECK_THROWS_AS((void)basis.design_matrix(Points::Zero(2, 3)), Error);
  const Eigen::MatrixXd phi = basis.design_matrix(Points::Constant(1, 1, 0.3));
  for (Eigen::Index i = 0; i < 16; ++i) {
    CHECK(phi(0, i) == doctest::Approx(basis.eval(i, Eigen::VectorXd::Constant(1, 0.3))));
  }
}

TEST_CASE("quadrature orthonormality") {
  for (Eigen::Index n : {1, 8, 64, 128}) {
    const auto basis = build_cosine_basis(1, n, {1, 1, 2});
    const int g = 1024;
    Points grid(1, g);
    for (int k = 0; k < g; ++k) grid(0, k) = (k + 0.5) * kPi / g;
    const Eigen::MatrixXd phi = basis.design_matrix(grid);
    const Eigen::MatrixXd gram = phi.transpose() * phi * (kPi / g);
    CHECK((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-6);
  }
  const auto basis2 = build_cosine_basis(2, 8, {1, 1, 2});
  const Points grid2 = midpoint_grid(BoxDomain::standard(2), 64);
  const Eigen::MatrixXd phi2 = basis2.design_matrix(grid2);
  const Eigen::MatrixXd gram2 = phi2.transpose() * phi2 * (kPi * kPi / grid2.cols());
  CHECK((gram2 - Eigen::MatrixXd::Identity(64, 64)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("kernel matrix is positive semi-definite") {
  auto rng = make_rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 1 + trial % 2;
    const auto basis = build_cosine_basis(d, d == 1 ? 40 : 8, {0.5, 0.1, 2});
    const Points x = lbpp::test::uniform_points(d, 30, rng);
    const Eigen::MatrixXd phi = basis.design_matrix(x);
    const Eigen::MatrixXd k = phi * basis.eigenvalues().asDiagonal() * phi.transpose();
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * k.trace());
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-10 * k.trace());
  }
}

TEST_CASE("log(1 + lambda) over the truncation grows with N") {
  double prev = 0.0;
  for (Eigen::Index n : {2, 4, 8, 16, 32, 64}) {
    const auto basis = build_cosine_basis(1, n, {1, 1, 2});
    const double v = basis.eigenvalues().array().log1p().sum();
    CHECK(std::isfinite(v));
    CHECK(v > prev);
    prev = v;
  }
}
