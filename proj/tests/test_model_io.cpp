#include <fstream>

#include "doctest.h"
#include "errors.hpp"
#include "kernels.hpp"
#include "model_io.hpp"
#include "predictive.hpp"
#include "support.hpp"

using namespace lbpp;

namespace {

double log_marginal_total(const FittedModel& m) { return m.log_marginal_parts().total(); }

FittedModel fit_on(const BoxDomain& dom, const Points& x, std::shared_ptr<const SpectralBasis> basis) {
  return fit_mode(std::move(basis), normalize(PointPattern(x, dom)));
}

void check_same(const FittedModel& a, const FittedModel& b) {
  CHECK(a.w_hat() == b.w_hat());
  CHECK((a.alpha_hat() - b.alpha_hat()).cwiseAbs().maxCoeff() <= 1e-12 * a.alpha_hat().cwiseAbs().maxCoeff());
  CHECK(log_marginal_total(a) == doctest::Approx(log_marginal_total(b)).epsilon(1e-12));
  auto rng = make_rng(1);
  const Points q = lbpp::test::uniform_points(a.basis().dim(), 10, rng);
  for (Eigen::Index i = 0; i < q.cols(); ++i) {
    const auto pa = predict(a, q.col(i));
    const auto pb = predict(b, q.col(i));
    CHECK(pa.mu == doctest::Approx(pb.mu).epsilon(1e-12));
    CHECK(pa.sigma2 == doctest::Approx(pb.sigma2).epsilon(1e-10));
  }
}

}  // namespace



TEST_CASE("cosine model round trip") {
  const BoxDomain dom(Eigen::VectorXd::Constant(1, 1851), Eigen::VectorXd::Constant(1, 1962));
  const auto coal = load_point_pattern(lbpp::test::data_path("coal.csv"), dom);
  const auto m = fit_on(dom, coal.points(),
                        std::make_shared<const SpectralBasis>(build_cosine_basis(1, 32, {0.01, 0.01, 2})));
  save_model("io_cosine.json", m, {{"seed", 3}, {"note", "unit test"}});
  const auto back = load_model("io_cosine.json");
  check_same(m, back);
  std::ifstream in("io_cosine.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("format") == kModelFormat);
  CHECK(j.at("version") == kModelFormatVersion);
  CHECK(j.at("config").at("seed") == 3);
  CHECK(j.at("data").size() == 190);
}

TEST_CASE("nystrom model round trip") {
  const BoxDomain dom(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
  const auto red = load_point_pattern(lbpp::test::data_path("redwood.csv"), dom);
  const auto m = fit_on(dom, red.points(),
                        std::make_shared<const SpectralBasis>(
                            gaussian_nystrom_basis({10.0, 0.1}, dom, {16, {}}, true)));
  const auto back = model_from_json(model_to_json(m));
  check_same(m, back);
}

TEST_CASE("malformed model files") {
  auto expect = [](const std::string& body, ErrorCode code) {
    std::ofstream("io_bad.json") << body;
    try {
      (void)load_model("io_bad.json");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  expect("{not json", ErrorCode::kParse);
  expect(R"({"format":"other","version":1})", ErrorCode::kParse);
  expect(R"({"format":"lbpp-model","version":99})", ErrorCode::kParse);
  expect(R"({"format":"lbpp-model","version":1})", ErrorCode::kParse);
  try {
    (void)load_model("no_such_model.json");
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}

TEST_CASE("selection table csv") {
  auto rng = make_rng(2);
  const auto data = lbpp::test::standard_pattern(lbpp::test::uniform_points(1, 30, rng));
  BasisFamily fam;
  fam.size_per_dim = 8;
  SearchSpace space;
  space.ranges = {{"ab", -1, 1, 3}};
  const auto r = ml2_search(data, fam, space);
  write_selection_csv("io_select.csv", r, "k=v");
  std::ifstream in("io_select.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "# k=v");
  std::getline(in, line);
  CHECK(line == "ab,basis_size,converged,iterations,data_term,quadratic_term,v_term,logdet_s,constant,total");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
