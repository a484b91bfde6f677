#include "simulation.hpp"

#include <cmath>
#include <sstream>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace lbpp {

namespace {

Eigen::Index certification_points(Eigen::Index dim) {
  return dim == 1 ? 4096 : (dim == 2 ? 64 : 16);
}

Eigen::VectorXd standard_normals(Rng& rng, Eigen::Index n) {
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
  return z;
}

}  // namespace

Eigen::VectorXd sample_gp_weights(const SpectralBasis& basis, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return (basis.eigenvalues().cwiseSqrt().array() *
          standard_normals(rng, basis.size()).array())
      .matrix();
}

IntensityFn weights_intensity(std::shared_ptr<const SpectralBasis> basis,
                              Eigen::VectorXd w, std::string descriptor) {
  if (!basis || w.size() != basis->size()) {
    throw_invalid("weights do not match the basis");
  }
  auto eval = [basis, w = std::move(w)](const Points& x) {
    return Eigen::VectorXd(0.5 * (basis->design_matrix(x) * w).array().square());
  };
  IntensityFn fn{basis->domain(), eval, 0.0, true, std::move(descriptor)};
  const Points grid =
      midpoint_grid(basis->domain(), certification_points(basis->dim()));
  fn.upper_bound = 1.2 * eval(grid).maxCoeff();
  return fn;
}

BoxDomain toy_domain() {
  return BoxDomain(Eigen::VectorXd::Constant(1, 0.0),
                   Eigen::VectorXd::Constant(1, 10.0));
}

IntensityFn make_toy_intensity(const ToyConfig& config, const BoxDomain& domain,
                               std::uint64_t seed) {
  auto basis = std::make_shared<const SpectralBasis>(gaussian_nystrom_basis(
      config.kernel, domain, NystromConfig{config.grid_per_dim, {}}, false));
  std::ostringstream desc;
  desc << "half-square of Gaussian-kernel GP draw (gamma=" << config.kernel.gamma
       << ", lengthscale=" << config.kernel.lengthscale
       << ", grid=" << config.grid_per_dim << ", seed=" << seed << ")";
  Eigen::VectorXd w = sample_gp_weights(*basis, seed);
  return weights_intensity(std::move(basis), std::move(w), desc.str());
}

PointPattern sample_poisson_thinning(const IntensityFn& intensity,
                                     std::uint64_t seed) {
  const double bound = intensity.upper_bound;
  if (!(bound >= 0.0) || !std::isfinite(bound)) {
    throw_invalid("thinning needs a finite, nonnegative intensity bound");
  }
  const BoxDomain& dom = intensity.domain;
  if (bound == 0.0) return PointPattern::empty(dom);

  Rng rng = make_rng(seed);
  boost::random::poisson_distribution<long long, double> poisson(
      bound * dom.volume());
  const auto k = static_cast<Eigen::Index>(poisson(rng));
  boost::random::uniform_01<double> unif;

  Points proposals(dom.dim(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < dom.dim(); ++j) {
      proposals(j, i) = dom.lower()[j] + unif(rng) * (dom.upper()[j] - dom.lower()[j]);
    }
  }
  const Eigen::VectorXd values =
      k > 0 ? intensity.eval(proposals) : Eigen::VectorXd(0);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (values[i] > bound || !(values[i] >= 0.0)) {
      std::ostringstream os;
      os << "intensity " << values[i] << " at (" << proposals.col(i).transpose()
         << ") violates the thinning bound " << bound;
      throw Error(ErrorCode::kDomain, os.str());
    }
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (unif(rng) * bound < values[i]) keep.push_back(i);
  }
  Points out(dom.dim(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = proposals.col(keep[i]);
  }
  return PointPattern(std::move(out), dom);
}

Eigen::VectorXd sample_posterior_weights(const FittedModel& model,
                                         std::uint64_t seed) {
  const Eigen::VectorXd& lambda = model.basis().eigenvalues();
  const Eigen::MatrixXd scaled =
      (std::sqrt(2.0) * model.f_at_data().cwiseInverse()).asDiagonal() *
      model.design_data();
  Eigen::MatrixXd q_inv = scaled.transpose() * scaled;
  q_inv.diagonal().array() += 1.0 + lambda.array().inverse();
  Eigen::LLT<Eigen::MatrixXd> llt(q_inv);
  if (llt.info() != Eigen::Success) throw_numerical("posterior precision is not PD");
  Rng rng = make_rng(seed);
  Eigen::VectorXd z = standard_normals(rng, lambda.size());
  // Q^-1 = L L' => L'^-1 z ~ N(0, Q)
  llt.matrixU().solveInPlace(z);
  return model.w_hat() + z;
}

}  // namespace lbpp
