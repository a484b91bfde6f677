#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "domain.hpp"
#include "inference.hpp"
#include "intensity.hpp"
#include "kernels.hpp"

namespace lbpp {

// w_i = sqrt(lambda_i) z_i with z standard normal: a prior draw of the weights.
Eigen::VectorXd sample_gp_weights(const SpectralBasis& basis, std::uint64_t seed);

// lambda(x) = (Phi(x)' w)^2 / 2 on the basis domain, with an empirical bound
// of 1.2 x the maximum over a certification grid.
IntensityFn weights_intensity(std::shared_ptr<const SpectralBasis> basis,
                              Eigen::VectorXd w, std::string descriptor = {});

struct ToyConfig {
  GaussianKernelParams kernel{5.0, 0.5};
  Eigen::Index grid_per_dim = 256;
};

// Default toy domain, [0, 10].
BoxDomain toy_domain();

// Half-square of a Gaussian-kernel GP draw (via a Nystrom basis on `domain`).
IntensityFn make_toy_intensity(const ToyConfig& config, const BoxDomain& domain,
                               std::uint64_t seed);

// Lewis-Shedler thinning: K ~ Poisson(bound * vol), K uniform proposals, each
// kept with probability lambda(x) / bound. Throws if lambda exceeds the bound.
PointPattern sample_poisson_thinning(const IntensityFn& intensity,
                                     std::uint64_t seed);

// One draw of w ~ N(w_hat, Q) from the Laplace posterior.
Eigen::VectorXd sample_posterior_weights(const FittedModel& model,
                                         std::uint64_t seed);

}  // namespace lbpp
