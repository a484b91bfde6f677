#pragma once

#include <functional>

#include <Eigen/Dense>

#include "domain.hpp"
#include "spectral_basis.hpp"

namespace lbpp {

// Cross-covariance K(x, y), |x| x |y| for d x n point blocks.
using KernelMatrixFn = std::function<Eigen::MatrixXd(const Points&, const Points&)>;
using PointKernel = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&,
                                         const Eigen::Ref<const Eigen::VectorXd>&)>;

// gamma^2 exp(-|x - z|^2 / (2 lengthscale^2)).
double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& z,
                       const GaussianKernelParams& params);

void validate(const GaussianKernelParams& params);

KernelMatrixFn gaussian_kernel_matrix(const GaussianKernelParams& params);
KernelMatrixFn pointwise_kernel_matrix(PointKernel kernel);

struct NystromConfig {
  Eigen::Index grid_per_dim = 64;
  RankCutoff cutoff;
};

// Nystrom approximation to the Mercer system of `kernel` on `domain` with
// Lebesgue measure, using a regular midpoint grid of M nodes with weights
// vol/M. The returned eigenfunctions are orthonormal under that grid rule.
SpectralBasis nystrom_basis(const KernelMatrixFn& kernel,
                            const BoxDomain& domain,
                            const NystromConfig& config,
                            BasisDescriptor descriptor = CustomDescriptor{"nystrom"});

// Gaussian-kernel Nystrom basis for data living on `original`. With
// standard_coords the basis lives on [0, pi]^d and represents the prior of
// f_std = f / sqrt(J) (so that lambda_std = lambda / J); otherwise it lives
// on `original` directly.
SpectralBasis gaussian_nystrom_basis(const GaussianKernelParams& params,
                                     const BoxDomain& original,
                                     const NystromConfig& config,
                                     bool standard_coords);

// Rebuild a basis from its descriptor (cosine or Gaussian Nystrom).
SpectralBasis rebuild_basis(const BasisDescriptor& descriptor);

// k~(x, y) = sum_i lambda_i / (1 + lambda_i) phi_i(x) phi_i(y).
double equivalent_kernel(const SpectralBasis& basis,
                         const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y);

Eigen::MatrixXd equivalent_kernel_matrix(const SpectralBasis& basis,
                                         const Points& x, const Points& y);

}  // namespace lbpp
