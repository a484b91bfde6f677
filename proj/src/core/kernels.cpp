#include "kernels.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "cosine_basis.hpp"
#include "errors.hpp"

namespace lbpp {

void validate(const GaussianKernelParams& params) {
  if (!(params.gamma > 0.0) || !(params.lengthscale > 0.0) ||
      !std::isfinite(params.gamma) || !std::isfinite(params.lengthscale)) {
    std::ostringstream os;
    os << "Gaussian kernel needs gamma > 0 and lengthscale > 0 (got "
       << params.gamma << ", " << params.lengthscale << ")";
    throw_invalid(os.str());
  }
}

double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& z,
                       const GaussianKernelParams& params) {
  if (x.size() != z.size()) throw_invalid("kernel arguments differ in dimension");
  const double r2 = (x - z).squaredNorm();
  return params.gamma * params.gamma *
         std::exp(-r2 / (2.0 * params.lengthscale * params.lengthscale));
}

namespace {

Eigen::MatrixXd squared_distances(const Points& x, const Points& y) {
  const Eigen::VectorXd xn = x.colwise().squaredNorm().transpose();
  const Eigen::RowVectorXd yn = y.colwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * x.transpose() * y;
  d2.colwise() += xn;
  d2.rowwise() += yn;
  return d2.cwiseMax(0.0);
}

}  // namespace

KernelMatrixFn gaussian_kernel_matrix(const GaussianKernelParams& params) {
  validate(params);
  return [params](const Points& x, const Points& y) -> Eigen::MatrixXd {
    const double g2 = params.gamma * params.gamma;
    const double inv = 1.0 / (2.0 * params.lengthscale * params.lengthscale);
    return (g2 * (-inv * squared_distances(x, y)).array().exp()).matrix();
  };
}

KernelMatrixFn pointwise_kernel_matrix(PointKernel kernel) {
  return [kernel = std::move(kernel)](const Points& x, const Points& y) {
    Eigen::MatrixXd k(x.cols(), y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      for (Eigen::Index i = 0; i < x.cols(); ++i) {
        k(i, j) = kernel(x.col(i), y.col(j));
      }
    }
    return k;
  };
}

SpectralBasis nystrom_basis(const KernelMatrixFn& kernel,
                            const BoxDomain& domain,
                            const NystromConfig& config,
                            BasisDescriptor descriptor) {
  if (config.cutoff.rel_threshold <= 0.0 || config.cutoff.rel_threshold > 1.0) {
    throw_invalid("Nystrom relative threshold must lie in (0, 1]");
  }
  const Points grid = midpoint_grid(domain, config.grid_per_dim);
  const Eigen::Index n_grid = grid.cols();
  if (config.cutoff.max_rank > n_grid) {
    throw_invalid("Nystrom rank exceeds the number of grid points");
  }
  const double weight = domain.volume() / static_cast<double>(n_grid);

  Eigen::MatrixXd a = weight * kernel(grid, grid);
  a = 0.5 * (a + a.transpose()).eval();
  const double trace = a.trace();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) {
    throw_numerical("Nystrom eigendecomposition failed");
  }
  const Eigen::VectorXd& mu = eig.eigenvalues();  // ascending
  if (mu[0] < -1e-8 * std::abs(trace)) {
    std::ostringstream os;
    os << "kernel matrix is not positive semi-definite (eigenvalue " << mu[0]
       << ", trace " << trace << ")";
    throw_numerical(os.str());
  }

  const double top = mu[n_grid - 1];
  Eigen::Index rank = 0;
  for (Eigen::Index k = n_grid - 1; k >= 0; --k) {
    if (!(mu[k] > 0.0) || mu[k] < config.cutoff.rel_threshold * top) break;
    if (config.cutoff.max_rank > 0 && rank == config.cutoff.max_rank) break;
    ++rank;
  }
  if (rank == 0) throw_numerical("Nystrom construction retained no eigenpairs");

  Eigen::VectorXd lambda(rank);
  // phi_i(x) = sqrt(w) k(x, grid) e_i / mu_i
  auto coef = std::make_shared<Eigen::MatrixXd>(n_grid, rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    const Eigen::Index src = n_grid - 1 - i;
    lambda[i] = mu[src];
    coef->col(i) = eig.eigenvectors().col(src) * (std::sqrt(weight) / mu[src]);
  }

  auto shared_grid = std::make_shared<const Points>(grid);
  auto design = [kernel, shared_grid, coef](const Points& pts) {
    return Eigen::MatrixXd(kernel(pts, *shared_grid) * (*coef));
  };
  return SpectralBasis(std::move(lambda), domain, std::move(design),
                       std::move(descriptor), false);
}

SpectralBasis gaussian_nystrom_basis(const GaussianKernelParams& params,
                                     const BoxDomain& original,
                                     const NystromConfig& config,
                                     bool standard_coords) {
  validate(params);
  NystromDescriptor desc{params, config.grid_per_dim, config.cutoff,
                         original.lower(), original.upper(), standard_coords};
  if (!standard_coords) {
    return nystrom_basis(gaussian_kernel_matrix(params), original, config,
                         std::move(desc));
  }
  const double inv_jacobian = 1.0 / standard_jacobian(original);
  auto base = gaussian_kernel_matrix(params);
  KernelMatrixFn mapped = [base, original, inv_jacobian](const Points& u,
                                                         const Points& v) {
    return Eigen::MatrixXd(inv_jacobian *
                           base(to_original(original, u), to_original(original, v)));
  };
  return nystrom_basis(mapped, BoxDomain::standard(original.dim()), config,
                       std::move(desc));
}

SpectralBasis rebuild_basis(const BasisDescriptor& descriptor) {
  if (const auto* c = std::get_if<CosineDescriptor>(&descriptor)) {
    return build_cosine_basis(c->dim, c->n_per_dim, c->params);
  }
  if (const auto* n = std::get_if<NystromDescriptor>(&descriptor)) {
    return gaussian_nystrom_basis(n->kernel,
                                  BoxDomain(n->kernel_lower, n->kernel_upper),
                                  NystromConfig{n->grid_per_dim, n->cutoff},
                                  n->standard_coords);
  }
  throw_invalid("cannot rebuild a basis from a custom descriptor");
}

double equivalent_kernel(const SpectralBasis& basis,
                         const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::VectorXd px = basis.row(x);
  const Eigen::VectorXd py = basis.row(y);
  return (px.array() * basis.shrinkage().array() * py.array()).sum();
}

Eigen::MatrixXd equivalent_kernel_matrix(const SpectralBasis& basis,
                                         const Points& x, const Points& y) {
  const Eigen::MatrixXd px = basis.design_matrix(x);
  const Eigen::MatrixXd py = basis.design_matrix(y);
  return px * basis.shrinkage().asDiagonal() * py.transpose();
}

}  // namespace lbpp
