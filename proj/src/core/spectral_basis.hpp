#pragma once

#include <functional>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "domain.hpp"

namespace lbpp {

// Thin-plate semi-norm hyperparameters for the cosine basis: the spectrum is
// 1 / (a * s^m_order + b) with s the squared frequency norm.
struct ThinPlateParams {
  double a = 1.0;
  double b = 1.0;
  int m_order = 2;
};

struct GaussianKernelParams {
  double gamma = 1.0;        // amplitude; k(x, x) = gamma^2
  double lengthscale = 1.0;
};

// Which eigenpairs a Nystrom construction keeps. max_rank == 0 means "no
// fixed rank"; pairs with lambda_i < rel_threshold * lambda_1 are always
// dropped.
struct RankCutoff {
  Eigen::Index max_rank = 0;
  double rel_threshold = 1e-12;
};

struct CosineDescriptor {
  Eigen::Index dim = 1;
  Eigen::Index n_per_dim = 1;
  ThinPlateParams params;
};

// Gaussian-kernel Nystrom basis. The kernel is stated on `kernel_domain`
// (original units); the basis itself lives on the basis domain and maps
// points back to kernel_domain before evaluating k.
struct NystromDescriptor {
  GaussianKernelParams kernel;
  Eigen::Index grid_per_dim = 1;
  RankCutoff cutoff;
  Eigen::VectorXd kernel_lower;
  Eigen::VectorXd kernel_upper;
  bool standard_coords = true;
};

struct CustomDescriptor {
  std::string label;
};

using BasisDescriptor =
    std::variant<CosineDescriptor, NystromDescriptor, CustomDescriptor>;

// A truncated Mercer system {(lambda_i, phi_i)} on a box, eigenvalues sorted
// in descending order and strictly positive.
class SpectralBasis {
 public:
  // Maps a d x m block of points to the m x N design matrix.
  using DesignFn = std::function<Eigen::MatrixXd(const Points&)>;

  SpectralBasis(Eigen::VectorXd eigenvalues, BoxDomain domain,
                DesignFn design, BasisDescriptor descriptor,
                bool exact_l2_orthonormal);

  [[nodiscard]] Eigen::Index size() const { return eigenvalues_.size(); }
  [[nodiscard]] Eigen::Index dim() const { return domain_.dim(); }
  [[nodiscard]] const Eigen::VectorXd& eigenvalues() const {
    return eigenvalues_;
  }
  [[nodiscard]] const BoxDomain& domain() const { return domain_; }
  [[nodiscard]] double domain_measure() const { return domain_.volume(); }
  [[nodiscard]] const BasisDescriptor& descriptor() const {
    return descriptor_;
  }
  // True when the eigenfunctions are orthonormal in L2 exactly (cosine), so
  // integrals of f^2 reduce to coefficient norms.
  [[nodiscard]] bool exact_l2_orthonormal() const { return exact_l2_; }

  // Entry (i, j) = phi_j(x_i); rows follow column order of `points`.
  [[nodiscard]] Eigen::MatrixXd design_matrix(const Points& points) const;
  [[nodiscard]] Eigen::VectorXd row(
      const Eigen::Ref<const Eigen::VectorXd>& x) const;
  [[nodiscard]] double eval(Eigen::Index i,
                            const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Spectral weights lambda_i / (1 + lambda_i) of the equivalent kernel.
  [[nodiscard]] Eigen::VectorXd shrinkage() const;

 private:
  Eigen::VectorXd eigenvalues_;
  BoxDomain domain_;
  DesignFn design_;
  BasisDescriptor descriptor_;
  bool exact_l2_;
};

}  // namespace lbpp
