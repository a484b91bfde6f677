#include "spectral_basis.hpp"

#include <sstream>

#include "errors.hpp"

namespace lbpp {

SpectralBasis::SpectralBasis(Eigen::VectorXd eigenvalues, BoxDomain domain,
                             DesignFn design, BasisDescriptor descriptor,
                             bool exact_l2_orthonormal)
    : eigenvalues_(std::move(eigenvalues)),
      domain_(std::move(domain)),
      design_(std::move(design)),
      descriptor_(std::move(descriptor)),
      exact_l2_(exact_l2_orthonormal) {
  if (eigenvalues_.size() == 0) throw_invalid("spectral basis is empty");
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    if (!(eigenvalues_[i] > 0.0) || !std::isfinite(eigenvalues_[i])) {
      std::ostringstream os;
      os << "eigenvalue " << i << " is not strictly positive ("
         << eigenvalues_[i] << ")";
      throw_invalid(os.str());
    }
    if (i > 0 && eigenvalues_[i] > eigenvalues_[i - 1]) {
      throw_invalid("eigenvalues must be sorted in descending order");
    }
  }
}

Eigen::MatrixXd SpectralBasis::design_matrix(const Points& points) const {
  if (points.cols() == 0) return Eigen::MatrixXd(0, size());
  if (points.rows() != dim()) {
    std::ostringstream os;
    os << "design matrix: points have dimension " << points.rows()
       << ", basis has " << dim();
    throw_invalid(os.str());
  }
  return design_(points);
}

Eigen::VectorXd SpectralBasis::row(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Points p = x;
  return design_matrix(p).row(0).transpose();
}

double SpectralBasis::eval(Eigen::Index i,
                           const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return row(x)[i];
}

Eigen::VectorXd SpectralBasis::shrinkage() const {
  return (eigenvalues_.array() / (1.0 + eigenvalues_.array())).matrix();
}

}  // namespace lbpp
