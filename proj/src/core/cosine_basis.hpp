#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spectral_basis.hpp"

namespace lbpp {

// Non-negative frequency vector of a tensor-product cosine.
struct MultiIndex {
  std::vector<int> beta;

  // s(beta) = sum_j beta_j^2, exact.
  [[nodiscard]] std::int64_t order() const;
  bool operator==(const MultiIndex&) const = default;
};

inline constexpr std::int64_t kDefaultMaxBasisSize = 1'000'000;

// The tensor grid {0..n_per_dim-1}^dim in lexicographic order (last axis
// fastest).
std::vector<MultiIndex> enumerate_multi_indices(
    Eigen::Index dim, Eigen::Index n_per_dim,
    std::int64_t max_size = kDefaultMaxBasisSize);

// (2/pi)^{d/2} prod_j (1/sqrt2)^[beta_j = 0] cos(beta_j x_j) on [0, pi]^d.
double eval_cosine(const MultiIndex& beta,
                   const Eigen::Ref<const Eigen::VectorXd>& x);

// 1 / (a s(beta)^m + b), with 0^m = 0.
double thin_plate_eigenvalue(const MultiIndex& beta,
                             const ThinPlateParams& params);

void validate(const ThinPlateParams& params);

// Cosine eigenbasis on [0, pi]^dim with the thin-plate spectrum. Eigenpairs
// are ordered by descending eigenvalue, ties in lexicographic index order.
SpectralBasis build_cosine_basis(Eigen::Index dim, Eigen::Index n_per_dim,
                                 const ThinPlateParams& params,
                                 std::int64_t max_size = kDefaultMaxBasisSize);

// Multi-indices of build_cosine_basis in basis order.
std::vector<MultiIndex> cosine_basis_indices(
    Eigen::Index dim, Eigen::Index n_per_dim,
    std::int64_t max_size = kDefaultMaxBasisSize);

}  // namespace lbpp
