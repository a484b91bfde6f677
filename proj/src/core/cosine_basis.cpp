#include "cosine_basis.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace lbpp {

std::int64_t MultiIndex::order() const {
  std::int64_t s = 0;
  for (int b : beta) s += static_cast<std::int64_t>(b) * b;
  return s;
}

std::vector<MultiIndex> enumerate_multi_indices(Eigen::Index dim,
                                                Eigen::Index n_per_dim,
                                                std::int64_t max_size) {
  if (dim < 1) throw_invalid("dimension must be >= 1");
  if (n_per_dim < 1) throw_invalid("frequencies per dimension must be >= 1");
  std::int64_t total = 1;
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (total > max_size / n_per_dim) {
      std::ostringstream os;
      os << "basis size " << n_per_dim << "^" << dim << " exceeds the cap "
         << max_size;
      throw_invalid(os.str());
    }
    total *= n_per_dim;
  }

  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(total));
  MultiIndex cur{std::vector<int>(static_cast<std::size_t>(dim), 0)};
  for (std::int64_t k = 0; k < total; ++k) {
    out.push_back(cur);
    for (auto j = static_cast<std::ptrdiff_t>(dim) - 1; j >= 0; --j) {
      if (++cur.beta[static_cast<std::size_t>(j)] < n_per_dim) break;
      cur.beta[static_cast<std::size_t>(j)] = 0;
    }
  }
  return out;
}

double eval_cosine(const MultiIndex& beta,
                   const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto d = beta.beta.size();
  double v = std::pow(2.0 / std::numbers::pi, 0.5 * static_cast<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const int b = beta.beta[j];
    v *= b == 0 ? std::numbers::sqrt2 / 2.0
                : std::cos(b * x[static_cast<Eigen::Index>(j)]);
  }
  return v;
}

void validate(const ThinPlateParams& params) {
  if (!(params.a > 0.0) || !(params.b > 0.0) || params.m_order < 1 ||
      !std::isfinite(params.a) || !std::isfinite(params.b)) {
    std::ostringstream os;
    os << "thin-plate parameters need a > 0, b > 0, m >= 1 (got a="
       << params.a << ", b=" << params.b << ", m=" << params.m_order << ")";
    throw_invalid(os.str());
  }
}

double thin_plate_eigenvalue(const MultiIndex& beta,
                             const ThinPlateParams& params) {
  const auto s = beta.order();
  const double penalty =
      s == 0 ? 0.0 : std::pow(static_cast<double>(s), params.m_order);
  return 1.0 / (params.a * penalty + params.b);
}

std::vector<MultiIndex> cosine_basis_indices(Eigen::Index dim,
                                             Eigen::Index n_per_dim,
                                             std::int64_t max_size) {
  auto idx = enumerate_multi_indices(dim, n_per_dim, max_size);
  // lambda is strictly decreasing in s(beta), so sorting on the exact integer
  // order gives the descending spectrum without float ties.
  std::stable_sort(idx.begin(), idx.end(),
                   [](const MultiIndex& l, const MultiIndex& r) {
                     return l.order() < r.order();
                   });
  return idx;
}

SpectralBasis build_cosine_basis(Eigen::Index dim, Eigen::Index n_per_dim,
                                 const ThinPlateParams& params,
                                 std::int64_t max_size) {
  validate(params);
  const auto idx = cosine_basis_indices(dim, n_per_dim, max_size);
  const auto n_basis = static_cast<Eigen::Index>(idx.size());

  Eigen::VectorXd lambda(n_basis);
  auto freqs = std::make_shared<Eigen::MatrixXi>(dim, n_basis);
  for (Eigen::Index k = 0; k < n_basis; ++k) {
    lambda[k] = thin_plate_eigenvalue(idx[static_cast<std::size_t>(k)], params);
    for (Eigen::Index j = 0; j < dim; ++j) {
      (*freqs)(j, k) = idx[static_cast<std::size_t>(k)].beta[static_cast<std::size_t>(j)];
    }
  }

  const double norm =
      std::pow(2.0 / std::numbers::pi, 0.5 * static_cast<double>(dim));
  auto design = [freqs, n_per_dim, norm](const Points& pts) {
    const Eigen::Index d = pts.rows();
    const Eigen::Index m = pts.cols();
    const Eigen::Index n_basis = freqs->cols();
    Eigen::MatrixXd out(m, n_basis);
    // cos_table(b, j) = cos(b x_j), with the 1/sqrt2 factor folded into b = 0.
    Eigen::MatrixXd cos_table(n_per_dim, d);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        cos_table(0, j) = std::numbers::sqrt2 / 2.0;
        for (Eigen::Index b = 1; b < n_per_dim; ++b) {
          cos_table(b, j) = std::cos(static_cast<double>(b) * pts(j, i));
        }
      }
      for (Eigen::Index k = 0; k < n_basis; ++k) {
        double v = norm;
        for (Eigen::Index j = 0; j < d; ++j) v *= cos_table((*freqs)(j, k), j);
        out(i, k) = v;
      }
    }
    return out;
  };

  return SpectralBasis(std::move(lambda), BoxDomain::standard(dim),
                       std::move(design),
                       CosineDescriptor{dim, n_per_dim, params}, true);
}

}  // namespace lbpp
