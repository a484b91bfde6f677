#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inference.hpp"
#include "kernels.hpp"

namespace lbpp {

struct LogMarginal {
  double total = 0.0;
  MarginalParts parts;
};

LogMarginal log_marginal(const FittedModel& model);

// Reference evaluation of the same quantity through N-dimensional
// determinants: log h - w'Zw/2 - log|Lambda|/2 + log|Q|/2 with
// Q^-1 = I + Lambda^-1 + W. Meant for small N.
double log_marginal_dense(const FittedModel& model);

// Which basis family ML-II searches over, with the fixed (non-searched)
// settings. Searched parameter names: "a", "b", "ab" (a = b tied) for the
// cosine family; "gamma", "lengthscale" for the Gaussian family.
struct BasisFamily {
  enum class Kind { kCosine, kGaussian };
  Kind kind = Kind::kCosine;
  Eigen::Index size_per_dim = 32;  // cosine frequencies or Nystrom grid points
  ThinPlateParams cosine;          // defaults for unsearched cosine params
  GaussianKernelParams gaussian;   // defaults for unsearched kernel params
  RankCutoff cutoff;
};

struct ParamRange {
  std::string name;
  double log10_lower = 0.0;
  double log10_upper = 0.0;
  Eigen::Index grid_points = 1;
};

struct SearchSpace {
  enum class Strategy { kGrid, kNelderMead };
  std::vector<ParamRange> ranges;
  Strategy strategy = Strategy::kGrid;
  // Maximum number of fits for Nelder-Mead (exact). Ignored by the grid.
  int budget = 40;
};

void validate(const SearchSpace& space, const BasisFamily& family);

struct Candidate {
  std::vector<double> params;  // in the order of SearchSpace::ranges
  bool converged = false;
  std::string failure;
  LogMarginal marginal;
  Eigen::Index basis_size = 0;
  int iterations = 0;
};

struct SelectionResult {
  std::vector<std::string> names;
  std::vector<Candidate> table;  // sorted by total, failures last
  std::size_t best = 0;          // index into table (always 0 when any fit)
  int evaluations = 0;
};

// Basis for one candidate on data normalized from `original`.
SpectralBasis basis_for(const BasisFamily& family,
                        const std::vector<std::string>& names,
                        const std::vector<double>& params,
                        const BoxDomain& original);

// Fit every candidate and rank by approximate log marginal likelihood.
// Individual failures are recorded; if every candidate fails this throws.
SelectionResult ml2_search(const NormalizedPattern& data,
                           const BasisFamily& family, const SearchSpace& space,
                           const FitOptions& opts = {});

// Nelder-Mead maximization inside a box, stopping after exactly `budget`
// evaluations of `objective` (or earlier when the simplex collapses).
struct NelderMeadResult {
  Eigen::VectorXd best;
  double best_value = 0.0;
  int evaluations = 0;
};
NelderMeadResult nelder_mead_maximize(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    const Eigen::VectorXd& start, int budget);

}  // namespace lbpp
