#include "model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "cosine_basis.hpp"
#include "errors.hpp"

namespace lbpp {

LogMarginal log_marginal(const FittedModel& model) {
  return LogMarginal{model.log_marginal_parts().total(),
                     model.log_marginal_parts()};
}

double log_marginal_dense(const FittedModel& model) {
  const Eigen::VectorXd& lambda = model.basis().eigenvalues();
  const Eigen::MatrixXd& design = model.design_data();
  const Eigen::VectorXd& f = model.f_at_data();
  const Eigen::VectorXd z = (1.0 + lambda.array().inverse()).matrix();

  const Eigen::MatrixXd scaled =
      (std::sqrt(2.0) * f.cwiseInverse()).asDiagonal() * design;
  Eigen::MatrixXd q_inv = scaled.transpose() * scaled;
  q_inv.diagonal() += z;
  Eigen::LLT<Eigen::MatrixXd> llt(q_inv);
  if (llt.info() != Eigen::Success) throw_numerical("Q^-1 is not positive definite");
  const double logdet_q_inv =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();

  double data = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) data += std::log(0.5 * f[i] * f[i]);
  const Eigen::VectorXd& w = model.w_hat();
  return data - 0.5 * w.cwiseProduct(z).dot(w) -
         0.5 * lambda.array().log().sum() - 0.5 * logdet_q_inv;
}

namespace {

bool is_cosine_name(const std::string& n) { return n == "a" || n == "b" || n == "ab"; }
bool is_gaussian_name(const std::string& n) {
  return n == "gamma" || n == "lengthscale";
}

std::vector<std::string> names_of(const SearchSpace& space) {
  std::vector<std::string> out;
  for (const auto& r : space.ranges) out.push_back(r.name);
  return out;
}

}  // namespace

void validate(const SearchSpace& space, const BasisFamily& family) {
  if (space.ranges.empty()) throw_invalid("search space has no parameters");
  std::vector<std::string> seen;
  for (const auto& r : space.ranges) {
    const bool ok = family.kind == BasisFamily::Kind::kCosine
                        ? is_cosine_name(r.name)
                        : is_gaussian_name(r.name);
    if (!ok) throw_invalid("unknown search parameter '" + r.name + "'");
    if (std::find(seen.begin(), seen.end(), r.name) != seen.end()) {
      throw_invalid("parameter '" + r.name + "' listed twice");
    }
    seen.push_back(r.name);
    if (!std::isfinite(r.log10_lower) || !std::isfinite(r.log10_upper) ||
        r.log10_lower > r.log10_upper) {
      throw_invalid("parameter '" + r.name + "' has invalid bounds");
    }
    if (r.grid_points < 1) throw_invalid("grid needs at least one point");
    if (r.grid_points > 1 && !(r.log10_lower < r.log10_upper)) {
      throw_invalid("parameter '" + r.name + "' needs lower < upper for a grid");
    }
  }
  const bool tied = std::find(seen.begin(), seen.end(), "ab") != seen.end();
  if (tied && (std::find(seen.begin(), seen.end(), "a") != seen.end() ||
               std::find(seen.begin(), seen.end(), "b") != seen.end())) {
    throw_invalid("'ab' cannot be combined with 'a' or 'b'");
  }
  if (space.strategy == SearchSpace::Strategy::kNelderMead) {
    if (space.budget < 1) throw_invalid("Nelder-Mead budget must be >= 1");
    for (const auto& r : space.ranges) {
      if (!(r.log10_lower < r.log10_upper)) {
        throw_invalid("Nelder-Mead needs lower < upper for every parameter");
      }
    }
  }
}

SpectralBasis basis_for(const BasisFamily& family,
                        const std::vector<std::string>& names,
                        const std::vector<double>& params,
                        const BoxDomain& original) {
  if (family.kind == BasisFamily::Kind::kCosine) {
    ThinPlateParams tp = family.cosine;
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == "a" || names[k] == "ab") tp.a = params[k];
      if (names[k] == "b" || names[k] == "ab") tp.b = params[k];
    }
    return build_cosine_basis(original.dim(), family.size_per_dim, tp);
  }
  GaussianKernelParams gp = family.gaussian;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == "gamma") gp.gamma = params[k];
    if (names[k] == "lengthscale") gp.lengthscale = params[k];
  }
  return gaussian_nystrom_basis(
      gp, original, NystromConfig{family.size_per_dim, family.cutoff}, true);
}

namespace {

Candidate evaluate_candidate(const NormalizedPattern& data,
                             const BasisFamily& family,
                             const std::vector<std::string>& names,
                             std::vector<double> params,
                             const FitOptions& opts) {
  Candidate c;
  c.params = std::move(params);
  try {
    auto basis = std::make_shared<const SpectralBasis>(
        basis_for(family, names, c.params, data.original));
    c.basis_size = basis->size();
    const FittedModel model = fit_mode(basis, data, opts);
    c.marginal = log_marginal(model);
    c.iterations = model.iterations();
    c.converged = std::isfinite(c.marginal.total);
    if (!c.converged) c.failure = "non-finite log marginal likelihood";
  } catch (const Error& e) {
    c.converged = false;
    c.failure = e.what();
  }
  return c;
}

std::vector<double> log_grid(const ParamRange& r) {
  std::vector<double> out;
  for (Eigen::Index k = 0; k < r.grid_points; ++k) {
    const double t = r.grid_points == 1
                         ? 0.0
                         : static_cast<double>(k) / static_cast<double>(r.grid_points - 1);
    out.push_back(std::pow(10.0, r.log10_lower + t * (r.log10_upper - r.log10_lower)));
  }
  return out;
}

}  // namespace

NelderMeadResult nelder_mead_maximize(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    const Eigen::VectorXd& start, int budget) {
  const Eigen::Index n = start.size();
  NelderMeadResult res;
  res.best = start;
  res.best_value = -std::numeric_limits<double>::infinity();

  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    double v = objective(x);
    if (std::isnan(v)) v = -std::numeric_limits<double>::infinity();
    if (v > res.best_value) {
      res.best_value = v;
      res.best = x;
    }
    return v;
  };
  auto clamp = [&](Eigen::VectorXd x) {
    return Eigen::VectorXd(x.cwiseMax(lower).cwiseMin(upper));
  };
  auto exhausted = [&] { return res.evaluations >= budget; };

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  pts.push_back(clamp(start));
  vals.push_back(eval(pts.back()));
  for (Eigen::Index j = 0; j < n && !exhausted(); ++j) {
    Eigen::VectorXd p = pts.front();
    const double step = 0.25 * (upper[j] - lower[j]);
    p[j] = p[j] + step <= upper[j] ? p[j] + step : p[j] - step;
    pts.push_back(clamp(p));
    vals.push_back(eval(pts.back()));
  }
  if (static_cast<Eigen::Index>(pts.size()) < n + 1) return res;

  std::vector<std::size_t> order(pts.size());
  while (!exhausted()) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return vals[l] > vals[r]; });
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[order.size() - 2];
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += pts[order[k]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = clamp(centroid + (centroid - pts[worst]));
    const double fr = eval(reflected);
    if (fr > vals[order.front()] && !exhausted()) {
      const Eigen::VectorXd expanded =
          clamp(centroid + 2.0 * (centroid - pts[worst]));
      const double fe = eval(expanded);
      if (fe > fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr > vals[second_worst]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    if (exhausted()) break;
    const bool outside = fr > vals[worst];
    const Eigen::VectorXd contracted =
        outside ? clamp(centroid + 0.5 * (reflected - centroid))
                : clamp(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(contracted);
    if (fc > std::max(outside ? fr : vals[worst], vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    // Shrink towards the best vertex.
    const std::size_t best = order.front();
    for (std::size_t k = 0; k < pts.size() && !exhausted(); ++k) {
      if (k == best) continue;
      pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
      vals[k] = eval(pts[k]);
    }
  }
  return res;
}

SelectionResult ml2_search(const NormalizedPattern& data,
                           const BasisFamily& family, const SearchSpace& space,
                           const FitOptions& opts) {
  validate(space, family);
  SelectionResult result;
  result.names = names_of(space);
  std::vector<Candidate> cands;

  if (space.strategy == SearchSpace::Strategy::kGrid) {
    std::vector<std::vector<double>> axes;
    for (const auto& r : space.ranges) axes.push_back(log_grid(r));
    std::size_t total = 1;
    for (const auto& a : axes) total *= a.size();
    for (std::size_t c = 0; c < total; ++c) {
      // Mixed-radix decode, last parameter fastest.
      std::vector<double> p(axes.size());
      std::size_t rest = c;
      for (std::size_t k = axes.size(); k-- > 0;) {
        p[k] = axes[k][rest % axes[k].size()];
        rest /= axes[k].size();
      }
      cands.push_back(evaluate_candidate(data, family, result.names, p, opts));
    }
  } else {
    const auto n = static_cast<Eigen::Index>(space.ranges.size());
    Eigen::VectorXd lo(n), hi(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      lo[j] = space.ranges[static_cast<std::size_t>(j)].log10_lower;
      hi[j] = space.ranges[static_cast<std::size_t>(j)].log10_upper;
    }
    auto objective = [&](const Eigen::VectorXd& log_params) {
      std::vector<double> p;
      for (Eigen::Index j = 0; j < n; ++j) p.push_back(std::pow(10.0, log_params[j]));
      cands.push_back(evaluate_candidate(data, family, result.names, p, opts));
      const Candidate& c = cands.back();
      return c.converged ? c.marginal.total
                         : -std::numeric_limits<double>::infinity();
    };
    nelder_mead_maximize(objective, lo, hi, 0.5 * (lo + hi), space.budget);
  }
  result.evaluations = static_cast<int>(cands.size());

  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    const Candidate& a = cands[l];
    const Candidate& b = cands[r];
    if (a.converged != b.converged) return a.converged;
    if (!a.converged) return false;
    return a.marginal.total > b.marginal.total;
  });
  for (std::size_t k : order) result.table.push_back(std::move(cands[k]));
  if (result.table.empty() || !result.table.front().converged) {
    std::ostringstream os;
    os << "ML-II: all " << result.table.size() << " candidates failed";
    for (std::size_t k = 0; k < std::min<std::size_t>(result.table.size(), 5); ++k) {
      os << "\n  " << result.table[k].failure;
    }
    throw Error(ErrorCode::kConvergence, os.str());
  }
  result.best = 0;
  return result;
}

}  // namespace lbpp
