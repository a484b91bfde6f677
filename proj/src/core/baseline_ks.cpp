#include "baseline_ks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace lbpp {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// log of the isotropic normal density at squared distance r2.
double log_normal_density(double r2, double h, Eigen::Index d) {
  return -0.5 * r2 / (h * h) -
         static_cast<double>(d) * (std::log(h) + 0.5 * std::log(2.0 * std::numbers::pi));
}

void check_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw_invalid("bandwidth must be > 0");
}

}  // namespace

Eigen::VectorXd edge_constants(const Points& centers, const BoxDomain& domain,
                               double bandwidth) {
  check_bandwidth(bandwidth);
  Eigen::VectorXd c(centers.cols());
  for (Eigen::Index i = 0; i < centers.cols(); ++i) {
    double mass = 1.0;
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
      mass *= normal_cdf((domain.upper()[j] - centers(j, i)) / bandwidth) -
              normal_cdf((domain.lower()[j] - centers(j, i)) / bandwidth);
    }
    c[i] = mass;
  }
  return c;
}

KsModel::KsModel(NormalizedPattern data, double bandwidth)
    : data_(std::move(data)), bandwidth_(bandwidth) {
  check_bandwidth(bandwidth);
  edge_ = lbpp::edge_constants(data_.pattern.points(), data_.pattern.domain(), bandwidth);
  for (Eigen::Index i = 0; i < edge_.size(); ++i) {
    if (!(edge_[i] > 0.0)) throw_numerical("edge correction constant underflowed");
  }
}

Eigen::VectorXd KsModel::intensity(const Points& x) const {
  const Points& c = data_.pattern.points();
  const auto d = c.rows();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.cols());
  const Eigen::VectorXd inv_edge = edge_.cwiseInverse();
  for (Eigen::Index q = 0; q < x.cols(); ++q) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < c.cols(); ++i) {
      const double r2 = (x.col(q) - c.col(i)).squaredNorm();
      s += std::exp(log_normal_density(r2, bandwidth_, d)) * inv_edge[i];
    }
    out[q] = s;
  }
  return out;
}

double ks_intensity(const KsModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Points p = x;
  return model.intensity(p)[0];
}

double loo_score(const Points& points, const BoxDomain& domain, double bandwidth) {
  const Eigen::Index m = points.cols();
  if (m < 2) throw_invalid("leave-one-out needs at least two points");
  const Eigen::VectorXd log_c =
      edge_constants(points, domain, bandwidth).array().log().matrix();
  const double log_norm = std::log(static_cast<double>(m - 1));
  std::vector<double> terms(static_cast<std::size_t>(m - 1));
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      const double r2 = (points.col(i) - points.col(j)).squaredNorm();
      terms[k++] = log_normal_density(r2, bandwidth, points.rows()) - log_c[j];
    }
    const double top = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(top)) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double t : terms) s += std::exp(t - top);
    total += top + std::log(s) - log_norm;
  }
  return total / static_cast<double>(m);
}

double loo_score_naive(const Points& points, const BoxDomain& domain,
                       double bandwidth) {
  const Eigen::Index m = points.cols();
  if (m < 2) throw_invalid("leave-one-out needs at least two points");
  const Eigen::VectorXd c = edge_constants(points, domain, bandwidth);
  const double d = static_cast<double>(points.rows());
  const double norm = std::pow(2.0 * std::numbers::pi * bandwidth * bandwidth, -0.5 * d);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      const double r2 = (points.col(i) - points.col(j)).squaredNorm();
      s += norm * std::exp(-0.5 * r2 / (bandwidth * bandwidth)) / c[j];
    }
    total += std::log(s / static_cast<double>(m - 1));
  }
  return total / static_cast<double>(m);
}

std::vector<double> default_bandwidths(const Points& points, const BoxDomain& domain,
                                       std::size_t count) {
  const double diameter = domain.extent().norm();
  double min_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < points.cols(); ++j) {
      const double r = (points.col(i) - points.col(j)).norm();
      if (r > 0.0) min_dist = std::min(min_dist, r);
    }
  }
  if (!std::isfinite(min_dist)) min_dist = 1e-3 * diameter;
  const double lo = std::log(0.5 * min_dist);
  const double hi = std::log(0.5 * diameter);
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = count == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    out.push_back(std::exp(lo + t * (hi - lo)));
  }
  return out;
}

BandwidthSelection loo_bandwidth(const NormalizedPattern& data,
                                 std::vector<double> candidates) {
  const Points& pts = data.pattern.points();
  const BoxDomain& dom = data.pattern.domain();
  if (pts.cols() < 2) throw_invalid("bandwidth selection needs at least two points");
  if (candidates.empty()) candidates = default_bandwidths(pts, dom);
  BandwidthSelection sel;
  sel.candidates = candidates;
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (double h : candidates) {
    check_bandwidth(h);
    const double s = loo_score(pts, dom, h);
    sel.scores.push_back(s);
    if (s > best) {
      best = s;
      sel.bandwidth = h;
      found = true;
    }
  }
  if (!found) throw_numerical("every candidate bandwidth has a -inf leave-one-out score");
  return sel;
}

IntensityFn ks_intensity_fn(std::shared_ptr<const KsModel> model) {
  if (!model) throw_invalid("null KS model");
  const BoxDomain original = model->data().original;
  const double jac = model->data().jacobian;
  auto eval = [model, original, jac](const Points& x) {
    return Eigen::VectorXd(jac * model->intensity(to_standard(original, x)));
  };
  std::ostringstream desc;
  desc << "KS+EC, bandwidth " << model->bandwidth() << " (standard coordinates)";
  return IntensityFn{original, std::move(eval), 0.0, true, desc.str()};
}

}  // namespace lbpp
