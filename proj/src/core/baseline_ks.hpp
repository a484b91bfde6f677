#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "domain.hpp"
#include "intensity.hpp"

namespace lbpp {

// Kernel smoothing with edge correction: each isotropic Gaussian kernel is
// renormalized to unit mass inside the domain. Everything is in standard
// coordinates.
class KsModel {
 public:
  KsModel(NormalizedPattern data, double bandwidth);

  [[nodiscard]] double bandwidth() const { return bandwidth_; }
  [[nodiscard]] const NormalizedPattern& data() const { return data_; }
  // c_i = mass of N(x_i, h^2 I) inside the domain.
  [[nodiscard]] const Eigen::VectorXd& edge_constants() const { return edge_; }

  // sum_i N(x; x_i, h^2 I) / c_i at standard-coordinate points.
  [[nodiscard]] Eigen::VectorXd intensity(const Points& x) const;

 private:
  NormalizedPattern data_;
  double bandwidth_;
  Eigen::VectorXd edge_;
};

Eigen::VectorXd edge_constants(const Points& centers, const BoxDomain& domain,
                               double bandwidth);

double ks_intensity(const KsModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// Average leave-one-out log density for one bandwidth, via log-sum-exp.
double loo_score(const Points& points, const BoxDomain& domain, double bandwidth);

// Same quantity summed naively (no log-sum-exp); for cross-checking.
double loo_score_naive(const Points& points, const BoxDomain& domain,
                       double bandwidth);

// 30 log-spaced bandwidths from half the smallest positive pairwise distance
// to half the domain diameter.
std::vector<double> default_bandwidths(const Points& points, const BoxDomain& domain,
                                       std::size_t count = 30);

struct BandwidthSelection {
  double bandwidth = 0.0;
  std::vector<double> candidates;
  std::vector<double> scores;
};

// Maximizes loo_score; first candidate wins ties. Throws if every candidate
// scores -inf.
BandwidthSelection loo_bandwidth(const NormalizedPattern& data,
                                 std::vector<double> candidates = {});

// The fitted estimate as an intensity on the original domain, original units.
IntensityFn ks_intensity_fn(std::shared_ptr<const KsModel> model);

}  // namespace lbpp
