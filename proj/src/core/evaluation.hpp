#pragma once

#include <functional>

#include <Eigen/Dense>

#include "domain.hpp"
#include "intensity.hpp"

namespace lbpp {

// Midpoint tensor-product rule on a box: points_per_dim^d nodes with equal
// weights vol / #nodes.
class Quadrature {
 public:
  Quadrature(BoxDomain domain, Eigen::Index points_per_dim);

  // 4096 nodes in 1-d, 256^2 in 2-d, 32^d beyond.
  static Quadrature standard_resolution(BoxDomain domain);

  [[nodiscard]] const BoxDomain& domain() const { return domain_; }
  [[nodiscard]] Eigen::Index points_per_dim() const { return per_dim_; }
  [[nodiscard]] Eigen::Index size() const;
  [[nodiscard]] double weight() const;
  [[nodiscard]] Points nodes() const;

  // Sum of weight * g over the nodes; g maps a block of nodes to values.
  // Throws if g is not finite at some node.
  [[nodiscard]] double integrate(
      const std::function<Eigen::VectorXd(const Points&)>& g) const;

 private:
  BoxDomain domain_;
  Eigen::Index per_dim_;
};

Eigen::Index default_quadrature_points(Eigen::Index dim);

// Neumaier-compensated sum.
double compensated_sum(const Eigen::Ref<const Eigen::VectorXd>& v);

// int (est - truth)^2 dx.
double l2_error(const IntensityFn& estimate, const IntensityFn& truth,
                const Quadrature& q);

// int (truth log est - est) dx: the expected log likelihood of a draw from
// PP(truth) under PP(est). Nodes with truth = 0 contribute -est. Returns -inf
// if est = 0 where truth > 0.
double expected_log_likelihood(const IntensityFn& truth,
                               const IntensityFn& estimate,
                               const Quadrature& q);

// sum_i log est(x_i) - int est dx. Returns -inf if est vanishes at a point.
double test_log_likelihood(const IntensityFn& estimate,
                           const PointPattern& test, const Quadrature& q);

// Same with a known value of int est dx.
double test_log_likelihood(const IntensityFn& estimate,
                           const PointPattern& test, double integral);

// int (f log(f/g) + g - f) dx.
double pp_kl_divergence(const IntensityFn& f, const IntensityFn& g,
                        const Quadrature& q);

}  // namespace lbpp
