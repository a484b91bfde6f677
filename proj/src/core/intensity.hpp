#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "domain.hpp"

namespace lbpp {

// An evaluable intensity on a box. `eval` maps a d x n block of points to n
// nonnegative values. upper_bound is either a certified bound on sup lambda or
// an empirical one (bound_is_empirical); 0 means "no bound known".
struct IntensityFn {
  BoxDomain domain;
  std::function<Eigen::VectorXd(const Points&)> eval;
  double upper_bound = 0.0;
  bool bound_is_empirical = true;
  std::string descriptor;

  [[nodiscard]] double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Points p = x;
    return eval(p)[0];
  }
};

IntensityFn constant_intensity(const BoxDomain& domain, double value);

}  // namespace lbpp
