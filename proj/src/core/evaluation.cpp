#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "errors.hpp"

namespace lbpp {

namespace {

constexpr Eigen::Index kBlock = 4096;

// Calls visit(block_nodes, block_offset) over the quadrature nodes in blocks.
template <class Visit>
void for_each_block(const Quadrature& q, Visit&& visit) {
  const Points nodes = q.nodes();
  for (Eigen::Index start = 0; start < nodes.cols(); start += kBlock) {
    const Eigen::Index n = std::min(kBlock, nodes.cols() - start);
    visit(Points(nodes.middleCols(start, n)), start);
  }
}

void check_finite(const Eigen::VectorXd& v, const Points& nodes,
                  const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << what << " is not finite (" << v[i] << ") at node ("
         << nodes.col(i).transpose() << ")";
      throw_numerical(os.str());
    }
  }
}

void check_same_domain(const IntensityFn& a, const IntensityFn& b,
                       const Quadrature& q) {
  if (a.domain.dim() != q.domain().dim() || b.domain.dim() != q.domain().dim()) {
    throw_invalid("intensity and quadrature dimensions differ");
  }
}

}  // namespace

Quadrature::Quadrature(BoxDomain domain, Eigen::Index points_per_dim)
    : domain_(std::move(domain)), per_dim_(points_per_dim) {
  if (per_dim_ < 1) throw_invalid("quadrature needs at least one node per axis");
}

Quadrature Quadrature::standard_resolution(BoxDomain domain) {
  const auto d = domain.dim();
  return Quadrature(std::move(domain), default_quadrature_points(d));
}

Eigen::Index default_quadrature_points(Eigen::Index dim) {
  return dim == 1 ? 4096 : (dim == 2 ? 256 : 32);
}

Eigen::Index Quadrature::size() const {
  Eigen::Index n = 1;
  for (Eigen::Index j = 0; j < domain_.dim(); ++j) n *= per_dim_;
  return n;
}

double Quadrature::weight() const {
  return domain_.volume() / static_cast<double>(size());
}

Points Quadrature::nodes() const { return midpoint_grid(domain_, per_dim_); }

double compensated_sum(const Eigen::Ref<const Eigen::VectorXd>& v) {
  double sum = 0.0;
  double c = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double t = sum + v[i];
    if (std::abs(sum) >= std::abs(v[i])) {
      c += (sum - t) + v[i];
    } else {
      c += (v[i] - t) + sum;
    }
    sum = t;
  }
  return sum + c;
}

double Quadrature::integrate(
    const std::function<Eigen::VectorXd(const Points&)>& g) const {
  Eigen::VectorXd all(size());
  for_each_block(*this, [&](const Points& nodes, Eigen::Index start) {
    Eigen::VectorXd v = g(nodes);
    check_finite(v, nodes, "integrand");
    all.segment(start, v.size()) = v;
  });
  return weight() * compensated_sum(all);
}

double l2_error(const IntensityFn& estimate, const IntensityFn& truth,
                const Quadrature& q) {
  check_same_domain(estimate, truth, q);
  return q.integrate([&](const Points& x) {
    return Eigen::VectorXd((estimate.eval(x) - truth.eval(x)).array().square());
  });
}

double expected_log_likelihood(const IntensityFn& truth,
                               const IntensityFn& estimate,
                               const Quadrature& q) {
  check_same_domain(estimate, truth, q);
  bool degenerate = false;
  const double value = q.integrate([&](const Points& x) {
    const Eigen::VectorXd t = truth.eval(x);
    const Eigen::VectorXd e = estimate.eval(x);
    Eigen::VectorXd out(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      if (t[i] > 0.0) {
        if (!(e[i] > 0.0)) {
          degenerate = true;
          out[i] = 0.0;
          continue;
        }
        out[i] = t[i] * std::log(e[i]) - e[i];
      } else {
        out[i] = -e[i];
      }
    }
    return out;
  });
  return degenerate ? -std::numeric_limits<double>::infinity() : value;
}

double test_log_likelihood(const IntensityFn& estimate,
                           const PointPattern& test, double integral) {
  if (test.size() == 0) return -integral;
  const Eigen::VectorXd v = estimate.eval(test.points());
  if ((v.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
  return compensated_sum(v.array().log().matrix()) - integral;
}

double test_log_likelihood(const IntensityFn& estimate,
                           const PointPattern& test, const Quadrature& q) {
  const double integral = q.integrate(estimate.eval);
  return test_log_likelihood(estimate, test, integral);
}

double pp_kl_divergence(const IntensityFn& f, const IntensityFn& g,
                        const Quadrature& q) {
  check_same_domain(f, g, q);
  bool degenerate = false;
  const double value = q.integrate([&](const Points& x) {
    const Eigen::VectorXd fv = f.eval(x);
    const Eigen::VectorXd gv = g.eval(x);
    Eigen::VectorXd out(fv.size());
    for (Eigen::Index i = 0; i < fv.size(); ++i) {
      if (fv[i] > 0.0) {
        if (!(gv[i] > 0.0)) {
          degenerate = true;
          out[i] = 0.0;
          continue;
        }
        out[i] = fv[i] * std::log(fv[i] / gv[i]) + gv[i] - fv[i];
      } else {
        out[i] = gv[i];
      }
    }
    return out;
  });
  return degenerate ? std::numeric_limits<double>::infinity() : value;
}

IntensityFn constant_intensity(const BoxDomain& domain, double value) {
  if (!(value >= 0.0)) throw_invalid("constant intensity must be >= 0");
  return IntensityFn{domain,
                     [value](const Points& x) {
                       return Eigen::VectorXd::Constant(x.cols(), value);
                     },
                     value, false, "constant"};
}

}  // namespace lbpp
