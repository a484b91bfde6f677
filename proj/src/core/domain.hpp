#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace lbpp {

// Point sets are stored column-wise: a d x m matrix, one point per column.
using Points = Eigen::MatrixXd;

// Axis-aligned closed box [lower, upper] in R^d.
class BoxDomain {
 public:
  BoxDomain(Eigen::VectorXd lower, Eigen::VectorXd upper);

  // The standard fitting domain [0, pi]^d.
  static BoxDomain standard(Eigen::Index dim);

  [[nodiscard]] Eigen::Index dim() const { return lower_.size(); }
  [[nodiscard]] const Eigen::VectorXd& lower() const { return lower_; }
  [[nodiscard]] const Eigen::VectorXd& upper() const { return upper_; }
  [[nodiscard]] Eigen::VectorXd extent() const { return upper_ - lower_; }
  [[nodiscard]] double volume() const;
  [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

// One realization of a point process on a box.
class PointPattern {
 public:
  PointPattern(Points points, BoxDomain domain);

  static PointPattern empty(BoxDomain domain);

  [[nodiscard]] const Points& points() const { return points_; }
  [[nodiscard]] const BoxDomain& domain() const { return domain_; }
  [[nodiscard]] Eigen::Index size() const { return points_.cols(); }
  [[nodiscard]] Eigen::Index dim() const { return domain_.dim(); }
  [[nodiscard]] Eigen::VectorXd point(Eigen::Index i) const {
    return points_.col(i);
  }

 private:
  Points points_;
  BoxDomain domain_;
};

// A pattern mapped affinely onto [0, pi]^d. Intensities convert back as
// lambda_orig(x) = lambda_std(T(x)) * jacobian.
struct NormalizedPattern {
  PointPattern pattern;
  BoxDomain original;
  double jacobian;
};

Eigen::VectorXd to_standard_point(const BoxDomain& original,
                                  const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd to_original_point(const BoxDomain& original,
                                  const Eigen::Ref<const Eigen::VectorXd>& u);
Points to_standard(const BoxDomain& original, const Points& x);
Points to_original(const BoxDomain& original, const Points& u);

// pi^d / vol(original).
double standard_jacobian(const BoxDomain& original);

NormalizedPattern normalize(const PointPattern& pattern);

PointPattern load_point_pattern(const std::string& path,
                                const BoxDomain& domain);

// Writes the CSV form read by load_point_pattern. A non-empty comment is
// emitted as a leading "# ..." line.
void write_point_pattern(const std::string& path, const PointPattern& pattern,
                         const std::string& comment = {});

// Independent Bernoulli(p) assignment of each point to the training half.
// Point i consumes the i-th uniform of the seeded stream.
std::pair<PointPattern, PointPattern> bernoulli_split(
    const PointPattern& pattern, double p, std::uint64_t seed);

}  // namespace lbpp

namespace lbpp {

// Cell midpoints of a uniform tensor grid with n_per_dim cells per axis,
// d x n_per_dim^d, first axis fastest.
Points midpoint_grid(const BoxDomain& domain, Eigen::Index n_per_dim);

}  // namespace lbpp
