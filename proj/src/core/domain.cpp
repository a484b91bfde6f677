#include "domain.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/random/uniform_01.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace lbpp {

BoxDomain::BoxDomain(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size()) {
    throw_invalid("box domain needs matching, non-empty lower/upper bounds");
  }
  for (Eigen::Index j = 0; j < lower_.size(); ++j) {
    if (!std::isfinite(lower_[j]) || !std::isfinite(upper_[j]) ||
        !(upper_[j] > lower_[j])) {
      std::ostringstream os;
      os << "box domain axis " << j << " has upper <= lower (" << lower_[j]
         << ", " << upper_[j] << ")";
      throw_invalid(os.str());
    }
  }
}

BoxDomain BoxDomain::standard(Eigen::Index dim) {
  return BoxDomain(Eigen::VectorXd::Zero(dim),
                   Eigen::VectorXd::Constant(dim, std::numbers::pi));
}

double BoxDomain::volume() const { return extent().prod(); }

bool BoxDomain::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) return false;
  return (x.array() >= lower_.array()).all() &&
         (x.array() <= upper_.array()).all();
}

PointPattern::PointPattern(Points points, BoxDomain domain)
    : points_(std::move(points)), domain_(std::move(domain)) {
  if (points_.cols() > 0 && points_.rows() != domain_.dim()) {
    throw_invalid("point dimension does not match domain dimension");
  }
  if (points_.cols() == 0) points_.resize(domain_.dim(), 0);
  for (Eigen::Index i = 0; i < points_.cols(); ++i) {
    if (!domain_.contains(points_.col(i))) {
      std::ostringstream os;
      os << "point " << i << " (" << points_.col(i).transpose()
         << ") lies outside the domain";
      throw Error(ErrorCode::kDomain, os.str());
    }
  }
}

PointPattern PointPattern::empty(BoxDomain domain) {
  const auto d = domain.dim();
  return PointPattern(Points(d, 0), std::move(domain));
}

Eigen::VectorXd to_standard_point(const BoxDomain& original,
                                  const Eigen::Ref<const Eigen::VectorXd>& x) {
  return (std::numbers::pi * (x - original.lower()).array() /
          original.extent().array())
      .matrix();
}

Eigen::VectorXd to_original_point(const BoxDomain& original,
                                  const Eigen::Ref<const Eigen::VectorXd>& u) {
  return (original.lower().array() +
          u.array() * original.extent().array() / std::numbers::pi)
      .matrix();
}

Points to_standard(const BoxDomain& original, const Points& x) {
  const Eigen::ArrayXd scale = std::numbers::pi / original.extent().array();
  return ((x.colwise() - original.lower()).array().colwise() * scale).matrix();
}

Points to_original(const BoxDomain& original, const Points& u) {
  const Eigen::ArrayXd scale = original.extent().array() / std::numbers::pi;
  return (u.array().colwise() * scale).matrix().colwise() + original.lower();
}

double standard_jacobian(const BoxDomain& original) {
  return std::pow(std::numbers::pi, static_cast<double>(original.dim())) /
         original.volume();
}

NormalizedPattern normalize(const PointPattern& pattern) {
  const auto& dom = pattern.domain();
  Points u = to_standard(dom, pattern.points());
  // Round-off may push boundary points a hair outside [0, pi].
  u = u.cwiseMax(0.0).cwiseMin(std::numbers::pi);
  return NormalizedPattern{
      PointPattern(std::move(u), BoxDomain::standard(dom.dim())), dom,
      standard_jacobian(dom)};
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{}
                                         : cell.substr(b, e - b + 1));
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

PointPattern load_point_pattern(const std::string& path,
                                const BoxDomain& domain) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open point file: " + path);

  const auto d = domain.dim();
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++row;
    if (is_blank(line) || line.front() == '#') continue;
    const auto cells = split_row(line);
    double first = 0.0;
    if (!seen_content) {
      seen_content = true;
      if (!cells.empty() && !parse_double(cells.front(), first)) continue;
    }
    if (static_cast<Eigen::Index>(cells.size()) != d) {
      std::ostringstream os;
      os << path << ": row " << row << " has " << cells.size()
         << " columns, expected " << d;
      throw Error(ErrorCode::kParse, os.str());
    }
    for (const auto& c : cells) {
      double v = 0.0;
      if (!parse_double(c, v)) {
        std::ostringstream os;
        os << path << ": row " << row << ": cannot parse '" << c << "'";
        throw Error(ErrorCode::kParse, os.str());
      }
      values.push_back(v);
    }
  }

  const auto m = static_cast<Eigen::Index>(values.size()) / d;
  Points pts = Eigen::Map<const Points>(values.data(), d, m);
  std::ostringstream bad;
  std::size_t n_bad = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!domain.contains(pts.col(i))) {
      if (n_bad++ < 10) bad << " (" << pts.col(i).transpose() << ")";
    }
  }
  if (n_bad > 0) {
    std::ostringstream os;
    os << path << ": " << n_bad << " point(s) outside the domain:" << bad.str();
    throw Error(ErrorCode::kDomain, os.str());
  }
  return PointPattern(std::move(pts), domain);
}

void write_point_pattern(const std::string& path, const PointPattern& pattern,
                         const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write point file: " + path);
  if (!comment.empty()) out << "# " << comment << '\n';
  for (Eigen::Index j = 0; j < pattern.dim(); ++j) {
    out << (j ? "," : "") << 'x' << (j + 1);
  }
  out << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < pattern.size(); ++i) {
    for (Eigen::Index j = 0; j < pattern.dim(); ++j) {
      out << (j ? "," : "") << pattern.points()(j, i);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

std::pair<PointPattern, PointPattern> bernoulli_split(
    const PointPattern& pattern, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw_invalid("split probability must be in (0,1)");
  Rng rng = make_rng(seed);
  boost::random::uniform_01<double> unif;
  std::vector<Eigen::Index> train, test;
  for (Eigen::Index i = 0; i < pattern.size(); ++i) {
    (unif(rng) < p ? train : test).push_back(i);
  }
  auto gather = [&](const std::vector<Eigen::Index>& idx) {
    Points out(pattern.dim(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.col(static_cast<Eigen::Index>(k)) = pattern.points().col(idx[k]);
    }
    return PointPattern(std::move(out), pattern.domain());
  };
  return {gather(train), gather(test)};
}

}  // namespace lbpp

namespace lbpp {

Points midpoint_grid(const BoxDomain& domain, Eigen::Index n_per_dim) {
  if (n_per_dim < 1) throw_invalid("grid needs at least one point per axis");
  const auto d = domain.dim();
  Eigen::Index total = 1;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (total > (Eigen::Index{1} << 40) / n_per_dim) {
      throw_invalid("grid is too large");
    }
    total *= n_per_dim;
  }
  const Eigen::VectorXd h = domain.extent() / static_cast<double>(n_per_dim);
  Points out(d, total);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d), 0);
  for (Eigen::Index k = 0; k < total; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out(j, k) = domain.lower()[j] +
                  (static_cast<double>(idx[static_cast<std::size_t>(j)]) + 0.5) * h[j];
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      if (++idx[static_cast<std::size_t>(j)] < n_per_dim) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }
  return out;
}

}  // namespace lbpp
