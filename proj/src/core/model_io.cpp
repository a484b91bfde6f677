#include "model_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "errors.hpp"
#include "kernels.hpp"

namespace lbpp {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Non-finite doubles are not representable in JSON; store them as strings.
json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

json descriptor_to_json(const BasisDescriptor& descriptor) {
  if (const auto* c = std::get_if<CosineDescriptor>(&descriptor)) {
    return {{"kind", "cosine"},
            {"dim", c->dim},
            {"n_per_dim", c->n_per_dim},
            {"a", c->params.a},
            {"b", c->params.b},
            {"m_order", c->params.m_order}};
  }
  if (const auto* n = std::get_if<NystromDescriptor>(&descriptor)) {
    return {{"kind", "nystrom_gaussian"},
            {"gamma", n->kernel.gamma},
            {"lengthscale", n->kernel.lengthscale},
            {"grid_per_dim", n->grid_per_dim},
            {"max_rank", n->cutoff.max_rank},
            {"rel_threshold", n->cutoff.rel_threshold},
            {"kernel_lower", vec_to_json(n->kernel_lower)},
            {"kernel_upper", vec_to_json(n->kernel_upper)},
            {"standard_coords", n->standard_coords}};
  }
  return {{"kind", "custom"}, {"label", std::get<CustomDescriptor>(descriptor).label}};
}

BasisDescriptor descriptor_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "cosine") {
    CosineDescriptor c;
    c.dim = j.at("dim").get<Eigen::Index>();
    c.n_per_dim = j.at("n_per_dim").get<Eigen::Index>();
    c.params.a = j.at("a").get<double>();
    c.params.b = j.at("b").get<double>();
    c.params.m_order = j.at("m_order").get<int>();
    return c;
  }
  if (kind == "nystrom_gaussian") {
    NystromDescriptor n;
    n.kernel.gamma = j.at("gamma").get<double>();
    n.kernel.lengthscale = j.at("lengthscale").get<double>();
    n.grid_per_dim = j.at("grid_per_dim").get<Eigen::Index>();
    n.cutoff.max_rank = j.at("max_rank").get<Eigen::Index>();
    n.cutoff.rel_threshold = j.at("rel_threshold").get<double>();
    n.kernel_lower = vec_from_json(j.at("kernel_lower"));
    n.kernel_upper = vec_from_json(j.at("kernel_upper"));
    n.standard_coords = j.at("standard_coords").get<bool>();
    return n;
  }
  if (kind == "custom") return CustomDescriptor{j.value("label", std::string{})};
  throw Error(ErrorCode::kParse, "unknown basis kind '" + kind + "'");
}

json model_to_json(const FittedModel& model, const json& config) {
  const auto& data = model.data();
  const Points orig = to_original(data.original, data.pattern.points());
  json points = json::array();
  for (Eigen::Index i = 0; i < orig.cols(); ++i) points.push_back(vec_to_json(orig.col(i)));
  const auto& p = model.log_marginal_parts();
  return {{"format", kModelFormat},
          {"version", kModelFormatVersion},
          {"basis", descriptor_to_json(model.basis().descriptor())},
          {"domain",
           {{"lower", vec_to_json(data.original.lower())},
            {"upper", vec_to_json(data.original.upper())}}},
          {"data", points},
          {"w_hat", vec_to_json(model.w_hat())},
          {"alpha_hat", vec_to_json(model.alpha_hat())},
          {"iterations", model.iterations()},
          {"log_marginal",
           {{"data_term", number(p.data_term)},
            {"quadratic_term", number(p.quadratic_term)},
            {"v_term", number(p.v_term)},
            {"logdet_s", number(p.logdet_s)},
            {"constant", number(p.constant)},
            {"total", number(p.total())}}},
          {"config", config}};
}

FittedModel model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw Error(ErrorCode::kParse, "not an lbpp model file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::kParse,
                  "unsupported model format version " + std::to_string(version));
    }
    const BasisDescriptor desc = descriptor_from_json(j.at("basis"));
    if (std::holds_alternative<CustomDescriptor>(desc)) {
      throw Error(ErrorCode::kInvalidArgument, "custom bases cannot be restored from file");
    }
    BoxDomain original(vec_from_json(j.at("domain").at("lower")),
                       vec_from_json(j.at("domain").at("upper")));
    const auto& jp = j.at("data");
    Points pts(original.dim(), static_cast<Eigen::Index>(jp.size()));
    for (std::size_t i = 0; i < jp.size(); ++i) {
      const Eigen::VectorXd x = vec_from_json(jp[i]);
      if (x.size() != original.dim()) {
        throw Error(ErrorCode::kParse, "data point dimension does not match the domain");
      }
      pts.col(static_cast<Eigen::Index>(i)) = x;
    }
    NormalizedPattern data = normalize(PointPattern(pts, original));
    auto basis = std::make_shared<const SpectralBasis>(rebuild_basis(desc));
    Eigen::VectorXd w = vec_from_json(j.at("w_hat"));
    if (w.size() != basis->size()) {
      throw Error(ErrorCode::kParse, "stored weights do not match the rebuilt basis size");
    }
    return FittedModel::assemble(std::move(basis), std::move(data), std::move(w), {},
                                 j.value("iterations", 0));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::string& path, const FittedModel& model, const json& config) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << model_to_json(model, config).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

FittedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "'" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

void write_selection_csv(const std::string& path, const SelectionResult& result,
                         const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  if (!comment.empty()) out << "# " << comment << '\n';
  for (const auto& n : result.names) out << n << ',';
  out << "basis_size,converged,iterations,data_term,quadratic_term,v_term,logdet_s,"
         "constant,total\n";
  out << std::setprecision(12);
  for (const auto& c : result.table) {
    for (double p : c.params) out << p << ',';
    out << c.basis_size << ',' << (c.converged ? 1 : 0) << ',' << c.iterations;
    if (c.converged) {
      const auto& p = c.marginal.parts;
      out << ',' << p.data_term << ',' << p.quadratic_term << ',' << p.v_term << ','
          << p.logdet_s << ',' << p.constant << ',' << c.marginal.total;
    } else {
      out << ",,,,,,";
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

}  // namespace lbpp
