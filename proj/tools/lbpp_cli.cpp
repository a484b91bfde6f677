#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lbpp/lbpp.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct CliError {
  int exit_code;
  std::string message;
};

int exit_code_for(lbpp_status s) {
  switch (s) {
    case LBPP_ERR_CONVERGENCE:
    case LBPP_ERR_NUMERICAL:
    case LBPP_ERR_INTERNAL:
      return kExitNumerical;
    default:
      return kExitUsage;
  }
}

void check(lbpp_status s, const std::string& context) {
  if (s == LBPP_OK) return;
  throw CliError{exit_code_for(s), context + ": " + lbpp_last_error()};
}

[[noreturn]] void usage_error(const std::string& msg) { throw CliError{kExitUsage, msg}; }

struct PatternDeleter {
  void operator()(lbpp_pattern* p) const { lbpp_pattern_free(p); }
};
struct ModelDeleter {
  void operator()(lbpp_model* p) const { lbpp_model_free(p); }
};
struct IntensityDeleter {
  void operator()(lbpp_intensity* p) const { lbpp_intensity_free(p); }
};
struct SelectionDeleter {
  void operator()(lbpp_selection* p) const { lbpp_selection_free(p); }
};
using Pattern = std::unique_ptr<lbpp_pattern, PatternDeleter>;
using Model = std::unique_ptr<lbpp_model, ModelDeleter>;
using Intensity = std::unique_ptr<lbpp_intensity, IntensityDeleter>;
using Selection = std::unique_ptr<lbpp_selection, SelectionDeleter>;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent seed for replicate `stream` of a run seeded with `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix(mix(seed) ^ mix(stream + 0x632be59bd9b4e019ULL));
}

std::string data_dir() {
  if (const char* env = std::getenv("LBPP_DATA_DIR")) return env;
  return LBPP_DEFAULT_DATA_DIR;
}

// ---- data selection ------------------------------------------------------

struct DataOptions {
  std::string path;
  std::string dataset;
  std::vector<double> lower;
  std::vector<double> upper;

  void add(CLI::App* app) {
    app->add_option("--data", path, "CSV of points (one per row)");
    app->add_option("--dataset", dataset, "bundled dataset")
        ->check(CLI::IsMember({"coal", "redwood", "cav"}));
    app->add_option("--lower", lower, "domain lower corner")->delimiter(',');
    app->add_option("--upper", upper, "domain upper corner")->delimiter(',');
  }

  // Resolves path and domain; explicit --lower/--upper override dataset defaults.
  void resolve() {
    if (!dataset.empty()) {
      const bool coal = dataset == "coal";
      if (path.empty()) path = data_dir() + "/" + dataset + ".csv";
      if (lower.empty()) lower = coal ? std::vector<double>{1851} : std::vector<double>{0, 0};
      if (upper.empty()) upper = coal ? std::vector<double>{1962} : std::vector<double>{1, 1};
    }
    if (path.empty()) usage_error("no input: give --data or --dataset");
    if (lower.empty() || upper.empty()) usage_error("--lower and --upper are required with --data");
    if (lower.size() != upper.size()) usage_error("--lower and --upper differ in dimension");
  }

  Pattern load() {
    resolve();
    lbpp_pattern* p = nullptr;
    check(lbpp_pattern_load_csv(path.c_str(), lower.size(), lower.data(), upper.data(), &p),
          "loading '" + path + "'");
    return Pattern(p);
  }

  json echo() const {
    return {{"data", path}, {"dataset", dataset}, {"lower", lower}, {"upper", upper}};
  }
};

// ---- model options ---------------------------------------------------------

struct MethodOptions {
  std::string method = "lbpp_cos";
  std::size_t n = 32;
  double a = 1.0;
  double b = 1.0;
  int m_order = 2;
  double gamma = 1.0;
  double lengthscale = 0.1;
  std::size_t max_rank = 0;
  int max_iters = 100;
  double grad_tol = 1e-10;

  void add(CLI::App* app, bool allow_ks) {
    std::vector<std::string> methods{"lbpp_cos", "lbpp_g"};
    if (allow_ks) methods.emplace_back("ks_ec");
    app->add_option("--method", method, "estimator")->check(CLI::IsMember(methods));
    app->add_option("--n", n, "cosine frequencies / Nystrom grid points per dimension")
        ->check(CLI::PositiveNumber);
    app->add_option("--a", a, "thin-plate weight a")->check(CLI::PositiveNumber);
    app->add_option("--b", b, "thin-plate weight b")->check(CLI::PositiveNumber);
    app->add_option("--m-order", m_order, "thin-plate order")->check(CLI::PositiveNumber);
    app->add_option("--gamma", gamma, "Gaussian kernel amplitude")->check(CLI::PositiveNumber);
    app->add_option("--lengthscale", lengthscale, "Gaussian kernel lengthscale (data units)")
        ->check(CLI::PositiveNumber);
    app->add_option("--max-rank", max_rank, "Nystrom rank cap (0 = none)");
    app->add_option("--max-iters", max_iters, "Newton iteration cap")->check(CLI::PositiveNumber);
    app->add_option("--grad-tol", grad_tol, "Newton gradient tolerance")->check(CLI::PositiveNumber);
  }

  lbpp_family family() const {
    lbpp_family f;
    check(lbpp_family_default(method == "lbpp_g" ? LBPP_FAMILY_GAUSSIAN : LBPP_FAMILY_COSINE, &f),
          "family");
    f.size_per_dim = n;
    f.a = a;
    f.b = b;
    f.m_order = m_order;
    f.gamma = gamma;
    f.lengthscale = lengthscale;
    f.max_rank = max_rank;
    return f;
  }

  lbpp_fit_options fit_options() const {
    lbpp_fit_options o;
    lbpp_fit_options_default(&o);
    o.max_newton_iters = max_iters;
    o.grad_tol = grad_tol;
    return o;
  }

  json echo() const {
    json j{{"method", method}, {"n", n}, {"max_iters", max_iters}, {"grad_tol", grad_tol}};
    if (method == "lbpp_cos") {
      j.update({{"a", a}, {"b", b}, {"m_order", m_order}});
    } else if (method == "lbpp_g") {
      j.update({{"gamma", gamma}, {"lengthscale", lengthscale}, {"max_rank", max_rank}});
    }
    return j;
  }
};

json marginal_json(const lbpp_marginal& m) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"data_term", num(m.data_term)}, {"quadratic_term", num(m.quadratic_term)},
          {"v_term", num(m.v_term)},       {"logdet_s", num(m.logdet_s)},
          {"constant", num(m.constant)},   {"total", num(m.total)}};
}

std::vector<double> lower_of(const lbpp_model* m, std::size_t dim, std::vector<double>* upper) {
  // The model's domain is recovered through its mean-intensity function.
  lbpp_intensity* fn = nullptr;
  check(lbpp_intensity_from_model(m, &fn), "model intensity");
  Intensity holder(fn);
  std::vector<double> lo(dim), hi(dim);
  check(lbpp_intensity_get_domain(fn, lo.data(), hi.data()), "model domain");
  if (upper) *upper = hi;
  return lo;
}

// Midpoints of a G^d grid over [lower, upper], first axis fastest, row-major.
std::vector<double> grid_points(const std::vector<double>& lo, const std::vector<double>& hi,
                                std::size_t g) {
  const std::size_t d = lo.size();
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (total > 50'000'000 / g) usage_error("prediction grid too large");
    total *= g;
  }
  std::vector<double> out(total * d);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t k = rem % g;
      rem /= g;
      out[i * d + j] = lo[j] + (static_cast<double>(k) + 0.5) * (hi[j] - lo[j]) / static_cast<double>(g);
    }
  }
  return out;
}

void write_predictions(const std::string& path, const lbpp_model* model,
                       const std::vector<double>& pts, std::size_t dim, const json& echo) {
  const std::size_t count = pts.size() / dim;
  std::vector<lbpp_prediction> pred(count);
  check(lbpp_model_predict(model, pts.data(), count, pred.data()), "prediction");
  std::ofstream out(path);
  if (!out) usage_error("cannot write '" + path + "'");
  out << "# config: " << echo.dump() << '\n';
  for (std::size_t j = 0; j < dim; ++j) out << 'x' << (j + 1) << ',';
  out << "mean_intensity,q10,q50,q90\n";
  out << std::setprecision(12);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < dim; ++j) out << pts[i * dim + j] << ',';
    out << pred[i].mean_intensity << ',' << pred[i].q10 << ',' << pred[i].q50 << ','
        << pred[i].q90 << '\n';
  }
  if (!out) usage_error("write to '" + path + "' failed");
}

std::string stem(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
  return path.substr(0, dot);
}

// ---- fit -------------------------------------------------------------------

struct FitCommand {
  DataOptions data;
  MethodOptions method;
  std::string out = "model.json";
  std::size_t emit_grid = 0;
  std::string grid_out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("fit", "fit an intensity at fixed hyperparameters");
    data.add(cmd);
    method.add(cmd, false);
    cmd->add_option("--out", out, "model JSON path");
    cmd->add_option("--emit-grid", emit_grid, "also write predictions on a G^d grid");
    cmd->add_option("--grid-out", grid_out, "grid CSV path (default <out>_grid.csv)");
    cmd->callback([this] { run(); });
  }

  json echo() const {
    json j{{"command", "fit"}, {"out", out}, {"emit_grid", emit_grid}};
    j.update(data.echo());
    j.update(method.echo());
    return j;
  }

  void run() {
    auto pattern = data.load();
    const auto fam = method.family();
    const auto opts = method.fit_options();
    lbpp_model* raw = nullptr;
    check(lbpp_fit(pattern.get(), &fam, &opts, &raw), "fit");
    Model model(raw);
    const json cfg = echo();
    check(lbpp_model_save(model.get(), out.c_str(), cfg.dump().c_str()), "saving model");
    lbpp_model_info info;
    check(lbpp_model_info_get(model.get(), &info), "model info");
    double expected = 0.0;
    check(lbpp_model_integrated_intensity(model.get(), &expected), "integrated intensity");
    json report{{"model", out},
                {"basis_size", info.basis_size},
                {"num_points", info.num_points},
                {"iterations", info.iterations},
                {"integrated_mean_intensity", expected},
                {"log_marginal", marginal_json(info.marginal)}};
    if (emit_grid > 0) {
      const std::string path = grid_out.empty() ? stem(out) + "_grid.csv" : grid_out;
      write_predictions(path, model.get(), grid_points(data.lower, data.upper, emit_grid),
                        data.lower.size(), cfg);
      report["grid"] = path;
    }
    std::cout << report.dump(2) << '\n';
  }
};

// ---- predict ---------------------------------------------------------------

struct PredictCommand {
  std::string model_path;
  std::string points;
  std::size_t grid = 0;
  std::string out = "predictions.csv";

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("predict", "posterior intensity at points or on a grid");
    cmd->add_option("--model", model_path, "model JSON")->required();
    auto* p = cmd->add_option("--points", points, "CSV of query points");
    auto* g = cmd->add_option("--grid", grid, "G^d midpoint grid over the domain");
    p->excludes(g);
    cmd->add_option("--out", out, "output CSV");
    cmd->callback([this] { run(); });
  }

  void run() {
    if (points.empty() && grid == 0) usage_error("give --points or --grid");
    lbpp_model* raw = nullptr;
    check(lbpp_model_load(model_path.c_str(), &raw), "loading '" + model_path + "'");
    Model model(raw);
    lbpp_model_info info;
    check(lbpp_model_info_get(model.get(), &info), "model info");
    std::vector<double> hi;
    const auto lo = lower_of(model.get(), info.dim, &hi);
    std::vector<double> pts;
    if (grid > 0) {
      pts = grid_points(lo, hi, grid);
    } else {
      lbpp_pattern* q = nullptr;
      check(lbpp_pattern_load_csv(points.c_str(), info.dim, lo.data(), hi.data(), &q),
            "loading '" + points + "'");
      Pattern holder(q);
      pts.resize(lbpp_pattern_count(q) * info.dim);
      check(lbpp_pattern_get_points(q, pts.data(), pts.size()), "points");
    }
    const json cfg{{"command", "predict"}, {"model", model_path}, {"points", points},
                   {"grid", grid}, {"out", out}};
    write_predictions(out, model.get(), pts, info.dim, cfg);
    std::cout << json{{"predictions", out}, {"count", pts.size() / info.dim}}.dump(2) << '\n';
  }
};

// ---- select ----------------------------------------------------------------

lbpp_param_range parse_range(const std::string& text, std::vector<std::string>& names) {
  // name:log10_lo:log10_hi:points
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 4) usage_error("bad --param '" + text + "' (want name:lo:hi:points)");
  names.push_back(parts[0]);
  try {
    return {nullptr, std::stod(parts[1]), std::stod(parts[2]),
            static_cast<std::size_t>(std::stoul(parts[3]))};
  } catch (const std::exception&) {
    usage_error("bad --param '" + text + "'");
  }
}

struct SelectCommand {
  DataOptions data;
  MethodOptions method;
  std::vector<std::string> params;
  std::string strategy = "grid";
  int budget = 40;
  std::string out = "selection.csv";
  std::string model_out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("select", "type-II maximum likelihood hyperparameter search");
    data.add(cmd);
    method.add(cmd, false);
    cmd->add_option("--param", params, "searched parameter name:log10_lo:log10_hi:points")
        ->required();
    cmd->add_option("--strategy", strategy, "search strategy")
        ->check(CLI::IsMember({"grid", "nelder-mead"}));
    cmd->add_option("--budget", budget, "Nelder-Mead evaluation budget")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "candidate table CSV");
    cmd->add_option("--model-out", model_out, "refit the winner and save it here");
    cmd->callback([this] { run(); });
  }

  void run() {
    auto pattern = data.load();
    std::vector<std::string> names;
    std::vector<lbpp_param_range> ranges;
    for (const auto& p : params) ranges.push_back(parse_range(p, names));
    for (std::size_t k = 0; k < ranges.size(); ++k) ranges[k].name = names[k].c_str();
    auto fam = method.family();
    const auto opts = method.fit_options();
    lbpp_selection* raw = nullptr;
    check(lbpp_select(pattern.get(), &fam, ranges.data(), ranges.size(),
                      strategy == "grid" ? LBPP_STRATEGY_GRID : LBPP_STRATEGY_NELDER_MEAD,
                      budget, &opts, &raw),
          "selection");
    Selection sel(raw);
    json cfg{{"command", "select"}, {"params", params}, {"strategy", strategy},
             {"budget", budget}, {"out", out}};
    cfg.update(data.echo());
    cfg.update(method.echo());
    check(lbpp_selection_write_csv(sel.get(), out.c_str(), ("config: " + cfg.dump()).c_str()),
          "writing table");

    const std::size_t rows = lbpp_selection_rows(sel.get());
    std::size_t min_n = std::numeric_limits<std::size_t>::max(), max_n = 0, failed = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      lbpp_selection_row r;
      check(lbpp_selection_row_get(sel.get(), i, &r, nullptr), "row");
      if (!r.converged) {
        ++failed;
        continue;
      }
      min_n = std::min(min_n, r.basis_size);
      max_n = std::max(max_n, r.basis_size);
    }
    if (max_n > 0 && min_n != max_n) {
      std::cerr << "note: candidates use different basis sizes (" << min_n << " to " << max_n
                << "); they are different models of the same data and their evidences are "
                   "reported as-is\n";
    }
    std::vector<double> best(names.size());
    lbpp_selection_row top;
    check(lbpp_selection_row_get(sel.get(), 0, &top, best.data()), "best row");
    json winner;
    for (std::size_t k = 0; k < names.size(); ++k) winner[names[k]] = best[k];
    json report{{"table", out},
                {"evaluations", lbpp_selection_evaluations(sel.get())},
                {"failed", failed},
                {"best", winner},
                {"log_marginal", marginal_json(top.marginal)}};
    if (!model_out.empty()) {
      check(lbpp_selection_apply_best(sel.get(), &fam), "best parameters");
      lbpp_model* m = nullptr;
      check(lbpp_fit(pattern.get(), &fam, &opts, &m), "refit");
      Model model(m);
      cfg["selected"] = winner;
      check(lbpp_model_save(model.get(), model_out.c_str(), cfg.dump().c_str()), "saving model");
      report["model"] = model_out;
    }
    std::cout << report.dump(2) << '\n';
  }
};

// ---- sample ----------------------------------------------------------------

struct SampleCommand {
  std::int64_t toy = -1;
  std::string model_path;
  double constant = -1.0;
  std::vector<double> lower, upper;
  std::uint64_t seed = 0;
  std::size_t replicates = 1;
  std::string out = "sample.csv";
  std::size_t emit_grid = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("sample", "draw Poisson point patterns by thinning");
    auto* t = cmd->add_option("--toy", toy, "synthetic toy intensity with this seed (0-4 is the suite)");
    auto* m = cmd->add_option("--model", model_path, "posterior mean intensity of a saved model");
    auto* c = cmd->add_option("--constant", constant, "homogeneous rate on --lower/--upper");
    t->excludes(m)->excludes(c);
    m->excludes(c);
    cmd->add_option("--lower", lower, "domain lower corner")->delimiter(',');
    cmd->add_option("--upper", upper, "domain upper corner")->delimiter(',');
    cmd->add_option("--seed", seed, "sampler seed");
    cmd->add_option("--replicates", replicates, "number of patterns")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "output CSV (numbered when replicates > 1)");
    cmd->add_option("--emit-grid", emit_grid, "also write the intensity on a G^d grid");
    cmd->callback([this] { run(); });
  }

  Intensity intensity() {
    lbpp_intensity* fn = nullptr;
    if (toy >= 0) {
      check(lbpp_intensity_toy(static_cast<std::uint64_t>(toy), &fn), "toy intensity");
    } else if (!model_path.empty()) {
      lbpp_model* raw = nullptr;
      check(lbpp_model_load(model_path.c_str(), &raw), "loading '" + model_path + "'");
      Model model(raw);
      check(lbpp_intensity_from_model(model.get(), &fn), "model intensity");
    } else if (constant >= 0.0) {
      if (lower.empty() || lower.size() != upper.size()) usage_error("--constant needs --lower/--upper");
      check(lbpp_intensity_constant(lower.size(), lower.data(), upper.data(), constant, &fn),
            "constant intensity");
    } else {
      usage_error("give one of --toy, --model, --constant");
    }
    return Intensity(fn);
  }

  void run() {
    auto fn = intensity();
    const std::size_t d = lbpp_intensity_dim(fn.get());
    std::vector<double> lo(d), hi(d);
    check(lbpp_intensity_get_domain(fn.get(), lo.data(), hi.data()), "domain");
    json cfg{{"command", "sample"}, {"toy", toy}, {"model", model_path}, {"constant", constant},
             {"seed", seed}, {"replicates", replicates}, {"out", out}};
    json report{{"patterns", json::array()}};
    for (std::size_t r = 0; r < replicates; ++r) {
      const std::uint64_t s = replicates == 1 ? seed : stream_seed(seed, r);
      lbpp_pattern* p = nullptr;
      check(lbpp_intensity_sample(fn.get(), s, &p), "sampling");
      Pattern holder(p);
      const std::string path =
          replicates == 1 ? out : stem(out) + "_" + std::to_string(r) + ".csv";
      json c = cfg;
      c["replicate"] = r;
      c["replicate_seed"] = s;
      check(lbpp_pattern_write_csv(p, path.c_str(), ("config: " + c.dump()).c_str()), "writing");
      report["patterns"].push_back({{"path", path}, {"count", lbpp_pattern_count(p)}});
    }
    if (emit_grid > 0) {
      const auto pts = grid_points(lo, hi, emit_grid);
      std::vector<double> v(pts.size() / d);
      check(lbpp_intensity_eval(fn.get(), pts.data(), v.size(), v.data()), "intensity grid");
      const std::string path = stem(out) + "_intensity.csv";
      std::ofstream f(path);
      f << "# config: " << cfg.dump() << '\n';
      for (std::size_t j = 0; j < d; ++j) f << 'x' << (j + 1) << ',';
      f << "intensity\n" << std::setprecision(12);
      for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) f << pts[i * d + j] << ',';
        f << v[i] << '\n';
      }
      report["intensity_grid"] = path;
    }
    std::cout << report.dump(2) << '\n';
  }
};

// ---- evaluate ---------------------------------------------------------------

struct EvaluateCommand {
  std::string model_path;
  DataOptions ks_data;
  double bandwidth = 0.0;
  std::int64_t toy = -1;
  std::string test;
  std::size_t points_per_dim = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("evaluate", "score an estimate against a truth or a test set");
    cmd->add_option("--model", model_path, "fitted model JSON (LBPP estimate)");
    ks_data.add(cmd);
    cmd->add_option("--bandwidth", bandwidth, "KS+EC bandwidth when estimating from --data (0 = LOO)");
    cmd->add_option("--toy", toy, "compare with this toy intensity");
    cmd->add_option("--test", test, "held-out CSV for the test log likelihood");
    cmd->add_option("--points-per-dim", points_per_dim, "quadrature resolution (0 = default)");
    cmd->callback([this] { run(); });
  }

  void run() {
    lbpp_intensity* raw = nullptr;
    json report;
    if (!model_path.empty()) {
      lbpp_model* m = nullptr;
      check(lbpp_model_load(model_path.c_str(), &m), "loading '" + model_path + "'");
      Model model(m);
      check(lbpp_intensity_from_model(model.get(), &raw), "model intensity");
      report["estimate"] = model_path;
    } else {
      auto pattern = ks_data.load();
      double h = 0.0;
      check(lbpp_intensity_ks(pattern.get(), bandwidth, &h, &raw), "KS+EC");
      report["estimate"] = "ks_ec";
      report["bandwidth"] = h;
    }
    Intensity est(raw);
    const std::size_t d = lbpp_intensity_dim(est.get());
    std::vector<double> lo(d), hi(d);
    check(lbpp_intensity_get_domain(est.get(), lo.data(), hi.data()), "domain");
    double integral = 0.0;
    check(lbpp_eval_integral(est.get(), points_per_dim, &integral), "integral");
    report["integral"] = integral;
    if (toy >= 0) {
      lbpp_intensity* t = nullptr;
      check(lbpp_intensity_toy(static_cast<std::uint64_t>(toy), &t), "toy intensity");
      Intensity truth(t);
      double l2 = 0, ell = 0, kl = 0;
      check(lbpp_eval_l2(est.get(), truth.get(), points_per_dim, &l2), "l2");
      check(lbpp_eval_expected_ll(truth.get(), est.get(), points_per_dim, &ell), "expected ll");
      check(lbpp_eval_kl(truth.get(), est.get(), points_per_dim, &kl), "kl");
      report["l2"] = l2;
      report["expected_log_likelihood"] = std::isfinite(ell) ? json(ell) : json("-inf");
      report["kl"] = std::isfinite(kl) ? json(kl) : json("inf");
    }
    if (!test.empty()) {
      lbpp_pattern* p = nullptr;
      check(lbpp_pattern_load_csv(test.c_str(), d, lo.data(), hi.data(), &p),
            "loading '" + test + "'");
      Pattern holder(p);
      double tll = 0.0;
      check(lbpp_eval_test_ll(est.get(), p, points_per_dim, &tll), "test ll");
      report["test_log_likelihood"] = std::isfinite(tll) ? json(tll) : json("-inf");
    }
    std::cout << report.dump(2) << '\n';
  }
};

// ---- benchmark -----------------------------------------------------------------

struct Cell {
  std::string scenario;
  std::string method;
  std::size_t basis = 0;
  std::size_t replicate = 0;
};

struct CellResult {
  std::map<std::string, double> metrics;
  std::string hyper;
  std::string failure;
};

struct BenchmarkCommand {
  std::vector<std::string> scenarios{"toy"};
  std::vector<std::uint64_t> toy_seeds{0, 1, 2, 3, 4};
  std::vector<std::string> methods{"lbpp_cos", "lbpp_g", "ks_ec"};
  std::vector<std::size_t> sizes{16, 32, 64};
  std::size_t replicates = 10;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out = "benchmark.csv";
  std::size_t grid_points_per_param = 9;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("benchmark", "factorial comparison of estimators");
    cmd->add_option("--scenarios", scenarios, "toy and/or coal, redwood, cav")
        ->delimiter(',')
        ->check(CLI::IsMember({"toy", "coal", "redwood", "cav"}));
    cmd->add_option("--toy-seeds", toy_seeds, "toy intensities")->delimiter(',');
    cmd->add_option("--methods", methods, "estimators")
        ->delimiter(',')
        ->check(CLI::IsMember({"lbpp_cos", "lbpp_g", "ks_ec"}));
    cmd->add_option("--sizes", sizes, "basis sizes per dimension")->delimiter(',');
    cmd->add_option("--replicates", replicates, "training sets per scenario")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
    cmd->add_option("--search-points", grid_points_per_param, "ML-II grid points per parameter")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "raw results CSV (summary goes to <out>_summary.csv)");
    cmd->callback([this] { run(); });
  }

  json echo() const {
    return {{"command", "benchmark"}, {"scenarios", scenarios}, {"toy_seeds", toy_seeds},
            {"methods", methods},     {"sizes", sizes},         {"replicates", replicates},
            {"seed", seed},           {"search_points", grid_points_per_param}};
  }

  // Scenario names expand toy into one entry per toy seed.
  std::vector<std::string> expanded() const {
    std::vector<std::string> out_names;
    for (const auto& s : scenarios) {
      if (s == "toy") {
        for (auto t : toy_seeds) out_names.push_back("toy" + std::to_string(t));
      } else {
        out_names.push_back(s);
      }
    }
    return out_names;
  }

  struct Problem {
    Pattern train;
    Pattern test;
    Intensity truth;  // toy only
  };

  Problem problem(const std::string& scenario, std::size_t rep) const {
    const std::uint64_t s = stream_seed(seed, std::hash<std::string>{}(scenario) ^ (rep << 20));
    Problem p;
    if (scenario.rfind("toy", 0) == 0) {
      lbpp_intensity* t = nullptr;
      check(lbpp_intensity_toy(std::stoull(scenario.substr(3)), &t), "toy intensity");
      p.truth.reset(t);
      lbpp_pattern *a = nullptr, *b = nullptr;
      check(lbpp_intensity_sample(t, stream_seed(s, 0), &a), "training sample");
      p.train.reset(a);
      check(lbpp_intensity_sample(t, stream_seed(s, 1), &b), "test sample");
      p.test.reset(b);
    } else {
      DataOptions d;
      d.dataset = scenario;
      auto all = d.load();
      lbpp_pattern *a = nullptr, *b = nullptr;
      check(lbpp_pattern_split(all.get(), 0.5, s, &a, &b), "split");
      p.train.reset(a);
      p.test.reset(b);
    }
    return p;
  }

  Intensity fit(const Cell& cell, const lbpp_pattern* train, std::string& hyper) const {
    lbpp_intensity* raw = nullptr;
    if (cell.method == "ks_ec") {
      double h = 0.0;
      check(lbpp_intensity_ks(train, 0.0, &h, &raw), "KS+EC");
      hyper = "bandwidth=" + std::to_string(h);
      return Intensity(raw);
    }
    const std::size_t d = lbpp_pattern_dim(train);
    std::vector<double> lo(d), hi(d);
    check(lbpp_pattern_get_domain(train, lo.data(), hi.data()), "domain");
    double vol = 1.0, extent = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      vol *= hi[j] - lo[j];
      extent += (hi[j] - lo[j]) / static_cast<double>(d);
    }
    lbpp_family fam;
    std::vector<lbpp_param_range> ranges;
    const auto k = grid_points_per_param;
    if (cell.method == "lbpp_cos") {
      check(lbpp_family_default(LBPP_FAMILY_COSINE, &fam), "family");
      ranges.push_back({"ab", -7.0, 1.0, k});
    } else {
      check(lbpp_family_default(LBPP_FAMILY_GAUSSIAN, &fam), "family");
      const double rate = std::sqrt(2.0 * std::max<double>(1.0, lbpp_pattern_count(train)) / vol);
      const double lg = std::log10(rate), ll = std::log10(extent);
      ranges.push_back({"gamma", lg - 0.5, lg + 0.5, std::max<std::size_t>(1, k / 2 + 1)});
      ranges.push_back({"lengthscale", ll - 2.0, ll - 0.5, k});
    }
    fam.size_per_dim = cell.basis;
    lbpp_selection* sel = nullptr;
    check(lbpp_select(train, &fam, ranges.data(), ranges.size(), LBPP_STRATEGY_GRID, 0, nullptr,
                      &sel),
          "selection");
    Selection holder(sel);
    check(lbpp_selection_apply_best(sel, &fam), "best parameters");
    lbpp_model* m = nullptr;
    check(lbpp_fit(train, &fam, nullptr, &m), "fit");
    Model model(m);
    check(lbpp_intensity_from_model(m, &raw), "model intensity");
    std::ostringstream h;
    if (cell.method == "lbpp_cos") {
      h << "a=b=" << fam.a;
    } else {
      h << "gamma=" << fam.gamma << ";lengthscale=" << fam.lengthscale;
    }
    hyper = h.str();
    return Intensity(raw);
  }

  CellResult evaluate(const Cell& cell) const {
    CellResult r;
    try {
      auto p = problem(cell.scenario, cell.replicate);
      const auto start = std::chrono::steady_clock::now();
      auto est = fit(cell, p.train.get(), r.hyper);
      r.metrics["fit_seconds"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      double tll = 0.0;
      check(lbpp_eval_test_ll(est.get(), p.test.get(), 0, &tll), "test ll");
      r.metrics["test_log_likelihood"] = tll;
      if (p.truth) {
        double l2 = 0, ell = 0, kl = 0;
        check(lbpp_eval_l2(est.get(), p.truth.get(), 0, &l2), "l2");
        check(lbpp_eval_expected_ll(p.truth.get(), est.get(), 0, &ell), "expected ll");
        check(lbpp_eval_kl(p.truth.get(), est.get(), 0, &kl), "kl");
        r.metrics["l2"] = l2;
        r.metrics["expected_log_likelihood"] = ell;
        r.metrics["kl"] = kl;
      }
    } catch (const CliError& e) {
      r.failure = e.message;
    }
    return r;
  }

  void run() {
    const auto names = expanded();
    // KS+EC has no basis; it is run once per replicate and reported at every size.
    std::vector<Cell> cells, work;
    std::vector<std::size_t> source;
    std::map<std::tuple<std::string, std::size_t>, std::size_t> ks_index;
    for (const auto& s : names) {
      for (const auto& m : methods) {
        for (auto n : sizes) {
          for (std::size_t r = 0; r < replicates; ++r) {
            Cell c{s, m, n, r};
            cells.push_back(c);
            if (m == "ks_ec") {
              auto key = std::make_tuple(s, r);
              auto it = ks_index.find(key);
              if (it == ks_index.end()) {
                it = ks_index.emplace(key, work.size()).first;
                work.push_back(c);
              }
              source.push_back(it->second);
            } else {
              source.push_back(work.size());
              work.push_back(c);
            }
          }
        }
      }
    }

    std::vector<CellResult> results(work.size());
    std::atomic<std::size_t> next{0};
    unsigned n_threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(std::max<std::size_t>(1, work.size())));
    std::mutex log_mutex;
    auto worker = [&] {
      for (std::size_t i = next++; i < work.size(); i = next++) {
        results[i] = evaluate(work[i]);
        if (!results[i].failure.empty()) {
          std::lock_guard<std::mutex> lock(log_mutex);
          std::cerr << "cell " << work[i].scenario << '/' << work[i].method << '/'
                    << work[i].basis << '/' << work[i].replicate
                    << " failed: " << results[i].failure << '\n';
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    const std::vector<std::string> metric_names{"test_log_likelihood", "l2",
                                                "expected_log_likelihood", "kl", "fit_seconds"};
    const json cfg = echo();
    auto value = [&](std::size_t i, const std::string& name) {
      const auto& m = results[source[i]].metrics;
      const auto it = m.find(name);
      return it == m.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
    };
    auto csv_escape = [](std::string s) {
      std::replace(s.begin(), s.end(), ',', ';');
      std::replace(s.begin(), s.end(), '\n', ' ');
      return s;
    };

    std::ofstream raw(out);
    if (!raw) usage_error("cannot write '" + out + "'");
    raw << "# config: " << cfg.dump() << '\n';
    raw << "scenario,method,basis_size,replicate";
    for (const auto& m : metric_names) raw << ',' << m;
    raw << ",hyperparameters,failure\n" << std::setprecision(12);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      raw << c.scenario << ',' << c.method << ',' << c.basis << ',' << c.replicate;
      for (const auto& m : metric_names) raw << ',' << value(i, m);
      const auto& res = results[source[i]];
      raw << ',' << csv_escape(res.hyper) << ',' << csv_escape(res.failure) << '\n';
    }

    // Normalized summary: each metric divided by its largest magnitude within
    // the scenario, then averaged over replicates.
    const std::string summary_path = stem(out) + "_summary.csv";
    std::ofstream sum(summary_path);
    sum << "# config: " << cfg.dump() << '\n';
    sum << "scenario,method,basis_size,completed";
    for (const auto& m : metric_names) sum << ',' << m << "_normalized";
    sum << '\n' << std::setprecision(12);
    for (const auto& s : names) {
      std::map<std::string, double> scale;
      for (const auto& m : metric_names) {
        double top = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
          const double v = value(i, m);
          if (cells[i].scenario == s && std::isfinite(v)) top = std::max(top, std::abs(v));
        }
        scale[m] = top;
      }
      for (const auto& meth : methods) {
        for (auto n : sizes) {
          std::map<std::string, double> acc;
          std::map<std::string, int> cnt;
          int done = 0;
          for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& c = cells[i];
            if (c.scenario != s || c.method != meth || c.basis != n) continue;
            if (results[source[i]].failure.empty()) ++done;
            for (const auto& m : metric_names) {
              const double v = value(i, m);
              if (std::isfinite(v) && scale[m] > 0.0) {
                acc[m] += v / scale[m];
                cnt[m] += 1;
              }
            }
          }
          sum << s << ',' << meth << ',' << n << ',' << done;
          for (const auto& m : metric_names) {
            sum << ',';
            if (cnt[m] > 0) {
              sum << acc[m] / cnt[m];
            } else {
              sum << "nan";
            }
          }
          sum << '\n';
        }
      }
    }
    std::size_t failed = 0;
    for (const auto& r : results) failed += r.failure.empty() ? 0 : 1;
    std::cout << json{{"results", out}, {"summary", summary_path}, {"cells", cells.size()},
                      {"fits", work.size()}, {"failed_fits", failed}}
                     .dump(2)
              << '\n';
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplace Bayesian point process intensity estimation"};
  app.set_version_flag("--version", std::string(lbpp_version()));
  app.require_subcommand(1);
  FitCommand fit;
  PredictCommand predict;
  SelectCommand select;
  SampleCommand sample;
  EvaluateCommand evaluate;
  BenchmarkCommand benchmark;
  fit.add(app);
  predict.add(app);
  select.add(app);
  sample.add(app);
  evaluate.add(app);
  benchmark.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}
