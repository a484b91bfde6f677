#include "lbpp/lbpp.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "baseline_ks.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "model_io.hpp"
#include "model_selection.hpp"
#include "predictive.hpp"
#include "simulation.hpp"

struct lbpp_pattern {
  lbpp::PointPattern pattern;
};

struct lbpp_model {
  std::shared_ptr<const lbpp::FittedModel> model;
};

struct lbpp_intensity {
  lbpp::IntensityFn fn;
};

struct lbpp_selection {
  lbpp::SelectionResult result;
  lbpp::BasisFamily::Kind kind;
};

namespace {

thread_local std::string g_last_error;

lbpp_status to_status(lbpp::ErrorCode code) {
  switch (code) {
    case lbpp::ErrorCode::kInvalidArgument: return LBPP_ERR_INVALID_ARGUMENT;
    case lbpp::ErrorCode::kIo: return LBPP_ERR_IO;
    case lbpp::ErrorCode::kParse: return LBPP_ERR_PARSE;
    case lbpp::ErrorCode::kDomain: return LBPP_ERR_DOMAIN;
    case lbpp::ErrorCode::kConvergence: return LBPP_ERR_CONVERGENCE;
    case lbpp::ErrorCode::kNumerical: return LBPP_ERR_NUMERICAL;
  }
  return LBPP_ERR_INTERNAL;
}

struct StatusError {
  lbpp_status status;
  std::string message;
};

[[noreturn]] void fail(lbpp_status status, std::string message) {
  throw StatusError{status, std::move(message)};
}

template <class F>
lbpp_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return LBPP_OK;
  } catch (const StatusError& e) {
    g_last_error = e.message;
    return e.status;
  } catch (const lbpp::ConvergenceError& e) {
    std::ostringstream msg;
    msg << e.what() << "; objective trace:";
    msg.precision(10);
    for (double v : e.trace()) msg << ' ' << v;
    g_last_error = msg.str();
    return LBPP_ERR_CONVERGENCE;
  } catch (const lbpp::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LBPP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LBPP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LBPP_ERR_INTERNAL;
  }
}

template <class T>
void require(const T* p, const char* what) {
  if (p == nullptr) fail(LBPP_ERR_INVALID_ARGUMENT, std::string(what) + " is NULL");
}

lbpp::BoxDomain make_domain(size_t dim, const double* lower, const double* upper) {
  require(lower, "lower");
  require(upper, "upper");
  if (dim == 0) fail(LBPP_ERR_INVALID_ARGUMENT, "dimension must be positive");
  const auto d = static_cast<Eigen::Index>(dim);
  return lbpp::BoxDomain(Eigen::Map<const Eigen::VectorXd>(lower, d),
                         Eigen::Map<const Eigen::VectorXd>(upper, d));
}

lbpp::Points make_points(const double* x, size_t count, Eigen::Index dim) {
  if (count > 0) require(x, "points");
  lbpp::Points p(dim, static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) p(j, i) = x[i * dim + j];
  }
  return p;
}

void check_inside(const lbpp::BoxDomain& domain, const lbpp::Points& x) {
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    if (!domain.contains(x.col(i))) {
      fail(LBPP_ERR_DOMAIN, "query point " + std::to_string(i) + " lies outside the domain");
    }
  }
}

lbpp::BasisFamily to_family(const lbpp_family* f) {
  require(f, "family");
  lbpp::BasisFamily out;
  if (f->kind == LBPP_FAMILY_COSINE) {
    out.kind = lbpp::BasisFamily::Kind::kCosine;
  } else if (f->kind == LBPP_FAMILY_GAUSSIAN) {
    out.kind = lbpp::BasisFamily::Kind::kGaussian;
  } else {
    fail(LBPP_ERR_INVALID_ARGUMENT, "unknown family kind");
  }
  if (f->size_per_dim == 0) fail(LBPP_ERR_INVALID_ARGUMENT, "size_per_dim must be positive");
  out.size_per_dim = static_cast<Eigen::Index>(f->size_per_dim);
  out.cosine = {f->a, f->b, f->m_order};
  out.gaussian = {f->gamma, f->lengthscale};
  out.cutoff.max_rank = static_cast<Eigen::Index>(f->max_rank);
  return out;
}

lbpp::FitOptions to_options(const lbpp_fit_options* o) {
  lbpp::FitOptions opts;
  if (o != nullptr) {
    opts.max_newton_iters = o->max_newton_iters;
    opts.grad_tol = o->grad_tol;
  }
  lbpp::validate(opts);
  return opts;
}

lbpp_marginal to_marginal(const lbpp::MarginalParts& p) {
  return {p.data_term, p.quadratic_term, p.v_term, p.logdet_s, p.constant, p.total()};
}

lbpp::Quadrature quadrature(const lbpp::BoxDomain& domain, size_t points_per_dim) {
  if (points_per_dim == 0) return lbpp::Quadrature::standard_resolution(domain);
  return lbpp::Quadrature(domain, static_cast<Eigen::Index>(points_per_dim));
}

template <class T>
void set_out(T** out, T* value) {
  *out = value;
}

}  // namespace

extern "C" {

const char* lbpp_version(void) { return "1.0.0"; }

const char* lbpp_status_name(lbpp_status status) {
  switch (status) {
    case LBPP_OK: return "ok";
    case LBPP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case LBPP_ERR_IO: return "i/o error";
    case LBPP_ERR_PARSE: return "parse error";
    case LBPP_ERR_DOMAIN: return "domain error";
    case LBPP_ERR_CONVERGENCE: return "convergence failure";
    case LBPP_ERR_NUMERICAL: return "numerical failure";
    case LBPP_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case LBPP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* lbpp_last_error(void) { return g_last_error.c_str(); }

/* ---- patterns ---- */

lbpp_status lbpp_pattern_load_csv(const char* path, size_t dim, const double* lower,
                                  const double* upper, lbpp_pattern** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto domain = make_domain(dim, lower, upper);
    set_out(out, new lbpp_pattern{lbpp::load_point_pattern(path, domain)});
  });
}

lbpp_status lbpp_pattern_create(size_t dim, size_t count, const double* points,
                                const double* lower, const double* upper,
                                lbpp_pattern** out) {
  return guard([&] {
    require(out, "out");
    auto domain = make_domain(dim, lower, upper);
    auto pts = make_points(points, count, domain.dim());
    set_out(out, new lbpp_pattern{lbpp::PointPattern(std::move(pts), std::move(domain))});
  });
}

size_t lbpp_pattern_count(const lbpp_pattern* pattern) {
  return pattern ? static_cast<size_t>(pattern->pattern.size()) : 0;
}

size_t lbpp_pattern_dim(const lbpp_pattern* pattern) {
  return pattern ? static_cast<size_t>(pattern->pattern.dim()) : 0;
}

lbpp_status lbpp_pattern_get_points(const lbpp_pattern* pattern, double* buffer,
                                    size_t capacity) {
  return guard([&] {
    require(pattern, "pattern");
    const auto& p = pattern->pattern.points();
    const auto needed = static_cast<size_t>(p.size());
    if (capacity < needed) {
      fail(LBPP_ERR_BUFFER_TOO_SMALL, "need " + std::to_string(needed) + " doubles");
    }
    if (needed > 0) require(buffer, "buffer");
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
      for (Eigen::Index j = 0; j < p.rows(); ++j) buffer[i * p.rows() + j] = p(j, i);
    }
  });
}

lbpp_status lbpp_pattern_get_domain(const lbpp_pattern* pattern, double* lower,
                                    double* upper) {
  return guard([&] {
    require(pattern, "pattern");
    require(lower, "lower");
    require(upper, "upper");
    const auto& dom = pattern->pattern.domain();
    for (Eigen::Index j = 0; j < dom.dim(); ++j) {
      lower[j] = dom.lower()[j];
      upper[j] = dom.upper()[j];
    }
  });
}

lbpp_status lbpp_pattern_write_csv(const lbpp_pattern* pattern, const char* path,
                                   const char* comment) {
  return guard([&] {
    require(pattern, "pattern");
    require(path, "path");
    lbpp::write_point_pattern(path, pattern->pattern, comment ? comment : "");
  });
}

lbpp_status lbpp_pattern_split(const lbpp_pattern* pattern, double p, uint64_t seed,
                               lbpp_pattern** train, lbpp_pattern** test) {
  return guard([&] {
    require(pattern, "pattern");
    require(train, "train");
    require(test, "test");
    auto [a, b] = lbpp::bernoulli_split(pattern->pattern, p, seed);
    auto tr = std::make_unique<lbpp_pattern>(lbpp_pattern{std::move(a)});
    auto te = std::make_unique<lbpp_pattern>(lbpp_pattern{std::move(b)});
    *train = tr.release();
    *test = te.release();
  });
}

void lbpp_pattern_free(lbpp_pattern* pattern) { delete pattern; }

/* ---- fitting ---- */

lbpp_status lbpp_family_default(lbpp_family_kind kind, lbpp_family* out) {
  return guard([&] {
    require(out, "out");
    lbpp::BasisFamily f;
    if (kind != LBPP_FAMILY_COSINE && kind != LBPP_FAMILY_GAUSSIAN) {
      fail(LBPP_ERR_INVALID_ARGUMENT, "unknown family kind");
    }
    out->kind = kind;
    out->size_per_dim = static_cast<size_t>(f.size_per_dim);
    out->a = f.cosine.a;
    out->b = f.cosine.b;
    out->m_order = f.cosine.m_order;
    out->gamma = f.gaussian.gamma;
    out->lengthscale = f.gaussian.lengthscale;
    out->max_rank = 0;
  });
}

void lbpp_fit_options_default(lbpp_fit_options* out) {
  if (out == nullptr) return;
  lbpp::FitOptions o;
  out->max_newton_iters = o.max_newton_iters;
  out->grad_tol = o.grad_tol;
}

lbpp_status lbpp_fit(const lbpp_pattern* data, const lbpp_family* family,
                     const lbpp_fit_options* options, lbpp_model** out) {
  return guard([&] {
    require(data, "data");
    require(out, "out");
    const auto fam = to_family(family);
    const auto opts = to_options(options);
    auto normalized = lbpp::normalize(data->pattern);
    auto basis = std::make_shared<const lbpp::SpectralBasis>(
        lbpp::basis_for(fam, {}, {}, normalized.original));
    auto model = std::make_shared<const lbpp::FittedModel>(
        lbpp::fit_mode(std::move(basis), normalized, opts));
    set_out(out, new lbpp_model{std::move(model)});
  });
}

lbpp_status lbpp_model_info_get(const lbpp_model* model, lbpp_model_info* out) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    const auto& m = *model->model;
    out->dim = static_cast<size_t>(m.basis().dim());
    out->basis_size = static_cast<size_t>(m.basis().size());
    out->num_points = static_cast<size_t>(m.num_points());
    out->iterations = m.iterations();
    out->jacobian = m.data().jacobian;
    out->marginal = to_marginal(m.log_marginal_parts());
  });
}

lbpp_status lbpp_model_weights(const lbpp_model* model, double* buffer,
                               size_t capacity) {
  return guard([&] {
    require(model, "model");
    const auto& w = model->model->w_hat();
    if (capacity < static_cast<size_t>(w.size())) {
      fail(LBPP_ERR_BUFFER_TOO_SMALL, "need " + std::to_string(w.size()) + " doubles");
    }
    require(buffer, "buffer");
    std::memcpy(buffer, w.data(), sizeof(double) * static_cast<size_t>(w.size()));
  });
}

lbpp_status lbpp_model_predict(const lbpp_model* model, const double* x, size_t count,
                               lbpp_prediction* out) {
  return guard([&] {
    require(model, "model");
    if (count > 0) require(out, "out");
    const auto& m = *model->model;
    const auto& original = m.data().original;
    const auto pts = make_points(x, count, original.dim());
    check_inside(original, pts);
    const auto preds = lbpp::predict_batch(m, lbpp::to_standard(original, pts));
    const double jac = m.data().jacobian;
    for (size_t i = 0; i < count; ++i) {
      const auto& p = preds[i];
      lbpp_prediction& o = out[i];
      o.mu = p.mu;
      o.sigma2 = p.sigma2;
      o.gamma_shape = p.gamma_shape;
      o.gamma_scale = p.gamma_scale * jac;
      o.mean_intensity = p.mean_intensity() * jac;
      o.q10 = lbpp::gamma_quantile(p, 0.1) * jac;
      o.q50 = lbpp::gamma_quantile(p, 0.5) * jac;
      o.q90 = lbpp::gamma_quantile(p, 0.9) * jac;
      o.variance_clamped = p.variance_clamped ? 1 : 0;
    }
  });
}

lbpp_status lbpp_model_integrated_intensity(const lbpp_model* model, double* out) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    *out = lbpp::integrated_mean_intensity(*model->model);
  });
}

lbpp_status lbpp_model_save(const lbpp_model* model, const char* path,
                            const char* config_json) {
  return guard([&] {
    require(model, "model");
    require(path, "path");
    nlohmann::json config = nlohmann::json::object();
    if (config_json != nullptr && *config_json != '\0') {
      try {
        config = nlohmann::json::parse(config_json);
      } catch (const nlohmann::json::exception& e) {
        fail(LBPP_ERR_PARSE, std::string("config is not valid JSON: ") + e.what());
      }
    }
    lbpp::save_model(path, *model->model, config);
  });
}

lbpp_status lbpp_model_load(const char* path, lbpp_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto m = std::make_shared<const lbpp::FittedModel>(lbpp::load_model(path));
    set_out(out, new lbpp_model{std::move(m)});
  });
}

void lbpp_model_free(lbpp_model* model) { delete model; }

/* ---- selection ---- */

lbpp_status lbpp_select(const lbpp_pattern* data, const lbpp_family* family,
                        const lbpp_param_range* ranges, size_t num_ranges,
                        lbpp_strategy strategy, int budget,
                        const lbpp_fit_options* options, lbpp_selection** out) {
  return guard([&] {
    require(data, "data");
    require(out, "out");
    if (num_ranges > 0) require(ranges, "ranges");
    const auto fam = to_family(family);
    const auto opts = to_options(options);
    lbpp::SearchSpace space;
    for (size_t k = 0; k < num_ranges; ++k) {
      require(ranges[k].name, "range name");
      space.ranges.push_back({ranges[k].name, ranges[k].log10_lower, ranges[k].log10_upper,
                              static_cast<Eigen::Index>(ranges[k].grid_points)});
    }
    if (strategy == LBPP_STRATEGY_GRID) {
      space.strategy = lbpp::SearchSpace::Strategy::kGrid;
    } else if (strategy == LBPP_STRATEGY_NELDER_MEAD) {
      space.strategy = lbpp::SearchSpace::Strategy::kNelderMead;
    } else {
      fail(LBPP_ERR_INVALID_ARGUMENT, "unknown search strategy");
    }
    space.budget = budget;
    auto result = lbpp::ml2_search(lbpp::normalize(data->pattern), fam, space, opts);
    set_out(out, new lbpp_selection{std::move(result), fam.kind});
  });
}

size_t lbpp_selection_rows(const lbpp_selection* selection) {
  return selection ? selection->result.table.size() : 0;
}

size_t lbpp_selection_num_params(const lbpp_selection* selection) {
  return selection ? selection->result.names.size() : 0;
}

const char* lbpp_selection_param_name(const lbpp_selection* selection, size_t k) {
  if (selection == nullptr || k >= selection->result.names.size()) return nullptr;
  return selection->result.names[k].c_str();
}

int lbpp_selection_evaluations(const lbpp_selection* selection) {
  return selection ? selection->result.evaluations : 0;
}

lbpp_status lbpp_selection_row_get(const lbpp_selection* selection, size_t row,
                                   lbpp_selection_row* out, double* params) {
  return guard([&] {
    require(selection, "selection");
    require(out, "out");
    const auto& table = selection->result.table;
    if (row >= table.size()) fail(LBPP_ERR_INVALID_ARGUMENT, "row index out of range");
    const auto& c = table[row];
    out->converged = c.converged ? 1 : 0;
    out->basis_size = static_cast<size_t>(c.basis_size);
    out->iterations = c.iterations;
    out->marginal = to_marginal(c.marginal.parts);
    if (!c.converged) out->marginal.total = -HUGE_VAL;
    out->failure = c.failure.c_str();
    if (params != nullptr) {
      for (size_t k = 0; k < c.params.size(); ++k) params[k] = c.params[k];
    }
  });
}

lbpp_status lbpp_selection_apply_best(const lbpp_selection* selection,
                                      lbpp_family* family) {
  return guard([&] {
    require(selection, "selection");
    require(family, "family");
    const auto& r = selection->result;
    const auto& best = r.table.at(r.best);
    for (size_t k = 0; k < r.names.size(); ++k) {
      const auto& n = r.names[k];
      if (n == "a" || n == "ab") family->a = best.params[k];
      if (n == "b" || n == "ab") family->b = best.params[k];
      if (n == "gamma") family->gamma = best.params[k];
      if (n == "lengthscale") family->lengthscale = best.params[k];
    }
  });
}

lbpp_status lbpp_selection_write_csv(const lbpp_selection* selection, const char* path,
                                     const char* comment) {
  return guard([&] {
    require(selection, "selection");
    require(path, "path");
    lbpp::write_selection_csv(path, selection->result, comment ? comment : "");
  });
}

void lbpp_selection_free(lbpp_selection* selection) { delete selection; }

/* ---- intensities ---- */

lbpp_status lbpp_intensity_from_model(const lbpp_model* model, lbpp_intensity** out) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    set_out(out, new lbpp_intensity{lbpp::mean_intensity_fn(model->model)});
  });
}

lbpp_status lbpp_intensity_ks(const lbpp_pattern* data, double bandwidth,
                              double* chosen_bandwidth, lbpp_intensity** out) {
  return guard([&] {
    require(data, "data");
    require(out, "out");
    auto normalized = lbpp::normalize(data->pattern);
    double h = bandwidth;
    if (!(h > 0.0)) h = lbpp::loo_bandwidth(normalized).bandwidth;
    auto ks = std::make_shared<const lbpp::KsModel>(std::move(normalized), h);
    if (chosen_bandwidth != nullptr) *chosen_bandwidth = h;
    set_out(out, new lbpp_intensity{lbpp::ks_intensity_fn(std::move(ks))});
  });
}

lbpp_status lbpp_intensity_toy(uint64_t seed, lbpp_intensity** out) {
  return guard([&] {
    require(out, "out");
    set_out(out, new lbpp_intensity{
                     lbpp::make_toy_intensity(lbpp::ToyConfig{}, lbpp::toy_domain(), seed)});
  });
}

lbpp_status lbpp_intensity_constant(size_t dim, const double* lower, const double* upper,
                                    double value, lbpp_intensity** out) {
  return guard([&] {
    require(out, "out");
    auto domain = make_domain(dim, lower, upper);
    set_out(out, new lbpp_intensity{lbpp::constant_intensity(domain, value)});
  });
}

size_t lbpp_intensity_dim(const lbpp_intensity* intensity) {
  return intensity ? static_cast<size_t>(intensity->fn.domain.dim()) : 0;
}

lbpp_status lbpp_intensity_get_domain(const lbpp_intensity* intensity, double* lower,
                                      double* upper) {
  return guard([&] {
    require(intensity, "intensity");
    require(lower, "lower");
    require(upper, "upper");
    const auto& dom = intensity->fn.domain;
    for (Eigen::Index j = 0; j < dom.dim(); ++j) {
      lower[j] = dom.lower()[j];
      upper[j] = dom.upper()[j];
    }
  });
}

lbpp_status lbpp_intensity_eval(const lbpp_intensity* intensity, const double* x,
                                size_t count, double* out) {
  return guard([&] {
    require(intensity, "intensity");
    if (count == 0) return;
    require(out, "out");
    const auto pts = make_points(x, count, intensity->fn.domain.dim());
    check_inside(intensity->fn.domain, pts);
    const Eigen::VectorXd v = intensity->fn.eval(pts);
    for (size_t i = 0; i < count; ++i) out[i] = v[static_cast<Eigen::Index>(i)];
  });
}

lbpp_status lbpp_intensity_sample(const lbpp_intensity* intensity, uint64_t seed,
                                  lbpp_pattern** out) {
  return guard([&] {
    require(intensity, "intensity");
    require(out, "out");
    set_out(out, new lbpp_pattern{lbpp::sample_poisson_thinning(intensity->fn, seed)});
  });
}

void lbpp_intensity_free(lbpp_intensity* intensity) { delete intensity; }

/* ---- evaluation ---- */

lbpp_status lbpp_eval_integral(const lbpp_intensity* intensity, size_t points_per_dim,
                               double* out) {
  return guard([&] {
    require(intensity, "intensity");
    require(out, "out");
    *out = quadrature(intensity->fn.domain, points_per_dim).integrate(intensity->fn.eval);
  });
}

lbpp_status lbpp_eval_l2(const lbpp_intensity* estimate, const lbpp_intensity* truth,
                         size_t points_per_dim, double* out) {
  return guard([&] {
    require(estimate, "estimate");
    require(truth, "truth");
    require(out, "out");
    *out = lbpp::l2_error(estimate->fn, truth->fn,
                          quadrature(truth->fn.domain, points_per_dim));
  });
}

lbpp_status lbpp_eval_expected_ll(const lbpp_intensity* truth,
                                  const lbpp_intensity* estimate, size_t points_per_dim,
                                  double* out) {
  return guard([&] {
    require(estimate, "estimate");
    require(truth, "truth");
    require(out, "out");
    *out = lbpp::expected_log_likelihood(truth->fn, estimate->fn,
                                         quadrature(truth->fn.domain, points_per_dim));
  });
}

lbpp_status lbpp_eval_test_ll(const lbpp_intensity* estimate, const lbpp_pattern* test,
                              size_t points_per_dim, double* out) {
  return guard([&] {
    require(estimate, "estimate");
    require(test, "test");
    require(out, "out");
    *out = lbpp::test_log_likelihood(estimate->fn, test->pattern,
                                     quadrature(estimate->fn.domain, points_per_dim));
  });
}

lbpp_status lbpp_eval_kl(const lbpp_intensity* f, const lbpp_intensity* g,
                         size_t points_per_dim, double* out) {
  return guard([&] {
    require(f, "f");
    require(g, "g");
    require(out, "out");
    *out = lbpp::pp_kl_divergence(f->fn, g->fn, quadrature(f->fn.domain, points_per_dim));
  });
}

}  // extern "C"
