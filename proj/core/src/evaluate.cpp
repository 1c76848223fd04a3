#include "mvuq/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mvuq/error.hpp"
#include "mvuq/folds.hpp"
#include "mvuq/parallel.hpp"
#include "mvuq/random.hpp"
#include "mvuq/ridge.hpp"
#include "mvuq/stats.hpp"
#include "mvuq/table_io.hpp"

namespace mvuq::eval {
namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<double> take(const std::vector<double>& v, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

bool has_predictive(Method m) { return m == Method::Hetero || m == Method::BlrConjugate || m == Method::BlrMcmc; }

// Output of one method on one fold.
struct FoldOutput {
  std::vector<double> point;
  std::vector<PredictiveDistribution> dists;
  double alpha = 0.0;
  std::vector<std::string> warnings;
};

FoldOutput run_method(Method method, const Eigen::MatrixXd& x_train, const std::vector<double>& y_train,
                      const Eigen::MatrixXd& x_test, const EvalOptions& opt, std::size_t fold) {
  FoldOutput out;
  const std::uint64_t fold_seed = Rng::mix(opt.seed, 1000 + fold);
  switch (method) {
    case Method::Mean: {
      const auto m = regress::mean_baseline(y_train);
      const Eigen::VectorXd p = m.predict(static_cast<std::size_t>(x_test.rows()));
      out.point.assign(p.data(), p.data() + p.size());
      break;
    }
    case Method::RidgeCv: {
      const auto grid = opt.alpha_grid.empty() ? regress::default_alpha_grid() : opt.alpha_grid;
      const std::size_t k = std::min(opt.inner_folds, y_train.size());
      const auto cv = regress::fit_ridge_cv(x_train, y_train, grid, k, fold_seed);
      const Eigen::VectorXd p = regress::predict(cv.model, x_test);
      out.point.assign(p.data(), p.data() + p.size());
      out.alpha = cv.report.chosen_alpha;
      break;
    }
    case Method::Hetero: {
      auto h = opt.hetero;
      h.seed = fold_seed;
      const auto fit = hetero::fit_hetero(x_train, y_train, h);
      out.dists = hetero::predict_hetero(fit.model, x_test);
      out.warnings = fit.warnings;
      break;
    }
    case Method::BlrConjugate: {
      bayes::ConjugateOptions c;
      c.c = opt.blr_c;
      c.intercept_sd = opt.intercept_sd;
      c.sigma2 = opt.blr_sigma2.value_or(estimate_sigma2(x_train, y_train, opt.blr_c, opt.intercept_sd));
      out.dists = bayes::predict_blr(bayes::fit_blr_conjugate(x_train, y_train, c), x_test);
      break;
    }
    case Method::BlrMcmc: {
      auto m = opt.mcmc;
      m.seed = fold_seed;
      const auto draws = bayes::fit_blr_mcmc(x_train, y_train, opt.prior, m);
      out.dists = bayes::predict_blr(draws, x_test, Rng::mix(fold_seed, 7));
      out.warnings = draws.warnings;
      break;
    }
  }
  if (out.point.empty()) {
    for (const auto& d : out.dists) out.point.push_back(d.mean());
  }
  if (opt.clamp_01) {
    for (auto& v : out.point) v = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::Mean: return "mean";
    case Method::RidgeCv: return "ridge_cv";
    case Method::Hetero: return "hetero";
    case Method::BlrConjugate: return "blr_conjugate";
    case Method::BlrMcmc: return "blr_mcmc";
  }
  return "mean";
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"mean", "ridge_cv", "hetero", "blr_conjugate", "blr_mcmc"};
  return names;
}

Method method_from_string(const std::string& s) {
  const auto& names = method_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == s) return static_cast<Method>(i);
  }
  std::string valid;
  for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
  throw Error(Errc::InvalidArgument, "unknown model '" + s + "'; valid models: " + valid);
}

double estimate_sigma2(const Eigen::MatrixXd& x, std::span<const double> y, double c, double intercept_sd) {
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  Eigen::MatrixXd xt(x.rows(), x.cols() + 1);
  xt << x, Eigen::VectorXd::Ones(x.rows());
  double s2 = std::max(stats::variance(y), 1e-8);
  for (int it = 0; it < 50; ++it) {
    bayes::ConjugateOptions o;
    o.c = c;
    o.intercept_sd = intercept_sd;
    o.sigma2 = s2;
    const auto post = bayes::fit_blr_conjugate(x, y, o);
    const Eigen::VectorXd r = yv - xt * post.mean;
    const double trace = (xt * post.cov).cwiseProduct(xt).sum();
    const double next = std::max((r.squaredNorm() + trace) / static_cast<double>(y.size()), 1e-10);
    const bool done = std::abs(next - s2) <= 1e-8 * s2;
    s2 = next;
    if (done) break;
  }
  return s2;
}

ScoreReport evaluate(const std::vector<ViewSet>& sets, const std::vector<double>& y, const EvalOptions& options) {
  if (sets.empty()) throw Error(Errc::InvalidArgument, "no view sets to evaluate");
  if (options.methods.empty()) throw Error(Errc::InvalidArgument, "no methods to evaluate");
  const std::size_t n = y.size();
  for (const auto& s : sets) {
    if (s.features.n() != n) {
      throw Error(Errc::RowCountMismatch, "view set '" + s.name + "' has " + std::to_string(s.features.n()) +
                                              " rows, targets have " + std::to_string(n));
    }
  }
  if (options.folds < 2 || options.folds > n) {
    throw Error(Errc::InvalidArgument, "need 2 <= folds <= n (folds=" + std::to_string(options.folds) +
                                           ", n=" + std::to_string(n) + ")");
  }
  const FoldPlan plan = make_folds(n, options.folds, options.seed);
  const std::size_t k = plan.k();

  ScoreReport report;
  report.n = n;
  report.folds = k;
  report.seed = options.seed;
  report.level = options.level;
  for (const auto& t : plan.test) report.fold_sizes.push_back(t.size());

  for (const auto& set : sets) {
    const Eigen::MatrixXd& x = set.features.values();
    // outputs[method][fold]
    std::vector<std::vector<FoldOutput>> outputs(options.methods.size(), std::vector<FoldOutput>(k));
    parallel_for(k, [&](std::size_t f) {
      Eigen::MatrixXd x_train = take_rows(x, plan.train[f]);
      Eigen::MatrixXd x_test = take_rows(x, plan.test[f]);
      if (options.standardize) {
        const auto st = features::ColumnStandardizer::fit(x_train);
        x_train = st.apply(x_train);
        x_test = st.apply(x_test);
      }
      const auto y_train = take(y, plan.train[f]);
      for (std::size_t m = 0; m < options.methods.size(); ++m) {
        try {
          outputs[m][f] = run_method(options.methods[m], x_train, y_train, x_test, options, f);
        } catch (const Error& e) {
          throw Error(e.code(), "view set '" + set.name + "', method " + to_string(options.methods[m]) + ", fold " +
                                    std::to_string(f) + ": " + e.what());
        }
      }
    });

    for (std::size_t m = 0; m < options.methods.size(); ++m) {
      const Method method = options.methods[m];
      MethodResult res;
      res.method = to_string(method);
      res.views = set.name;
      std::vector<PredictiveDistribution> pooled;
      std::vector<double> pooled_y;
      for (std::size_t f = 0; f < k; ++f) {
        const auto& o = outputs[m][f];
        const auto y_test = take(y, plan.test[f]);
        res.fold_mae.push_back(regress::mean_absolute_error(y_test, o.point));
        if (method == Method::RidgeCv) res.chosen_alpha.push_back(o.alpha);
        for (const auto& w : o.warnings) res.warnings.push_back("fold " + std::to_string(f) + ": " + w);
        pooled.insert(pooled.end(), o.dists.begin(), o.dists.end());
        pooled_y.insert(pooled_y.end(), y_test.begin(), y_test.end());
      }
      res.mae_mean = stats::mean(res.fold_mae);
      res.mae_se = regress::standard_error(res.fold_mae);
      if (method == Method::RidgeCv) {
        auto x_all = x;
        if (options.standardize) x_all = features::ColumnStandardizer::fit(x).apply(x);
        const auto grid = options.alpha_grid.empty() ? regress::default_alpha_grid() : options.alpha_grid;
        res.refit_alpha = regress::fit_ridge_cv(x_all, y, grid, plan).report.chosen_alpha;
      }
      if (has_predictive(method)) res.uncertainty = metrics::score(res.method, pooled, pooled_y, options.level);
      report.results.push_back(std::move(res));
    }
  }
  return report;
}

std::string report_json(const ScoreReport& report, const std::string& provenance_json) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = "uqreport/1";
  j["provenance"] = provenance_json.empty() ? ordered_json::object() : ordered_json::parse(provenance_json);
  j["n"] = report.n;
  j["folds"] = report.folds;
  j["fold_sizes"] = report.fold_sizes;
  j["seed"] = report.seed;
  j["interval_level"] = report.level;
  j["nll_convention"] = metrics::kNllConvention;
  j["interval_construction"] = "central equal-tailed, closed";
  auto mae = ordered_json::array();
  auto unc = ordered_json::array();
  for (const auto& r : report.results) {
    ordered_json row;
    row["method"] = r.method;
    row["views"] = r.views;
    row["fold_mae"] = r.fold_mae;
    row["mae_mean"] = r.mae_mean;
    row["mae_se"] = r.mae_se;
    if (!r.chosen_alpha.empty()) row["chosen_alpha"] = r.chosen_alpha;
    if (r.refit_alpha) row["refit_alpha"] = *r.refit_alpha;
    if (!r.warnings.empty()) row["warnings"] = r.warnings;
    mae.push_back(std::move(row));
    if (r.uncertainty) {
      const auto& u = *r.uncertainty;
      unc.push_back({{"method", r.method},
                     {"views", r.views},
                     {"interval_length", u.interval.mean_length},
                     {"coverage", u.interval.coverage},
                     {"nll", u.nll},
                     {"crps", u.crps},
                     {"n", u.interval.n}});
    }
  }
  j["mae"] = std::move(mae);
  j["uncertainty"] = std::move(unc);
  return j.dump(2) + "\n";
}

std::string report_csv(const ScoreReport& report) {
  std::string out = "method,views,interval_length,coverage,nll,crps\n";
  for (const auto& r : report.results) {
    if (!r.uncertainty) continue;
    const auto& u = *r.uncertainty;
    out += r.method + "," + r.views + "," + table::format_number(u.interval.mean_length) + "," +
           table::format_number(u.interval.coverage) + "," + table::format_number(u.nll) + "," +
           table::format_number(u.crps) + "\n";
  }
  return out;
}

}  // namespace mvuq::eval
