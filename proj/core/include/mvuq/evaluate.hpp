#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvuq/bayes.hpp"
#include "mvuq/features.hpp"
#include "mvuq/hetero.hpp"
#include "mvuq/metrics.hpp"

namespace mvuq::eval {

enum class Method { Mean, RidgeCv, Hetero, BlrConjugate, BlrMcmc };

std::string to_string(Method m);
/// Throws InvalidArgument listing the valid names.
Method method_from_string(const std::string& s);
const std::vector<std::string>& method_names();

/// A named feature set scored as one unit ("natural", "fused", ...).
struct ViewSet {
  std::string name;
  features::FeatureMatrix features;
};

struct EvalOptions {
  std::vector<Method> methods{Method::Mean, Method::RidgeCv};
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double level = metrics::kDefaultLevel;
  std::vector<double> alpha_grid;  // empty = default grid
  std::size_t inner_folds = 5;
  /// Standardize features with training-fold statistics before fitting.
  bool standardize = true;
  /// Clamp point predictions into [0, 1] before computing MAE.
  bool clamp_01 = false;
  hetero::HeteroOptions hetero;
  double blr_c = 1.0;
  double intercept_sd = 5.0;
  /// Fixed noise for the conjugate path; estimated per fold when absent.
  std::optional<double> blr_sigma2;
  bayes::BlrPriorConfig prior;
  bayes::McmcOptions mcmc;
};

struct MethodResult {
  std::string method;
  std::string views;
  std::vector<double> fold_mae;
  double mae_mean = 0.0;
  double mae_se = 0.0;
  std::vector<double> chosen_alpha;      // ridge only, per outer fold
  std::optional<double> refit_alpha;     // ridge only, alpha picked on all rows
  std::optional<metrics::UncertaintyRow> uncertainty;  // pooled out-of-fold
  std::vector<std::string> warnings;
};

struct ScoreReport {
  std::size_t n = 0;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  double level = metrics::kDefaultLevel;
  std::vector<std::size_t> fold_sizes;
  std::vector<MethodResult> results;  // view set major, then method order
};

/// K-fold evaluation with one partition shared by every method and view set.
ScoreReport evaluate(const std::vector<ViewSet>& sets, const std::vector<double>& y, const EvalOptions& options);

/// Conjugate noise estimate: EM iterations of sigma^2 = mean((y - x~'mu)^2 + x~'Sigma x~).
double estimate_sigma2(const Eigen::MatrixXd& x, std::span<const double> y, double c, double intercept_sd);

/// "uqreport/1" JSON; provenance_json is embedded verbatim as an object.
std::string report_json(const ScoreReport& report, const std::string& provenance_json);
/// method,views,interval_length,coverage,nll,crps
std::string report_csv(const ScoreReport& report);

}  // namespace mvuq::eval
