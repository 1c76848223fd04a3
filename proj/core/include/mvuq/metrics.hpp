#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvuq/distribution.hpp"

namespace mvuq::metrics {

inline constexpr std::size_t kMinIntervalSamples = 20;
inline constexpr double kDefaultLevel = 0.95;

/// Central interval with nominal coverage `level`: Gaussian mu +/- z sigma,
/// samples by type-7 quantiles at (1 - level) / 2 and (1 + level) / 2.
std::pair<double, double> interval(const PredictiveDistribution& dist, double level);

struct IntervalReport {
  double level = kDefaultLevel;
  double mean_length = 0.0;
  double coverage = 0.0;
  std::size_t n = 0;
  std::size_t covered = 0;
};

/// Closed intervals: a target on the boundary counts as covered.
IntervalReport coverage_and_length(std::span<const PredictiveDistribution> dists, std::span<const double> y_true,
                                   double level = kDefaultLevel);

/// (y - mu)^2 / (2 var) + log(var) / 2, without the log(2 pi) / 2 constant.
double gaussian_nll(double y, double mu, double var);

/// Mean NLL. Sample-based predictives are moment-matched to a Gaussian first.
double eval_nll(std::span<const PredictiveDistribution> dists, std::span<const double> y_true);

inline constexpr const char* kNllConvention =
    "mean of (y-mu)^2/(2 var) + 0.5 log var; constant 0.5 log(2 pi) excluded; sample predictives moment-matched";

/// CRPS: Gaussian closed form, or the exact CRPS of the empirical draw
/// distribution, mean|X - y| - mean|X - X'| / 2, in O(m log m).
double crps(const PredictiveDistribution& dist, double y);
double crps_gaussian(double mu, double sigma, double y);
double crps_samples(std::span<const double> sorted_draws, double y);
double mean_crps(std::span<const PredictiveDistribution> dists, std::span<const double> y_true);

/// One method's uncertainty row.
struct UncertaintyRow {
  std::string method;
  IntervalReport interval;
  double nll = 0.0;
  double crps = 0.0;
};

UncertaintyRow score(const std::string& method, std::span<const PredictiveDistribution> dists,
                     std::span<const double> y_true, double level = kDefaultLevel);

}  // namespace mvuq::metrics
