#include "mvuq/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mvuq/error.hpp"
#include "mvuq/stats.hpp"

namespace mvuq {

PredictiveDistribution PredictiveDistribution::gaussian(double mu, double var) {
  if (!std::isfinite(mu)) throw Error(Errc::NonFiniteValue, "predictive mean is not finite");
  if (!(var > 0.0) || !std::isfinite(var)) throw Error(Errc::NonPositiveVariance, "predictive variance must be positive");
  PredictiveDistribution d;
  d.kind_ = Kind::Gaussian;
  d.mu_ = mu;
  d.var_ = var;
  return d;
}

PredictiveDistribution PredictiveDistribution::samples(std::vector<double> draws) {
  if (draws.empty()) throw Error(Errc::TooFewSamples, "sample predictive needs at least one draw");
  for (double v : draws) {
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "non-finite predictive draw");
  }
  std::sort(draws.begin(), draws.end());
  PredictiveDistribution d;
  d.kind_ = Kind::Samples;
  d.mu_ = stats::mean(draws);
  d.var_ = stats::variance(draws);
  d.draws_ = std::move(draws);
  return d;
}

namespace metrics {
namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(Errc::InvalidArgument, "interval level must lie in (0, 1)");
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error(Errc::LengthMismatch, std::to_string(a) + " predictions vs " + std::to_string(b) + " targets");
  if (a == 0) throw Error(Errc::InvalidArgument, "no predictions to score");
}

}  // namespace

std::pair<double, double> interval(const PredictiveDistribution& dist, double level) {
  check_level(level);
  if (dist.is_gaussian()) {
    const double half = stats::normal_quantile(0.5 * (1.0 + level)) * std::sqrt(dist.var());
    return {dist.mu() - half, dist.mu() + half};
  }
  const auto& draws = dist.draws();
  if (draws.size() < kMinIntervalSamples) {
    throw Error(Errc::TooFewSamples, std::to_string(draws.size()) + " draws; intervals need at least " +
                                         std::to_string(kMinIntervalSamples));
  }
  return {stats::quantile_sorted(draws, 0.5 * (1.0 - level)), stats::quantile_sorted(draws, 0.5 * (1.0 + level))};
}

IntervalReport coverage_and_length(std::span<const PredictiveDistribution> dists, std::span<const double> y_true,
                                   double level) {
  check_lengths(dists.size(), y_true.size());
  IntervalReport rep;
  rep.level = level;
  rep.n = dists.size();
  double total = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const auto [lo, hi] = interval(dists[i], level);
    total += hi - lo;
    if (y_true[i] >= lo && y_true[i] <= hi) ++rep.covered;
  }
  rep.mean_length = total / static_cast<double>(rep.n);
  rep.coverage = static_cast<double>(rep.covered) / static_cast<double>(rep.n);
  return rep;
}

double gaussian_nll(double y, double mu, double var) {
  if (!(var > 0.0)) throw Error(Errc::NonPositiveVariance, "variance must be positive");
  const double r = y - mu;
  return r * r / (2.0 * var) + 0.5 * std::log(var);
}

double eval_nll(std::span<const PredictiveDistribution> dists, std::span<const double> y_true) {
  check_lengths(dists.size(), y_true.size());
  double total = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) total += gaussian_nll(y_true[i], dists[i].mean(), dists[i].variance());
  return total / static_cast<double>(dists.size());
}

double crps_gaussian(double mu, double sigma, double y) {
  if (!(sigma > 0.0)) throw Error(Errc::NonPositiveVariance, "CRPS needs sigma > 0");
  const double z = (y - mu) / sigma;
  return sigma * (z * (2.0 * stats::normal_cdf(z) - 1.0) + 2.0 * stats::normal_pdf(z) - 1.0 / std::sqrt(stats::kPi));
}

double crps_samples(std::span<const double> sorted, double y) {
  const std::size_t m = sorted.size();
  if (m < 2) throw Error(Errc::TooFewSamples, "sample CRPS needs at least 2 draws");
  double abs_dev = 0.0;
  double pair_sum = 0.0;  // sum over i<j of (x_j - x_i)
  for (std::size_t i = 0; i < m; ++i) {
    abs_dev += std::abs(sorted[i] - y);
    pair_sum += (2.0 * static_cast<double>(i) - static_cast<double>(m) + 1.0) * sorted[i];
  }
  const double md = static_cast<double>(m);
  // mean over all m^2 ordered pairs of |X - X'| is 2 * pair_sum / m^2
  return abs_dev / md - pair_sum / (md * md);
}

double crps(const PredictiveDistribution& dist, double y) {
  if (dist.is_gaussian()) return crps_gaussian(dist.mu(), std::sqrt(dist.var()), y);
  return crps_samples(dist.draws(), y);
}

double mean_crps(std::span<const PredictiveDistribution> dists, std::span<const double> y_true) {
  check_lengths(dists.size(), y_true.size());
  double total = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) total += crps(dists[i], y_true[i]);
  return total / static_cast<double>(dists.size());
}

UncertaintyRow score(const std::string& method, std::span<const PredictiveDistribution> dists,
                     std::span<const double> y_true, double level) {
  UncertaintyRow row;
  row.method = method;
  row.interval = coverage_and_length(dists, y_true, level);
  row.nll = eval_nll(dists, y_true);
  row.crps = mean_crps(dists, y_true);
  return row;
}

}  // namespace metrics
}  // namespace mvuq
