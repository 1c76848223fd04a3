#include "mvuq/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "mvuq/bayes.hpp"
#include "mvuq/error.hpp"
#include "mvuq/stats.hpp"

namespace mvuq::diagnostics {
namespace {

void check_shape(const Chains& chains) {
  if (chains.empty() || chains.front().size() < 4) {
    throw Error(Errc::InvalidArgument, "diagnostics need at least one chain of 4 draws");
  }
  for (const auto& c : chains) {
    if (c.size() != chains.front().size()) throw Error(Errc::LengthMismatch, "chains differ in length");
  }
}

Chains split(const Chains& chains) {
  const std::size_t half = chains.front().size() / 2;
  const std::size_t offset = chains.front().size() - half;  // drop the middle draw for odd lengths
  Chains out;
  out.reserve(2 * chains.size());
  for (const auto& c : chains) {
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(offset), c.end());
  }
  return out;
}

double chain_mean(const std::vector<double>& c) { return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size()); }

double chain_var(const std::vector<double>& c, double mean) {
  double s = 0.0;
  for (double v : c) s += (v - mean) * (v - mean);
  return s / static_cast<double>(c.size() - 1);
}

bool all_constant(const Chains& chains) {
  for (const auto& c : chains) {
    if (std::any_of(c.begin(), c.end(), [&](double v) { return v != c.front(); })) return false;
  }
  return true;
}

double ess_of_split(const Chains& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = chain_mean(chains[j]);
    vars[j] = chain_var(chains[j], means[j]);
  }
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(m);
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double b_over_n = 0.0;
  if (m > 1) {
    for (double mu : means) b_over_n += (mu - grand) * (mu - grand);
    b_over_n /= static_cast<double>(m - 1);
  }
  const double nd = static_cast<double>(n);
  const double var_plus = (nd - 1.0) / nd * w + b_over_n;
  if (!(var_plus > 0.0)) return static_cast<double>(m);

  // autocovariance at lag t averaged over chains, biased (1/n) estimator
  auto rho = [&](std::size_t t) {
    double acov = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& c = chains[j];
      double s = 0.0;
      for (std::size_t i = 0; i + t < n; ++i) s += (c[i] - means[j]) * (c[i + t] - means[j]);
      acov += s / nd;
    }
    acov /= static_cast<double>(m);
    return 1.0 - (w - acov) / var_plus;
  };

  // Geyer: sum adjacent pairs while positive, enforcing monotone decrease.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
  return static_cast<double>(m * n) / tau;
}

}  // namespace

double split_rhat(const Chains& chains) {
  check_shape(chains);
  const Chains halves = split(chains);
  const std::size_t m = halves.size();
  const double n = static_cast<double>(halves.front().size());
  std::vector<double> means(m);
  double w = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = chain_mean(halves[j]);
    w += chain_var(halves[j], means[j]);
  }
  w /= static_cast<double>(m);
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / static_cast<double>(m - 1);
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const Chains& chains) {
  check_shape(chains);
  if (all_constant(chains)) return static_cast<double>(chains.size());
  return ess_of_split(split(chains));
}

double bulk_ess(const Chains& chains) {
  check_shape(chains);
  if (all_constant(chains)) return static_cast<double>(chains.size());
  // rank-normalize pooled draws (average ranks for ties, Blom offset)
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(m * n);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) pooled.emplace_back(chains[j][i], j * n + i);
  }
  std::sort(pooled.begin(), pooled.end());
  const double s = static_cast<double>(pooled.size());
  std::vector<double> z(pooled.size());
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t k = i;
    while (k < pooled.size() && pooled[k].first == pooled[i].first) ++k;
    const double rank = 0.5 * static_cast<double>(i + 1 + k);  // mean of ranks i+1..k
    const double q = stats::normal_quantile((rank - 0.375) / (s + 0.25));
    for (std::size_t t = i; t < k; ++t) z[pooled[t].second] = q;
    i = k;
  }
  Chains normed(m, std::vector<double>(n));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) normed[j][i] = z[j * n + i];
  }
  return ess_of_split(split(normed));
}

Report diagnose(const std::vector<std::string>& names, const std::vector<Chains>& series, std::size_t n_coefficients) {
  if (names.size() != series.size()) throw Error(Errc::LengthMismatch, "parameter names and series differ in count");
  Report r;
  if (series.empty()) return r;
  r.chains = series.front().size();
  r.draws_per_chain = series.front().front().size();
  r.min_ess = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < series.size(); ++p) {
    const Chains& chains = series[p];
    ParameterSummary s;
    s.name = names[p];
    std::vector<double> pooled;
    for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
    s.mean = stats::mean(pooled);
    s.sd = pooled.size() > 1 ? std::sqrt(stats::variance(pooled)) : 0.0;
    s.stuck = all_constant(chains);
    s.rhat = split_rhat(chains);
    s.ess_bulk = bulk_ess(chains);
    if (p < n_coefficients && std::isfinite(s.rhat)) r.max_rhat = std::max(r.max_rhat, s.rhat);
    if (p < n_coefficients && !std::isfinite(s.rhat)) r.max_rhat = std::numeric_limits<double>::infinity();
    r.min_ess = std::min(r.min_ess, s.ess_bulk);
    if (s.stuck) r.warnings.push_back("StuckChain: " + s.name + " is constant in every chain");
    r.parameters.push_back(std::move(s));
  }

  // Degenerate when two chains agree draw-for-draw on every parameter.
  for (std::size_t a = 0; a < r.chains && !r.degenerate; ++a) {
    for (std::size_t b = a + 1; b < r.chains && !r.degenerate; ++b) {
      bool same = true;
      for (const auto& chains : series) {
        if (chains[a] != chains[b]) {
          same = false;
          break;
        }
      }
      r.degenerate = same;
    }
  }
  if (r.degenerate) r.warnings.emplace_back("DegenerateChains: at least two chains are identical");
  if (r.max_rhat > kRhatThreshold) {
    r.warnings.push_back("RHatWarning: max split-R-hat over coefficients is " + std::to_string(r.max_rhat));
  }
  return r;
}

Report diagnose(const bayes::PosteriorDraws& draws) {
  const auto names = draws.parameter_names();
  std::vector<Chains> series(names.size());
  for (std::size_t p = 0; p < names.size(); ++p) {
    for (std::size_t c = 0; c < draws.chains; ++c) series[p].push_back(draws.chain_series(p, c));
  }
  Report r = diagnose(names, series, draws.features + 1);
  r.draws_per_chain = draws.draws_per_chain;
  r.warmup = draws.warmup;
  return r;
}

std::string to_json(const Report& report) {
  using nlohmann::ordered_json;
  auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
  ordered_json j;
  j["sampler"] = "gibbs";
  j["acceptance_rate"] = 1.0;  // every Gibbs update is accepted
  j["chains"] = report.chains;
  j["draws_per_chain"] = report.draws_per_chain;
  j["warmup"] = report.warmup;
  j["degenerate"] = report.degenerate;
  j["max_rhat"] = num(report.max_rhat);
  j["min_ess_bulk"] = num(report.min_ess);
  j["warnings"] = report.warnings;
  ordered_json params = ordered_json::array();
  for (const auto& p : report.parameters) {
    params.push_back({{"name", p.name},
                      {"mean", num(p.mean)},
                      {"sd", num(p.sd)},
                      {"rhat", num(p.rhat)},
                      {"ess_bulk", num(p.ess_bulk)},
                      {"stuck", p.stuck}});
  }
  j["parameters"] = std::move(params);
  return j.dump(2) + "\n";
}

}  // namespace mvuq::diagnostics
