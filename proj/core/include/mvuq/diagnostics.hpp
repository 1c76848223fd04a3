#pragma once

#include <string>
#include <vector>

namespace mvuq::bayes {
struct PosteriorDraws;
}

namespace mvuq::diagnostics {

/// One inner vector per chain; all chains must have the same length.
using Chains = std::vector<std::vector<double>>;

/// Split-R-hat: each chain is halved and the classic between/within variance
/// ratio is taken over the 2M half-chains. Returns 1 when every half-chain
/// is constant and equal, NaN when half-chains are constant but differ.
double split_rhat(const Chains& chains);

/// Multi-chain ESS over split chains with Geyer's initial monotone sequence.
double effective_sample_size(const Chains& chains);

/// ESS after rank-normalizing the pooled draws (bulk ESS).
double bulk_ess(const Chains& chains);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double rhat = 1.0;
  double ess_bulk = 0.0;
  bool stuck = false;  // every chain constant
};

struct Report {
  std::size_t chains = 0;
  std::size_t draws_per_chain = 0;
  std::size_t warmup = 0;
  std::vector<ParameterSummary> parameters;
  /// Some pair of chains is draw-for-draw identical (e.g. reused seed).
  bool degenerate = false;
  double max_rhat = 1.0;  // over coefficients
  double min_ess = 0.0;
  std::vector<std::string> warnings;
};

constexpr double kRhatThreshold = 1.05;

/// names.size() == series.size(); series[p] holds the chains of parameter p.
/// The first n_coefficients parameters are the ones R-hat warnings refer to.
Report diagnose(const std::vector<std::string>& names, const std::vector<Chains>& series, std::size_t n_coefficients);
Report diagnose(const bayes::PosteriorDraws& draws);

std::string to_json(const Report& report);

}  // namespace mvuq::diagnostics
