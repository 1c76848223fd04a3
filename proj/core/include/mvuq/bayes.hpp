#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvuq/distribution.hpp"
#include "mvuq/tensor_io.hpp"

namespace mvuq::bayes {

enum class PriorKind { GaussianRidge, HalfT, RegularizedHorseshoe };

std::string to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& s);

/// Coefficient prior w_j ~ N(0, c) (ridge) or w_j ~ N(0, lambda_j^2 tau^2)
/// with lambda_j ~ t_nu^+(0, 1) and tau ~ C^+(0, tau_scale). The regularized
/// horseshoe adds an independent N(0, slab_scale^2) factor, so the conditional
/// prior variance is slab^2 lambda^2 tau^2 / (slab^2 + lambda^2 tau^2).
/// Intercept b ~ N(0, intercept_sd^2); sigma has a flat prior on (0, inf).
struct BlrPriorConfig {
  PriorKind kind = PriorKind::HalfT;
  double c = 1.0;
  double nu = 3.0;
  double slab_scale = 2.0;
  double intercept_sd = 5.0;
  double tau_scale = 1.0;

  static BlrPriorConfig gaussian_ridge(double c);
  static BlrPriorConfig half_t(double nu = 3.0);
  static BlrPriorConfig regularized_horseshoe(double nu = 3.0, double slab_scale = 2.0);
  void validate() const;
};

/// Posterior of w~ = [w, b] under a Gaussian prior with fixed noise. Without
/// an intercept the vector is just w.
struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double sigma2 = 1.0;
  bool intercept = true;

  std::size_t features() const { return static_cast<std::size_t>(mean.size()) - (intercept ? 1 : 0); }
};

struct ConjugateOptions {
  double c = 1.0;
  double sigma2 = 1.0;
  double intercept_sd = 5.0;
  bool fit_intercept = true;
};

/// Sigma = (X~'X~ / sigma2 + Omega^-1)^-1, mu = Sigma X~'y / sigma2 with
/// X~ = [F, 1] and Omega = diag(c, ..., c, intercept_sd^2).
GaussianPosterior fit_blr_conjugate(const Eigen::MatrixXd& x, std::span<const double> y,
                                    const ConjugateOptions& options = {});

/// Posterior predictive N(x~'mu, x~'Sigma x~ + sigma2) per row.
std::vector<PredictiveDistribution> predict_blr(const GaussianPosterior& posterior, const Eigen::MatrixXd& x);

enum class WeightSampler { Auto, Cholesky, LowRank };

struct McmcOptions {
  std::size_t chains = 4;
  std::size_t draws = 1500;  // per chain, including warm-up
  std::size_t warmup = 500;
  std::uint64_t seed = 0;
  bool standardize = true;
  /// Hold lambda_j = 1 and tau = 1 (Gaussian prior with unit variance).
  bool pin_scales = false;
  /// Hold sigma^2 fixed instead of sampling it.
  std::optional<double> fixed_sigma2;
  WeightSampler weight_sampler = WeightSampler::Auto;
};

/// Kept draws, chain-major: row chain * kept() + t. Coefficients are mapped
/// back to the raw feature scale; the last coefficient column is the intercept.
struct PosteriorDraws {
  std::size_t chains = 0;
  std::size_t draws_per_chain = 0;
  std::size_t warmup = 0;
  std::size_t features = 0;
  Eigen::MatrixXd coefficients;  // (chains * kept) x (features + 1)
  Eigen::VectorXd sigma;
  Eigen::VectorXd tau;
  Eigen::MatrixXd lambda;        // (chains * kept) x features
  BlrPriorConfig prior;
  std::vector<std::string> warnings;

  std::size_t kept() const { return draws_per_chain - warmup; }
  std::size_t total() const { return chains * kept(); }
  std::size_t parameter_count() const { return 2 * features + 3; }
  /// w[0..d-1], b, sigma, tau, lambda[0..d-1]
  std::vector<std::string> parameter_names() const;
  /// All parameters of one kept draw, in parameter_names() order.
  Eigen::VectorXd parameters(std::size_t row) const;
  /// One parameter's draws for one chain, in sampling order.
  std::vector<double> chain_series(std::size_t parameter, std::size_t chain) const;
};

/// Gibbs sampler with inverse-gamma auxiliaries for the half-t local scales
/// and the half-Cauchy global scale, a joint Gaussian draw for [w, b] and an
/// inverse-gamma draw for sigma^2. Chains are independent streams of the seed.
PosteriorDraws fit_blr_mcmc(const Eigen::MatrixXd& x, std::span<const double> y, const BlrPriorConfig& prior,
                            const McmcOptions& options = {});

/// One predictive draw x~'w~ + sigma * eps per kept posterior draw.
std::vector<PredictiveDistribution> predict_blr(const PosteriorDraws& draws, const Eigen::MatrixXd& x,
                                                std::uint64_t seed);

/// Draws as a rank-3 BTSR tensor (chains, kept, parameters) plus the
/// "<stem>.params.json" sidecar.
Tensor draws_to_tensor(const PosteriorDraws& draws);
void save_draws(const std::filesystem::path& path, const PosteriorDraws& draws);
PosteriorDraws load_draws(const std::filesystem::path& path);

}  // namespace mvuq::bayes
