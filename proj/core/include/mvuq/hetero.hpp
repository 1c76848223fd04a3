#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvuq/distribution.hpp"

namespace mvuq::hetero {

inline constexpr double kVarianceFloor = 1e-12;

/// Per-row Gaussian negative log-likelihood without the log(2 pi) / 2 term.
double nll(double y, double mu, double var);

/// Linear mean head and linear log-variance head on standardized features:
/// mu(x) = z'w_mu + b_mu, log sigma^2(x) = z'w_s + b_s, z = (x - means) / sds.
struct HeteroModel {
  Eigen::VectorXd w_mu;
  double b_mu = 0.0;
  Eigen::VectorXd w_s;
  double b_s = 0.0;
  Eigen::RowVectorXd column_means;
  Eigen::RowVectorXd column_sds;

  std::size_t dim() const { return static_cast<std::size_t>(w_mu.size()); }
};

/// Mean NLL over rows as a function of the packed parameter vector
/// theta = [w_mu, b_mu, w_s, b_s], on an already standardized design.
class HeteroObjective {
 public:
  HeteroObjective(Eigen::MatrixXd z, Eigen::VectorXd y);

  double value(const Eigen::VectorXd& theta) const;
  /// Analytic gradient: dNLL/dmu = (mu - y) / var, dNLL/dlog var = (1 - r^2 / var) / 2.
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  std::size_t dim() const { return static_cast<std::size_t>(z_.cols()); }

 private:
  Eigen::MatrixXd z_;
  Eigen::VectorXd y_;
};

Eigen::VectorXd pack(const HeteroModel& m);
void unpack(const Eigen::VectorXd& theta, HeteroModel& m);

struct HeteroOptions {
  double lr = 1e-2;
  std::size_t epochs = 2000;
  std::size_t patience = 50;
  std::uint64_t seed = 0;
  /// Ridge penalty per training row for the mean-head warm start, so the
  /// start point does not depend on how often each row is repeated.
  double warm_start_alpha = 1e-2;
  /// Freeze w_s at zero and set b_s to its exact optimum, log of the mean
  /// squared residual, after every step.
  bool constant_variance = false;
};

struct HeteroFit {
  HeteroModel model;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double best_nll = 0.0;
  std::vector<double> incumbent_nll;  // best-so-far mean NLL after each epoch
  bool variance_floor_hit = false;
  std::vector<std::string> warnings;
};

/// Full-batch Adam on the mean NLL with analytic gradients, warm-started from
/// an alpha = 1 ridge fit for the mean head and the log residual variance for
/// b_s. Returns the epoch with the lowest training NLL.
HeteroFit fit_hetero(const Eigen::MatrixXd& x, std::span<const double> y, const HeteroOptions& options = {});

std::vector<PredictiveDistribution> predict_hetero(const HeteroModel& model, const Eigen::MatrixXd& x);

}  // namespace mvuq::hetero
