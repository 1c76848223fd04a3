#pragma once

#include <vector>

namespace mvuq {

/// Predictive distribution for one location: a Gaussian, or an empirical
/// distribution of draws (kept sorted ascending).
class PredictiveDistribution {
 public:
  enum class Kind { Gaussian, Samples };

  static PredictiveDistribution gaussian(double mu, double var);
  static PredictiveDistribution samples(std::vector<double> draws);

  Kind kind() const { return kind_; }
  bool is_gaussian() const { return kind_ == Kind::Gaussian; }
  double mu() const { return mu_; }
  double var() const { return var_; }
  const std::vector<double>& draws() const { return draws_; }

  /// Moments; for samples the sample mean and (n - 1) variance.
  double mean() const { return mu_; }
  double variance() const { return var_; }

 private:
  Kind kind_ = Kind::Gaussian;
  double mu_ = 0.0;
  double var_ = 1.0;
  std::vector<double> draws_;
};

}  // namespace mvuq
