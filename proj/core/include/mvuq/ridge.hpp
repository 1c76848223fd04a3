#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mvuq/folds.hpp"

namespace mvuq::regress {

/// Ridge fit y ~ ((x - mean) / sd) w + target_mean. With standardize off
/// (the default) sds are 1 and w acts on centred raw columns.
struct RidgeModel {
  Eigen::VectorXd w;
  double b = 0.0;  // intercept on the raw feature scale
  double alpha = 0.0;
  Eigen::RowVectorXd column_means;
  Eigen::RowVectorXd column_sds;
  double target_mean = 0.0;

  /// Weights on the raw feature scale.
  Eigen::VectorXd raw_weights() const;
};

struct RidgeOptions {
  bool standardize = false;
};

/// Thin SVD of the centred design, reused to solve for any penalty.
class RidgePath {
 public:
  RidgePath(const Eigen::MatrixXd& x, std::span<const double> y, const RidgeOptions& options = {});

  RidgeModel solve(double alpha) const;
  std::size_t rank() const { return rank_; }

 private:
  Eigen::RowVectorXd means_;
  Eigen::RowVectorXd sds_;
  double y_mean_ = 0.0;
  Eigen::MatrixXd v_;
  Eigen::VectorXd s_;
  Eigen::VectorXd uty_;
  std::size_t rank_ = 0;
  std::size_t d_ = 0;
};

/// Solves (Xc'Xc + alpha I) w = Xc'yc; the intercept is unpenalized.
RidgeModel fit_ridge(const Eigen::MatrixXd& x, std::span<const double> y, double alpha,
                     const RidgeOptions& options = {});

Eigen::VectorXd predict(const RidgeModel& model, const Eigen::MatrixXd& x);

/// 17 log-spaced penalties from 1e-4 to 1e4.
std::vector<double> default_alpha_grid();

struct CvReport {
  std::size_t folds = 0;
  std::vector<double> fold_mae;  // for the chosen alpha
  double mae_mean = 0.0;
  double mae_se = 0.0;
  double chosen_alpha = 0.0;
  std::vector<double> alphas;          // sorted ascending
  std::vector<double> alpha_mean_mae;  // mean fold MAE per alpha
};

struct RidgeCvResult {
  RidgeModel model;
  CvReport report;
};

/// Picks the alpha with the lowest mean fold MAE (ties go to the smaller
/// alpha), then refits on every row.
RidgeCvResult fit_ridge_cv(const Eigen::MatrixXd& x, std::span<const double> y, std::vector<double> alpha_grid,
                           std::size_t k, std::uint64_t seed, const RidgeOptions& options = {});
RidgeCvResult fit_ridge_cv(const Eigen::MatrixXd& x, std::span<const double> y, std::vector<double> alpha_grid,
                           const FoldPlan& folds, const RidgeOptions& options = {});

double mean_absolute_error(std::span<const double> truth, std::span<const double> pred);

/// Standard error of fold metrics: sample sd / sqrt(K).
double standard_error(std::span<const double> fold_values);

struct MeanPredictor {
  double value = 0.0;
  Eigen::VectorXd predict(std::size_t n) const { return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), value); }
};

MeanPredictor mean_baseline(std::span<const double> y_train);

}  // namespace mvuq::regress
