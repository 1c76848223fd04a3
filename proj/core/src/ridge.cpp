#include "mvuq/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvuq/error.hpp"
#include "mvuq/stats.hpp"

namespace mvuq {

FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::InvalidArgument, "need at least 2 folds");
  if (k > n) throw Error(Errc::InvalidArgument, "more folds (" + std::to_string(k) + ") than rows (" + std::to_string(n) + ")");
  const auto order = stats::permutation(n, seed);
  FoldPlan plan;
  plan.test.resize(k);
  plan.train.resize(k);
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    plan.test[f].assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(start + size));
    start += size;
  }
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) plan.train[f].insert(plan.train[f].end(), plan.test[g].begin(), plan.test[g].end());
    }
  }
  return plan;
}

namespace regress {
namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<double> take(std::span<const double> y, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

Eigen::VectorXd RidgeModel::raw_weights() const { return w.array() / column_sds.transpose().array(); }

RidgePath::RidgePath(const Eigen::MatrixXd& x, std::span<const double> y, const RidgeOptions& options) {
  const auto n = x.rows();
  if (n < 2) throw Error(Errc::InvalidArgument, "ridge needs at least 2 rows");
  if (static_cast<std::size_t>(n) != y.size()) throw Error(Errc::LengthMismatch, "X rows and y length differ");
  d_ = static_cast<std::size_t>(x.cols());
  means_ = x.colwise().mean();
  Eigen::MatrixXd xc = x.rowwise() - means_;
  sds_ = Eigen::RowVectorXd::Ones(x.cols());
  if (options.standardize) {
    sds_ = (xc.array().square().colwise().sum() / static_cast<double>(n)).sqrt().matrix();
    sds_ = sds_.unaryExpr([](double v) { return v > 1e-12 ? v : 1.0; });
    xc = xc.array().rowwise() / sds_.array();
  }
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  y_mean_ = yv.mean();
  const Eigen::VectorXd yc = yv.array() - y_mean_;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  s_ = svd.singularValues();
  v_ = svd.matrixV();
  uty_ = svd.matrixU().transpose() * yc;
  const double tol = s_.size() > 0 ? s_(0) * std::numeric_limits<double>::epsilon() *
                                         static_cast<double>(std::max(x.rows(), x.cols()))
                                   : 0.0;
  rank_ = 0;
  for (Eigen::Index i = 0; i < s_.size(); ++i) {
    if (s_(i) > tol) ++rank_;
  }
}

RidgeModel RidgePath::solve(double alpha) const {
  if (!(alpha >= 0.0)) throw Error(Errc::InvalidArgument, "alpha must be >= 0");
  if (alpha == 0.0 && rank_ < d_) {
    throw Error(Errc::SingularSystem, "unpenalized fit with rank " + std::to_string(rank_) + " < " + std::to_string(d_) +
                                          " columns");
  }
  Eigen::VectorXd shrink(s_.size());
  for (Eigen::Index i = 0; i < s_.size(); ++i) {
    const double s = s_(i);
    shrink(i) = (alpha == 0.0 && s == 0.0) ? 0.0 : s / (s * s + alpha);
  }
  RidgeModel m;
  m.alpha = alpha;
  m.w = v_ * (shrink.asDiagonal() * uty_);
  m.column_means = means_;
  m.column_sds = sds_;
  m.target_mean = y_mean_;
  m.b = y_mean_ - means_.dot(m.raw_weights());
  return m;
}

RidgeModel fit_ridge(const Eigen::MatrixXd& x, std::span<const double> y, double alpha, const RidgeOptions& options) {
  return RidgePath(x, y, options).solve(alpha);
}

Eigen::VectorXd predict(const RidgeModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.w.size()) {
    throw Error(Errc::DimensionMismatch, "model has " + std::to_string(model.w.size()) + " weights, features have " +
                                             std::to_string(x.cols()) + " columns");
  }
  return (x * model.raw_weights()).array() + model.b;
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 17; ++i) grid.push_back(std::pow(10.0, -4.0 + 0.5 * i));
  return grid;
}

double mean_absolute_error(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) throw Error(Errc::LengthMismatch, "MAE inputs differ in length");
  if (truth.empty()) throw Error(Errc::InvalidArgument, "MAE of nothing");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - pred[i]);
  return s / static_cast<double>(truth.size());
}

double standard_error(std::span<const double> fold_values) {
  return stats::sample_sd(fold_values) / std::sqrt(static_cast<double>(fold_values.size()));
}

RidgeCvResult fit_ridge_cv(const Eigen::MatrixXd& x, std::span<const double> y, std::vector<double> alpha_grid,
                           std::size_t k, std::uint64_t seed, const RidgeOptions& options) {
  return fit_ridge_cv(x, y, std::move(alpha_grid), make_folds(static_cast<std::size_t>(x.rows()), k, seed), options);
}

RidgeCvResult fit_ridge_cv(const Eigen::MatrixXd& x, std::span<const double> y, std::vector<double> alpha_grid,
                           const FoldPlan& folds, const RidgeOptions& options) {
  if (alpha_grid.empty()) throw Error(Errc::InvalidArgument, "empty alpha grid");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(Errc::LengthMismatch, "X rows and y length differ");
  std::sort(alpha_grid.begin(), alpha_grid.end());
  alpha_grid.erase(std::unique(alpha_grid.begin(), alpha_grid.end()), alpha_grid.end());

  const std::size_t k = folds.k();
  std::vector<std::vector<double>> mae(alpha_grid.size(), std::vector<double>(k));
  for (std::size_t f = 0; f < k; ++f) {
    const RidgePath path(take_rows(x, folds.train[f]), take(y, folds.train[f]), options);
    const Eigen::MatrixXd x_test = take_rows(x, folds.test[f]);
    const auto y_test = take(y, folds.test[f]);
    for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
      const Eigen::VectorXd pred = predict(path.solve(alpha_grid[a]), x_test);
      mae[a][f] = mean_absolute_error(y_test, std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));
    }
  }

  RidgeCvResult result;
  auto& rep = result.report;
  rep.folds = k;
  rep.alphas = alpha_grid;
  std::size_t best = 0;
  for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
    rep.alpha_mean_mae.push_back(stats::mean(mae[a]));
    if (rep.alpha_mean_mae[a] < rep.alpha_mean_mae[best]) best = a;
  }
  rep.chosen_alpha = alpha_grid[best];
  rep.fold_mae = mae[best];
  rep.mae_mean = rep.alpha_mean_mae[best];
  rep.mae_se = standard_error(rep.fold_mae);
  result.model = fit_ridge(x, y, rep.chosen_alpha, options);
  return result;
}

MeanPredictor mean_baseline(std::span<const double> y_train) {
  if (y_train.empty()) throw Error(Errc::EmptyTraining, "mean baseline needs at least one training target");
  return MeanPredictor{stats::mean(y_train)};
}

}  // namespace regress
}  // namespace mvuq
