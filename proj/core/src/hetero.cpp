#include "mvuq/hetero.hpp"

#include <algorithm>
#include <cmath>

#include "mvuq/error.hpp"
#include "mvuq/features.hpp"
#include "mvuq/metrics.hpp"
#include "mvuq/random.hpp"
#include "mvuq/ridge.hpp"

namespace mvuq::hetero {
namespace {

struct Heads {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_var;
};

Heads evaluate_heads(const Eigen::MatrixXd& z, const Eigen::VectorXd& theta) {
  const auto d = z.cols();
  Heads h;
  h.mu = (z * theta.segment(0, d)).array() + theta(d);
  h.log_var = (z * theta.segment(d + 1, d)).array() + theta(2 * d + 1);
  return h;
}

}  // namespace

double nll(double y, double mu, double var) { return metrics::gaussian_nll(y, mu, var); }

HeteroObjective::HeteroObjective(Eigen::MatrixXd z, Eigen::VectorXd y) : z_(std::move(z)), y_(std::move(y)) {
  if (z_.rows() != y_.size()) throw Error(Errc::LengthMismatch, "design rows and targets differ");
}

double HeteroObjective::value(const Eigen::VectorXd& theta) const {
  const Heads h = evaluate_heads(z_, theta);
  double total = 0.0;
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    const double var = std::max(std::exp(h.log_var(i)), kVarianceFloor);
    const double r = y_(i) - h.mu(i);
    total += r * r / (2.0 * var) + 0.5 * std::log(var);
  }
  return total / static_cast<double>(y_.size());
}

Eigen::VectorXd HeteroObjective::gradient(const Eigen::VectorXd& theta) const {
  const auto d = z_.cols();
  const Heads h = evaluate_heads(z_, theta);
  Eigen::VectorXd g_mu(y_.size()), g_s(y_.size());
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    const double raw = std::exp(h.log_var(i));
    const double var = std::max(raw, kVarianceFloor);
    const double r = y_(i) - h.mu(i);
    g_mu(i) = -r / var;
    g_s(i) = raw > kVarianceFloor ? 0.5 * (1.0 - r * r / var) : 0.0;
  }
  const double inv_n = 1.0 / static_cast<double>(y_.size());
  Eigen::VectorXd grad(2 * d + 2);
  grad.segment(0, d) = z_.transpose() * g_mu * inv_n;
  grad(d) = g_mu.sum() * inv_n;
  grad.segment(d + 1, d) = z_.transpose() * g_s * inv_n;
  grad(2 * d + 1) = g_s.sum() * inv_n;
  return grad;
}

Eigen::VectorXd pack(const HeteroModel& m) {
  const auto d = m.w_mu.size();
  Eigen::VectorXd theta(2 * d + 2);
  theta << m.w_mu, m.b_mu, m.w_s, m.b_s;
  return theta;
}

void unpack(const Eigen::VectorXd& theta, HeteroModel& m) {
  const auto d = (theta.size() - 2) / 2;
  m.w_mu = theta.segment(0, d);
  m.b_mu = theta(d);
  m.w_s = theta.segment(d + 1, d);
  m.b_s = theta(2 * d + 1);
}

HeteroFit fit_hetero(const Eigen::MatrixXd& x, std::span<const double> y, const HeteroOptions& options) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (static_cast<std::size_t>(n) != y.size()) throw Error(Errc::LengthMismatch, "X rows and y length differ");
  if (n < 2) throw Error(Errc::EmptyTraining, "heteroscedastic fit needs at least 2 rows");
  if (!(options.lr > 0.0)) throw Error(Errc::InvalidArgument, "learning rate must be positive");

  HeteroFit fit;
  if (n < d) fit.warnings.push_back("fewer rows than features (" + std::to_string(n) + " < " + std::to_string(d) + ")");

  const auto standardizer = features::ColumnStandardizer::fit(x);
  Eigen::MatrixXd z = standardizer.apply(x);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const HeteroObjective objective(z, yv);

  HeteroModel& model = fit.model;
  model.column_means = standardizer.means();
  model.column_sds = standardizer.sds();

  // warm start
  const auto ridge = regress::fit_ridge(z, y, options.warm_start_alpha * static_cast<double>(n));
  model.w_mu = ridge.raw_weights();
  model.b_mu = ridge.b;
  const Eigen::VectorXd resid = yv - ((z * model.w_mu).array() + model.b_mu).matrix();
  const double msr = std::max(resid.squaredNorm() / static_cast<double>(n), kVarianceFloor);
  model.b_s = std::log(msr);
  model.w_s = Eigen::VectorXd::Zero(d);
  if (!options.constant_variance) {
    Rng rng(options.seed);
    for (Eigen::Index j = 0; j < d; ++j) model.w_s(j) = 1e-3 * rng.normal();
  }

  auto profile_variance = [&](Eigen::VectorXd& theta) {
    const Eigen::VectorXd r = yv - ((z * theta.segment(0, d)).array() + theta(d)).matrix();
    theta(2 * d + 1) = std::log(std::max(r.squaredNorm() / static_cast<double>(n), kVarianceFloor));
  };

  Eigen::VectorXd theta = pack(model);
  if (options.constant_variance) profile_variance(theta);
  Eigen::VectorXd best_theta = theta;
  double best = objective.value(theta);
  if (!std::isfinite(best)) throw Error(Errc::Diverged, "initial NLL is not finite");
  fit.best_nll = best;

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
  std::size_t stagnant = 0;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    Eigen::VectorXd g = objective.gradient(theta);
    if (options.constant_variance) {
      g.segment(d + 1, d + 1).setZero();
    }
    m1 = beta1 * m1 + (1.0 - beta1) * g;
    m2 = beta2 * m2 + (1.0 - beta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
    theta.array() -= options.lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
    if (options.constant_variance) profile_variance(theta);

    const double value = objective.value(theta);
    fit.epochs_run = epoch;
    if (!std::isfinite(value)) throw Error(Errc::Diverged, "NLL became non-finite at epoch " + std::to_string(epoch));
    if (value < best) {
      best = value;
      best_theta = theta;
      fit.best_epoch = epoch;
      stagnant = 0;
    } else if (++stagnant >= options.patience) {
      fit.incumbent_nll.push_back(best);
      break;
    }
    fit.incumbent_nll.push_back(best);
  }

  unpack(best_theta, model);
  fit.best_nll = best;
  const Eigen::VectorXd log_var = (z * model.w_s).array() + model.b_s;
  if (log_var.minCoeff() < std::log(kVarianceFloor)) {
    fit.variance_floor_hit = true;
    fit.warnings.push_back("VarianceCollapse: predicted variance fell below 1e-12 on training rows; floor applied");
  }
  return fit;
}

std::vector<PredictiveDistribution> predict_hetero(const HeteroModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.w_mu.size()) {
    throw Error(Errc::DimensionMismatch, "model expects " + std::to_string(model.w_mu.size()) + " features, got " +
                                             std::to_string(x.cols()));
  }
  const Eigen::MatrixXd z = (x.rowwise() - model.column_means).array().rowwise() / model.column_sds.array();
  const Eigen::VectorXd mu = (z * model.w_mu).array() + model.b_mu;
  const Eigen::VectorXd log_var = (z * model.w_s).array() + model.b_s;
  std::vector<PredictiveDistribution> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.push_back(PredictiveDistribution::gaussian(mu(i), std::max(std::exp(log_var(i)), kVarianceFloor)));
  }
  return out;
}

}  // namespace mvuq::hetero
