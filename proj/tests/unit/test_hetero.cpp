#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mvuq/error.hpp"
#include "mvuq/hetero.hpp"
#include "mvuq/stats.hpp"

using namespace mvuq;
using namespace mvuq::hetero;

TEST(HeteroNll, HandValues) {
  EXPECT_DOUBLE_EQ(nll(1, 1, 1), 0.0);
  EXPECT_DOUBLE_EQ(nll(0, 1, 1), 0.5);
  EXPECT_NEAR(nll(0, 0, std::exp(1.0)), 0.5, 1e-15);
  try {
    nll(0, 0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonPositiveVariance);
  }
}

TEST(HeteroNll, MinimizedAtMeanSquaredResidual) {
  const std::vector<double> r{0.3, -1.2, 0.8, 2.0, -0.1};
  double msr = 0;
  for (double v : r) msr += v * v;
  msr /= r.size();
  auto total = [&](double var) {
    double s = 0;
    for (double v : r) s += nll(v, 0, var);
    return s;
  };
  EXPECT_LT(total(msr), total(msr * 1.01));
  EXPECT_LT(total(msr), total(msr * 0.99));
}

TEST(HeteroObjective, GradientMatchesCentralDifferences) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd z(25, 3);
  Eigen::VectorXd y(25);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = nd(gen);
  for (Eigen::Index i = 0; i < 25; ++i) y(i) = nd(gen);
  const HeteroObjective obj(z, y);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd theta(8);
    for (Eigen::Index j = 0; j < 8; ++j) theta(j) = 0.5 * nd(gen);
    const Eigen::VectorXd g = obj.gradient(theta);
    for (Eigen::Index j = 0; j < 8; ++j) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp(j) += 1e-6;
      tm(j) -= 1e-6;
      const double fd = (obj.value(tp) - obj.value(tm)) / 2e-6;
      EXPECT_NEAR(g(j), fd, 1e-4 * std::max(1.0, std::abs(fd))) << "trial " << trial << " coord " << j;
    }
  }
}

TEST(HeteroFit, ConstantVarianceRecoversMeanSquaredResidual) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(60, 2);
  std::vector<double> y(60);
  for (Eigen::Index i = 0; i < 60; ++i) {
    x(i, 0) = nd(gen);
    x(i, 1) = nd(gen);
    y[i] = 1.5 * x(i, 0) - x(i, 1) + 0.7 * nd(gen);
  }
  HeteroOptions opt;
  opt.constant_variance = true;
  opt.epochs = 300;
  const auto fit = fit_hetero(x, y, opt);
  const auto pred = predict_hetero(fit.model, x);
  double msr = 0;
  for (std::size_t i = 0; i < 60; ++i) msr += (y[i] - pred[i].mu()) * (y[i] - pred[i].mu());
  msr /= 60;
  for (const auto& p : pred) EXPECT_NEAR(p.var(), msr, 1e-6);
}

TEST(HeteroFit, HomoscedasticNoiseLevelRecovered) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  const std::size_t n = 2000;
  Eigen::MatrixXd x(n, 3);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = nd(gen);
    y[i] = x(i, 0) - 0.5 * x(i, 1) + 0.25 * x(i, 2) + 0.5 * nd(gen);
  }
  const auto fit = fit_hetero(x, y, HeteroOptions{});
  double mean_var = 0;
  for (const auto& p : predict_hetero(fit.model, x)) mean_var += p.var();
  mean_var /= n;
  EXPECT_GT(mean_var, 0.25 * 0.8);
  EXPECT_LT(mean_var, 0.25 * 1.2);
}

TEST(HeteroFit, TracksInputDependentNoise) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0, 1);
  const std::size_t n = 2000;
  Eigen::MatrixXd x(n, 2);
  std::vector<double> y(n), sigma(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = ud(gen);
    x(i, 0) = u;
    x(i, 1) = nd(gen);
    sigma[i] = 0.1 + 0.4 * u;
    y[i] = 2 * x(i, 1) + sigma[i] * nd(gen);
  }
  const auto fit = fit_hetero(x, y, HeteroOptions{});
  std::vector<double> sd_hat;
  for (const auto& p : predict_hetero(fit.model, x)) sd_hat.push_back(std::sqrt(p.var()));
  EXPECT_GT(stats::pearson(sd_hat, sigma), 0.9);
  // incumbent NLL is non-increasing
  for (std::size_t e = 1; e < fit.incumbent_nll.size(); ++e) EXPECT_LE(fit.incumbent_nll[e], fit.incumbent_nll[e - 1]);
}

TEST(HeteroPredict, ZeroHeadsAreConstant) {
  HeteroModel m;
  m.w_mu = Eigen::VectorXd::Zero(2);
  m.w_s = Eigen::VectorXd::Zero(2);
  m.b_mu = 1.25;
  m.b_s = -0.5;
  m.column_means = Eigen::RowVectorXd::Zero(2);
  m.column_sds = Eigen::RowVectorXd::Ones(2);
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, -3, 4, 100, -50;
  for (const auto& p : predict_hetero(m, x)) {
    EXPECT_EQ(p.mu(), 1.25);
    EXPECT_DOUBLE_EQ(p.var(), std::exp(-0.5));
  }
  EXPECT_THROW(predict_hetero(m, Eigen::MatrixXd::Zero(1, 3)), Error);
}

TEST(HeteroPredict, ScalarHandComputation) {
  HeteroModel m;
  m.w_mu = Eigen::VectorXd::Constant(1, 2.0);
  m.w_s = Eigen::VectorXd::Constant(1, 0.5);
  m.b_mu = -1;
  m.b_s = 0.1;
  m.column_means = Eigen::RowVectorXd::Constant(1, 3.0);
  m.column_sds = Eigen::RowVectorXd::Constant(1, 2.0);
  Eigen::MatrixXd x(2, 1);
  x << 7, 7;
  const auto p = predict_hetero(m, x);
  EXPECT_DOUBLE_EQ(p[0].mu(), 2.0 * 2.0 - 1);
  EXPECT_DOUBLE_EQ(p[0].var(), std::exp(0.5 * 2.0 + 0.1));
  EXPECT_EQ(p[0].mu(), p[1].mu());
  EXPECT_EQ(p[0].var(), p[1].var());
}

TEST(HeteroFit, DuplicatingTrainingSetLeavesPredictionsUnchanged) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(40, 2);
  std::vector<double> y(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    x(i, 0) = nd(gen);
    x(i, 1) = nd(gen);
    y[i] = x(i, 0) + (0.2 + std::abs(x(i, 1))) * nd(gen);
  }
  Eigen::MatrixXd x2(80, 2);
  x2 << x, x;
  std::vector<double> y2 = y;
  y2.insert(y2.end(), y.begin(), y.end());
  HeteroOptions opt;
  opt.epochs = 500;
  const auto a = predict_hetero(fit_hetero(x, y, opt).model, x);
  const auto b = predict_hetero(fit_hetero(x2, y2, opt).model, x);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_NEAR(a[i].mu(), b[i].mu(), 1e-6);
    EXPECT_NEAR(a[i].var(), b[i].var(), 1e-6 * a[i].var());
  }
}

TEST(HeteroFit, VarianceStaysPositive) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(10, 12);
  std::vector<double> y(10);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(gen);
  for (auto& v : y) v = nd(gen);
  const auto fit = fit_hetero(x, y, HeteroOptions{});
  for (const auto& p : predict_hetero(fit.model, x)) EXPECT_GT(p.var(), 0.0);
  Eigen::MatrixXd far = Eigen::MatrixXd::Constant(1, 12, 1e3);
  EXPECT_GT(predict_hetero(fit.model, far)[0].var(), 0.0);
}
