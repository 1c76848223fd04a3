// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvuq/bayes.hpp"
#include "mvuq/diagnostics.hpp"
#include "mvuq/evaluate.hpp"
#include "mvuq/features.hpp"
#include "mvuq/fmx.hpp"
#include "mvuq/folds.hpp"
#include "mvuq/hetero.hpp"
#include "mvuq/kriging.hpp"
#include "mvuq/metrics.hpp"
#include "mvuq/parallel.hpp"
#include "mvuq/pipeline.hpp"
#include "mvuq/random.hpp"
#include "mvuq/raster.hpp"
#include "mvuq/ridge.hpp"
#include "mvuq/stats.hpp"
#include "mvuq/synthetic.hpp"
#include "mvuq/tensor_io.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

namespace fs = std::filesystem;
using namespace mvuq;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d, double shift = 0.0) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen) + shift;
  return m;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// ---------------------------------------------------------------------------

void crps_correctness(Outcome& o) {
  double worst = 0.0;
  int cases = 0;
  for (double mu : {-2.0, 0.0, 2.0}) {
    for (double sigma : {0.1, 1.0, 5.0}) {
      for (int y = -3; y <= 3; ++y) {
        worst = std::max(worst, std::abs(metrics::crps_gaussian(mu, sigma, y) - oracle::crps_quadrature(mu, sigma, y)));
        ++cases;
      }
    }
  }
  o.require(cases == 63 && worst < 1e-6, "closed form vs quadrature");
  o.detail << cases << " cases, max |d| " << fmt(worst) << "; ";

  // m = 1e5 draws: stratified normal quantiles, plus i.i.d. draws for reference
  const std::size_t m = 100000;
  std::vector<double> z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = stats::normal_quantile((static_cast<double>(i) + 0.5) / m);
  double worst_strat = 0.0, worst_iid = 0.0;
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  std::vector<double> x(m), iid(m);
  for (double mu : {-2.0, 0.0, 2.0}) {
    for (double sigma : {0.1, 1.0, 5.0}) {
      for (std::size_t i = 0; i < m; ++i) {
        x[i] = mu + sigma * z[i];
        iid[i] = mu + sigma * nd(gen);
      }
      std::sort(iid.begin(), iid.end());
      for (int y = -3; y <= 3; ++y) {
        const double exact = metrics::crps_gaussian(mu, sigma, y);
        worst_strat = std::max(worst_strat, std::abs(metrics::crps_samples(x, y) - exact));
        worst_iid = std::max(worst_iid, std::abs(metrics::crps_samples(iid, y) - exact));
      }
    }
  }
  o.require(worst_strat < 1e-2, "sample CRPS at m=1e5");
  o.detail << "sample m=1e5 max |d| " << fmt(worst_strat) << " (stratified), " << fmt(worst_iid) << " (iid, informational)";
}

void conjugate_exactness(Outcome& o) {
  Eigen::MatrixXd x1(1, 1);
  x1 << 1;
  bayes::ConjugateOptions scalar;
  scalar.fit_intercept = false;
  const auto post = bayes::fit_blr_conjugate(x1, std::vector<double>{1.0}, scalar);
  const auto pred = bayes::predict_blr(post, x1);
  o.require(std::abs(pred[0].mu() - 0.5) < 1e-10 && std::abs(pred[0].var() - 1.5) < 1e-10, "scalar predictive");
  o.detail << "scalar predictive N(" << pred[0].mu() << ", " << pred[0].var() << "); ";

  struct Case {
    int n, d;
    bool intercept;
    int fine;
  };
  const Case cases[] = {{8, 2, true, 61}, {10, 3, false, 61}, {6, 3, true, 31}};
  double worst = 0.0;
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd;
  for (const auto& c : cases) {
    const Eigen::MatrixXd x = gaussian_matrix(gen, c.n, c.d);
    std::vector<double> y(c.n);
    for (int i = 0; i < c.n; ++i) y[i] = x.row(i).sum() * 0.7 + 1.0 + 0.5 * nd(gen);
    bayes::ConjugateOptions opt;
    opt.c = 1.5;
    opt.sigma2 = 0.4;
    opt.fit_intercept = c.intercept;
    const auto p = bayes::fit_blr_conjugate(x, y, opt);
    const int k = c.d + (c.intercept ? 1 : 0);
    Eigen::VectorXd prior_var = Eigen::VectorXd::Constant(k, opt.c);
    if (c.intercept) prior_var(k - 1) = opt.intercept_sd * opt.intercept_sd;
    const auto logd = [&](const Eigen::VectorXd& t) {
      double s = 0;
      for (int i = 0; i < c.n; ++i) {
        double f = x.row(i).dot(t.head(c.d));
        if (c.intercept) f += t(c.d);
        s += (y[i] - f) * (y[i] - f);
      }
      return -0.5 * s / opt.sigma2 - 0.5 * (t.array().square() / prior_var.array()).sum();
    };
    const auto q = oracle::grid_moments(logd, Eigen::VectorXd::Constant(k, -12), Eigen::VectorXd::Constant(k, 12), 25,
                                        c.fine);
    for (int i = 0; i < k; ++i) {
      const double scale = std::max(std::abs(q.mean(i)), std::sqrt(q.cov(i, i)));
      worst = std::max(worst, std::abs(p.mean(i) - q.mean(i)) / scale);
      for (int j = 0; j < k; ++j) {
        worst = std::max(worst, std::abs(p.cov(i, j) - q.cov(i, j)) / std::sqrt(q.cov(i, i) * q.cov(j, j)));
      }
    }
  }
  o.require(worst < 0.02, "posterior moments vs quadrature");
  o.detail << "3 instances (3-D and 4-D grids), max relative error " << fmt(worst);
}

void mcmc_validity(Outcome& o) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  {
    const Eigen::MatrixXd x = gaussian_matrix(gen, 25, 3);
    std::vector<double> y(25);
    for (int i = 0; i < 25; ++i) y[i] = x(i, 0) - 0.5 * x(i, 2) + 0.3 + nd(gen);
    bayes::McmcOptions mo;
    mo.seed = 9;
    mo.pin_scales = true;
    mo.fixed_sigma2 = 1.0;
    mo.standardize = false;
    const auto draws = bayes::fit_blr_mcmc(x, y, bayes::BlrPriorConfig::half_t(3.0), mo);
    bayes::ConjugateOptions co;
    co.sigma2 = 1.0;
    const auto post = bayes::fit_blr_conjugate(x, y, co);
    double worst_z = 0.0;
    for (Eigen::Index j = 0; j < 4; ++j) {
      diagnostics::Chains ch;
      for (std::size_t c = 0; c < draws.chains; ++c) ch.push_back(draws.chain_series(static_cast<std::size_t>(j), c));
      const double ess = diagnostics::effective_sample_size(ch);
      const double se = std::sqrt(post.cov(j, j) / ess);
      worst_z = std::max(worst_z, std::abs(draws.coefficients.col(j).mean() - post.mean(j)) / se);
    }
    o.require(worst_z < 3.0, "pinned scales vs conjugate");
    o.detail << "pinned-vs-conjugate max |z| " << fmt(worst_z) << "; ";
  }
  const Eigen::MatrixXd x = gaussian_matrix(gen, 200, 50);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(50);
  beta(0) = 5;
  beta(1) = -5;
  beta(2) = 5;
  std::vector<double> y(200);
  for (int i = 0; i < 200; ++i) y[i] = x.row(i).dot(beta) + nd(gen);
  bayes::McmcOptions mo;  // 4 chains x 1500 draws, 500 warm-up
  mo.seed = 1;
  const auto draws = bayes::fit_blr_mcmc(x, y, bayes::BlrPriorConfig::half_t(3.0), mo);
  double worst_null = 0.0, worst_active = 0.0;
  for (Eigen::Index j = 0; j < 50; ++j) {
    std::vector<double> col(draws.coefficients.col(j).data(), draws.coefficients.col(j).data() + draws.total());
    std::nth_element(col.begin(), col.begin() + col.size() / 2, col.end());
    const double med = col[col.size() / 2];
    if (j < 3) worst_active = std::max(worst_active, std::abs(med - beta(j)));
    else worst_null = std::max(worst_null, std::abs(med));
  }
  o.require(worst_null <= 0.15 && worst_active <= 0.5, "sparse recovery");
  const auto rep = diagnostics::diagnose(draws);
  o.require(rep.max_rhat < 1.05, "split R-hat");
  o.detail << "sparse recovery null max " << fmt(worst_null) << ", active max " << fmt(worst_active)
           << "; max split-Rhat " << fmt(rep.max_rhat) << " (4x1500, warm-up 500)";
}

void calibration(Outcome& o) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  // coverage is conditional on the training set: an error e in sigma-hat
  // moves it by about 0.23 e, so n_train must keep sd(e) = 1/sqrt(2 n_train)
  // well inside the +-0.02 band (0.016 at 2000 vs 0.05 at 200)
  const int d = 5, n_train = 2000, n_test = 2000;
  const double sigma = 0.7;
  Eigen::VectorXd w(d);
  for (int j = 0; j < d; ++j) w(j) = nd(gen);  // w ~ N(0, c) with c = 1
  const double b = 5.0 * nd(gen);             // b ~ N(0, 5^2)
  const Eigen::MatrixXd xtr = gaussian_matrix(gen, n_train, d), xte = gaussian_matrix(gen, n_test, d);
  std::vector<double> ytr(n_train), yte(n_test);
  for (int i = 0; i < n_train; ++i) ytr[i] = xtr.row(i).dot(w) + b + sigma * nd(gen);
  for (int i = 0; i < n_test; ++i) yte[i] = xte.row(i).dot(w) + b + sigma * nd(gen);

  bayes::ConjugateOptions co;
  co.sigma2 = sigma * sigma;
  const auto conj = metrics::coverage_and_length(bayes::predict_blr(bayes::fit_blr_conjugate(xtr, ytr, co), xte), yte);
  bayes::McmcOptions mo;
  mo.seed = 4;
  mo.standardize = false;
  const auto draws = bayes::fit_blr_mcmc(xtr, ytr, bayes::BlrPriorConfig::gaussian_ridge(1.0), mo);
  const auto mcmc = metrics::coverage_and_length(bayes::predict_blr(draws, xte, 5), yte);
  o.require(conj.coverage >= 0.93 && conj.coverage <= 0.97, "conjugate coverage");
  o.require(mcmc.coverage >= 0.93 && mcmc.coverage <= 0.97, "MCMC coverage");
  o.detail << "95% coverage on 2000 held-out points: conjugate " << fmt(conj.coverage) << ", MCMC "
           << fmt(mcmc.coverage);
}

void hetero_recovery(Outcome& o) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0, 1);
  const std::size_t n = 2000;
  Eigen::MatrixXd x(n, 2);
  std::vector<double> y(n), sig(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = ud(gen);
    x(i, 0) = u;
    x(i, 1) = nd(gen);
    sig[i] = 0.1 + 0.4 * u;
    y[i] = 2 * x(i, 1) - 1 + sig[i] * nd(gen);
  }
  const auto fit = hetero::fit_hetero(x, y);
  std::vector<double> sd_hat;
  for (const auto& p : hetero::predict_hetero(fit.model, x)) sd_hat.push_back(std::sqrt(p.var()));
  const double corr = stats::pearson(sd_hat, sig);
  o.require(corr > 0.9, "sigma correlation");

  Eigen::MatrixXd z = gaussian_matrix(gen, 30, 3);
  Eigen::VectorXd yy(30);
  for (int i = 0; i < 30; ++i) yy(i) = nd(gen);
  const hetero::HeteroObjective obj(z, yy);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd th(8);
    for (int j = 0; j < 8; ++j) th(j) = 0.5 * nd(gen);
    const Eigen::VectorXd g = obj.gradient(th);
    for (int j = 0; j < 8; ++j) {
      Eigen::VectorXd a = th, b = th;
      a(j) += 1e-6;
      b(j) -= 1e-6;
      const double fd = (obj.value(a) - obj.value(b)) / 2e-6;
      worst = std::max(worst, std::abs(g(j) - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  o.require(worst < 1e-4, "finite-difference gradients");

  hetero::HeteroOptions cv;
  cv.constant_variance = true;
  cv.epochs = 300;
  Eigen::MatrixXd xc = x.topRows(100);
  std::vector<double> yc(y.begin(), y.begin() + 100);
  const auto cfit = hetero::fit_hetero(xc, yc, cv);
  const auto preds = hetero::predict_hetero(cfit.model, xc);
  double msr = 0;
  for (int i = 0; i < 100; ++i) msr += (yc[i] - preds[i].mu()) * (yc[i] - preds[i].mu());
  msr /= 100;
  const double dv = std::abs(preds[0].var() - msr);
  o.require(dv < 1e-6, "constant variance equals mean squared residual");
  o.detail << "corr(sigma_hat, sigma) " << fmt(corr) << "; gradient max rel err " << fmt(worst)
           << "; constant-variance |var - MSR| " << fmt(dv);
}

void blr_vs_hr(Outcome& o) {
  int wins = 0, nll_w = 0, crps_w = 0, cov_w = 0;
  const int reps = 10;
  for (int r = 0; r < reps; ++r) {
    std::mt19937_64 gen(600 + r);
    std::normal_distribution<double> nd;
    const int n = 30, d = 10, n_test = 300;
    Eigen::VectorXd beta(d);
    for (int j = 0; j < d; ++j) beta(j) = 0.5 * nd(gen);
    const Eigen::MatrixXd xtr = gaussian_matrix(gen, n, d);
    const Eigen::MatrixXd xte = gaussian_matrix(gen, n_test, d, 1.5);  // shifted away from the training design
    std::vector<double> ytr(n), yte(n_test);
    for (int i = 0; i < n; ++i) ytr[i] = xtr.row(i).dot(beta) + 0.5 * nd(gen);
    for (int i = 0; i < n_test; ++i) yte[i] = xte.row(i).dot(beta) + 0.5 * nd(gen);

    hetero::HeteroOptions ho;
    ho.seed = static_cast<std::uint64_t>(r);
    const auto hr = metrics::score("hetero", hetero::predict_hetero(hetero::fit_hetero(xtr, ytr, ho).model, xte), yte);
    bayes::McmcOptions mo;
    mo.seed = static_cast<std::uint64_t>(r);
    const auto draws = bayes::fit_blr_mcmc(xtr, ytr, bayes::BlrPriorConfig::half_t(3.0), mo);
    const auto blr = metrics::score("blr", bayes::predict_blr(draws, xte, static_cast<std::uint64_t>(r)), yte);
    const bool a = blr.nll < hr.nll, b = blr.crps < hr.crps, c = blr.interval.coverage > hr.interval.coverage;
    nll_w += a;
    crps_w += b;
    cov_w += c;
    wins += a && b && c;
  }
  o.require(wins >= 8, "BLR better on all three metrics in >= 8/10 replicates");
  o.detail << "BLR better on NLL, CRPS and coverage jointly in " << wins << "/10 (NLL " << nll_w << ", CRPS " << crps_w
           << ", coverage " << cov_w << ")";
}

void fused_vs_single(Outcome& o) {
  int worst = 5;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    synth::PlantedConfig pc;
    pc.seed = seed;
    const auto data = synth::make_planted(pc);
    std::vector<eval::ViewSet> sets;
    std::vector<features::FeatureMatrix> views;
    const auto presets = raster::ViewSpec::presets();
    for (std::size_t v = 0; v < presets.size(); ++v) {
      std::vector<raster::ViewImage> imgs;
      for (const auto& r : data.rasters) imgs.push_back(raster::compose_view(r, presets[v]));
      const features::RandomConvFeaturizer fz(features::ConvParams{64, 3, 0, Rng::mix(seed, v)}, &imgs.front());
      auto fm = features::extract_features(imgs, data.ids, fz);
      views.emplace_back(fm.values(), fm.row_ids(), presets[v].name, fm.provenance());
      sets.push_back({presets[v].name, views.back()});
    }
    sets.push_back({"fused", features::fuse_views(views)});
    eval::EvalOptions opt;
    opt.methods = {eval::Method::RidgeCv};
    opt.seed = seed;
    const auto rep = eval::evaluate(sets, data.y, opt);
    int folds_won = 0;
    const auto& fused = rep.results.back();
    for (std::size_t f = 0; f < rep.folds; ++f) {
      bool all = true;
      for (std::size_t s = 0; s + 1 < rep.results.size(); ++s) all &= fused.fold_mae[f] < rep.results[s].fold_mae[f];
      folds_won += all;
    }
    double best_single = 1e300;
    for (std::size_t s = 0; s + 1 < rep.results.size(); ++s) best_single = std::min(best_single, rep.results[s].mae_mean);
    per_seed << "seed " << seed << ": " << folds_won << "/5 (fused MAE " << fmt(fused.mae_mean) << ", best single "
             << fmt(best_single) << ") ";
    worst = std::min(worst, folds_won);
  }
  o.require(worst >= 4, "fused strictly below every single view in >= 4/5 folds");
  o.detail << per_seed.str();
}

void ridge_correctness(Outcome& o) {
  int agree = 0;
  double worst_grad = 0.0;
  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd;
  const std::vector<double> grid{1e-4, 1e-3, 1e-2, 0.1, 1, 10, 100, 1e3, 1e4};
  for (int inst = 0; inst < 10; ++inst) {
    const int n = 30 + 7 * inst, d = 2 + inst % 6;
    const Eigen::MatrixXd x = gaussian_matrix(gen, n, d);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = x.row(i).sum() * 0.3 + (1.0 + inst % 3) * nd(gen);
    const auto folds = make_folds(n, 5, inst);
    const auto r = regress::fit_ridge_cv(x, y, grid, folds);
    double best = 1e300, best_a = -1;
    for (double a : grid) {
      double total = 0;
      for (std::size_t k = 0; k < folds.k(); ++k) {
        Eigen::MatrixXd xt(folds.train[k].size(), d);
        std::vector<double> yt;
        for (std::size_t i = 0; i < folds.train[k].size(); ++i) {
          xt.row(i) = x.row(folds.train[k][i]);
          yt.push_back(y[folds.train[k][i]]);
        }
        Eigen::VectorXd w;
        double b;
        oracle::ridge_normal_equations(xt, yt, a, w, b);
        double s = 0;
        for (std::size_t i : folds.test[k]) s += std::abs(x.row(i).dot(w) + b - y[i]);
        total += s / folds.test[k].size();
      }
      if (total / folds.k() < best) {
        best = total / folds.k();
        best_a = a;
      }
    }
    agree += r.report.chosen_alpha == best_a;

    for (double a : {0.0, 0.5, 20.0}) {
      const auto m = regress::fit_ridge(x, y, a);
      const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
      Eigen::VectorXd yc = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
      yc.array() -= yc.mean();
      const Eigen::VectorXd w = m.raw_weights();
      worst_grad = std::max(worst_grad, (2 * xc.transpose() * (xc * w - yc) + 2 * a * w).cwiseAbs().maxCoeff());
    }
  }
  o.require(agree == 10, "CV alpha equals oracle grid search");
  o.require(worst_grad < 1e-8, "gradient condition");
  o.detail << "alpha agreement " << agree << "/10; max gradient " << fmt(worst_grad);
}

raster::BandRaster random_raster(std::mt19937_64& gen, std::size_t w, std::size_t h) {
  std::uniform_int_distribution<int> dn(0, 4095);
  std::vector<std::vector<std::uint16_t>> data;
  for (std::size_t b = 0; b < raster::sentinel2_bands().size(); ++b) {
    std::vector<std::uint16_t> g(w * h);
    for (auto& v : g) v = static_cast<std::uint16_t>(dn(gen));
    data.push_back(std::move(g));
  }
  return raster::BandRaster(w, h, raster::sentinel2_bands(), std::move(data));
}

void raster_exactness(Outcome& o) {
  using raster::normalize_value;
  const bool fixed = normalize_value(0) == 0.0 && normalize_value(3000) == 255.0 && normalize_value(4500) == 255.0 &&
                     normalize_value(1500) == 127.5;
  o.require(fixed, "normalization fixed points");

  testing_support::TempDir dir;
  std::mt19937_64 gen(9);
  const auto r = random_raster(gen, 7, 5);
  raster::save_raster(dir / "a.btsr", r);
  raster::save_raster(dir / "b.btsr", raster::load_raster(dir / "a.btsr"));
  const bool btsr = read_file_bytes(dir / "a.btsr") == read_file_bytes(dir / "b.btsr");
  o.require(btsr, "BTSR round trip");

  std::normal_distribution<double> nd;
  std::vector<double> payload(6 * 4);
  for (auto& v : payload) v = nd(gen);
  features::write_fmx(dir / "a.fmx", 6, 4, payload, features::FmxManifest{{"a", "b", "c", "d", "e", "f"}, "v", "", "", {}});
  features::save_features(dir / "b.fmx", features::import_features(dir / "a.fmx"));
  const bool fmx = read_file_bytes(dir / "a.fmx") == read_file_bytes(dir / "b.fmx");
  o.require(fmx, "FMX round trip");

  std::uniform_int_distribution<std::size_t> size(1, 9);
  const auto views = raster::ViewSpec::presets();
  int ok = 0;
  for (int t = 0; t < 200; ++t) {
    const auto rr = random_raster(gen, size(gen), size(gen));
    const auto& spec = views[static_cast<std::size_t>(t) % views.size()];
    const auto base = raster::compose_view(rr, spec);
    std::vector<std::vector<std::uint16_t>> flipped;
    for (const auto& g : rr.data()) {
      std::vector<std::uint16_t> out(g.size());
      for (std::size_t yy = 0; yy < rr.height(); ++yy) {
        for (std::size_t xx = 0; xx < rr.width(); ++xx) out[yy * rr.width() + xx] = g[yy * rr.width() + rr.width() - 1 - xx];
      }
      flipped.push_back(std::move(out));
    }
    const auto fv = raster::compose_view(raster::BandRaster(rr.width(), rr.height(), rr.bands(), flipped), spec);
    bool same = true;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      for (std::size_t yy = 0; yy < rr.height(); ++yy) {
        for (std::size_t xx = 0; xx < rr.width(); ++xx) same &= fv.at(ch, yy, xx) == base.at(ch, yy, rr.width() - 1 - xx);
      }
    }
    ok += same;
  }
  o.require(ok == 200, "flip equivariance");
  o.detail << "fixed points " << (fixed ? "exact" : "wrong") << "; BTSR " << (btsr ? "identical" : "differs") << "; FMX "
           << (fmx ? "identical" : "differs") << "; flip-equivariant " << ok << "/200";
}

void kriging_checks(Outcome& o) {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0, 0.5);
  std::normal_distribution<double> nd;
  std::vector<double> lon(60), lat(60), v(60);
  for (int i = 0; i < 60; ++i) {
    lon[i] = 30 + u(gen);
    lat[i] = -1 + u(gen);
    v[i] = nd(gen);
  }
  const auto f = geo::ScatterField::make(lon, lat, v);
  const geo::VariogramModel m{0.0, 1.0, 12.0, false};
  double interp = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) interp = std::max(interp, std::abs(geo::krige_point(f, m, f.lon[i], f.lat[i]).estimate - f.values[i]));
  for (int t = 0; t < 100; ++t) {
    const auto p = geo::krige_point(f, m, 29.9 + 0.7 * u(gen) / 0.5, -1.1 + 0.7 * u(gen) / 0.5);
    double s = 0;
    for (double w : p.weights) s += w;
    wsum = std::max(wsum, std::abs(s - 1));
  }
  const auto sym = geo::ScatterField::make({30.1, 29.9, 30.0, 30.0}, {0.0, 0.0, 0.1, -0.1}, {1, 2, 3, 4});
  double sym_err = 0.0;
  for (double w : geo::krige_point(sym, m, 30.0, 0.0).weights) sym_err = std::max(sym_err, std::abs(w - 0.25));
  o.require(interp < 1e-8, "exact interpolation");
  o.require(wsum < 1e-10, "weights sum to one");
  o.require(sym_err < 1e-8, "symmetric weights");
  o.detail << "interpolation max |d| " << fmt(interp) << "; |sum w - 1| max " << fmt(wsum) << "; symmetric weight error "
           << fmt(sym_err);
}

void determinism(Outcome& o) {
  testing_support::TempDir dir;
  synth::PlantedConfig pc;
  pc.n = 60;
  pc.width = pc.height = 10;
  pc.seed = 11;
  synth::write_planted(dir.path(), synth::make_planted(pc));
  write_text_file(dir / "run.toml", R"([run]
seed = 11
[inputs]
rasters = "rasters"
targets = "targets.csv"
[featurize]
filters = 16
[models]
list = ["mean", "ridge_cv", "hetero", "blr_conjugate", "blr_mcmc"]
[hetero]
epochs = 300
[blr]
chains = 2
draws = 300
warmup = 100
[krige]
enabled = true
res_km = 25
)");
  const auto cfg = pipeline::load_config(dir / "run.toml");
  set_max_jobs(1);
  const auto first = read_file_bytes(pipeline::run(cfg).report_json);
  set_max_jobs(4);
  const auto second = read_file_bytes(pipeline::run(cfg).report_json);
  const bool same = first == second && !first.empty();
  o.require(same, "report.json bytes identical");
  o.detail << "two runs (1 and 4 workers): report.json " << first.size() << " bytes, "
           << (same ? "identical" : "different");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0 = no stated budget
    std::function<void(Outcome&)> fn;
  };
  const std::vector<Criterion> all = {
      {1, "CRPS correctness", 10, crps_correctness},
      {2, "conjugate BLR exactness", 30, conjugate_exactness},
      {3, "MCMC validity", 300, mcmc_validity},
      {4, "predictive calibration", 120, calibration},
      {5, "heteroscedastic recovery", 0, hetero_recovery},
      {6, "BLR vs HR ordering", 0, blr_vs_hr},
      {7, "fused vs single view", 0, fused_vs_single},
      {8, "ridge correctness", 0, ridge_correctness},
      {9, "raster exactness", 0, raster_exactness},
      {10, "kriging", 0, kriging_checks},
      {11, "determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail << " [over time budget " << c.budget_s << " s]";
    }
    failed += !o.pass;
    std::printf("criterion %2d %-26s %s  (%.1f s) %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
