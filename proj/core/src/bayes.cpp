#include "mvuq/bayes.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mvuq/diagnostics.hpp"
#include "mvuq/error.hpp"
#include "mvuq/features.hpp"
#include "mvuq/parallel.hpp"
#include "mvuq/random.hpp"
#include "mvuq/stats.hpp"

namespace mvuq::bayes {
namespace {

using nlohmann::json;

// Prior variances are kept inside this band on the standardized scale so a
// collapsing local scale cannot produce an infinite precision.
constexpr double kMinPriorVar = 1e-14;
constexpr double kMaxPriorVar = 1e14;

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd xt(x.rows(), x.cols() + 1);
  xt.leftCols(x.cols()) = x;
  xt.col(x.cols()).setOnes();
  return xt;
}

/// State of one chain on the standardized scale.
struct ChainState {
  Eigen::VectorXd theta;  // [w, b]
  Eigen::VectorXd lambda2;
  Eigen::VectorXd aux;    // a_j
  double tau2 = 1.0;
  double xi = 1.0;
  double sigma2 = 1.0;
};

class GibbsChain {
 public:
  GibbsChain(const Eigen::MatrixXd& xt, const Eigen::VectorXd& y, const BlrPriorConfig& prior,
             const McmcOptions& options, std::uint64_t stream)
      : xt_(xt), y_(y), prior_(prior), options_(options), rng_(options.seed, stream) {
    n_ = xt_.rows();
    p_ = xt_.cols();
    d_ = p_ - 1;
    gram_ = xt_.transpose() * xt_;
    xty_ = xt_.transpose() * y_;
    low_rank_ = options.weight_sampler == WeightSampler::LowRank ||
                (options.weight_sampler == WeightSampler::Auto && p_ > n_);
    state_.theta = Eigen::VectorXd::Zero(p_);
    state_.lambda2 = Eigen::VectorXd::Ones(d_);
    state_.aux = Eigen::VectorXd::Ones(d_);
    state_.tau2 = prior.tau_scale * prior.tau_scale;
    state_.xi = 1.0;
    state_.sigma2 = options.fixed_sigma2.value_or(std::max(stats::variance(std::span<const double>(y.data(), y.size())), 1e-8));
  }

  const ChainState& state() const { return state_; }

  void step() {
    draw_weights();
    if (!options_.fixed_sigma2) draw_sigma2();
    if (prior_.kind != PriorKind::GaussianRidge && !options_.pin_scales) draw_scales();
  }

 private:
  Eigen::VectorXd prior_variances() const {
    Eigen::VectorXd v(p_);
    for (Eigen::Index j = 0; j < d_; ++j) {
      double var = 1.0;
      switch (prior_.kind) {
        case PriorKind::GaussianRidge:
          var = prior_.c;
          break;
        case PriorKind::HalfT:
          var = options_.pin_scales ? 1.0 : state_.lambda2(j) * state_.tau2;
          break;
        case PriorKind::RegularizedHorseshoe: {
          const double local = options_.pin_scales ? 1.0 : state_.lambda2(j) * state_.tau2;
          const double slab2 = prior_.slab_scale * prior_.slab_scale;
          var = 1.0 / (1.0 / local + 1.0 / slab2);
          break;
        }
      }
      v(j) = std::clamp(var, kMinPriorVar, kMaxPriorVar);
    }
    v(d_) = prior_.intercept_sd * prior_.intercept_sd;
    return v;
  }

  Eigen::VectorXd standard_normals(Eigen::Index k) {
    Eigen::VectorXd z(k);
    for (Eigen::Index i = 0; i < k; ++i) z(i) = rng_.normal();
    return z;
  }

  void draw_weights() {
    const Eigen::VectorXd prior_var = prior_variances();
    const double s2 = state_.sigma2;
    if (!low_rank_) {
      Eigen::MatrixXd q = gram_ / s2;
      q.diagonal() += prior_var.cwiseInverse();
      const Eigen::LLT<Eigen::MatrixXd> llt(q);
      if (llt.info() != Eigen::Success) throw Error(Errc::DivergentChain, "weight precision lost positive definiteness");
      const Eigen::VectorXd mean = llt.solve(xty_ / s2);
      state_.theta = mean + llt.matrixU().solve(standard_normals(p_));
    } else {
      // Exact draw for p > n via the n x n system (Bhattacharya, Chakraborty & Mallick).
      const double sd = std::sqrt(s2);
      const Eigen::MatrixXd phi = xt_ / sd;
      const Eigen::VectorXd u = prior_var.cwiseSqrt().cwiseProduct(standard_normals(p_));
      const Eigen::VectorXd v = phi * u + standard_normals(n_);
      Eigen::MatrixXd m = phi * prior_var.asDiagonal() * phi.transpose();
      m.diagonal().array() += 1.0;
      const Eigen::LLT<Eigen::MatrixXd> llt(m);
      if (llt.info() != Eigen::Success) throw Error(Errc::DivergentChain, "low-rank weight system is not positive definite");
      const Eigen::VectorXd w = llt.solve(y_ / sd - v);
      state_.theta = u + prior_var.asDiagonal() * (phi.transpose() * w);
    }
  }

  void draw_sigma2() {
    // flat prior on sigma => p(sigma^2 | .) is IG((n - 1) / 2, SSR / 2)
    const double ssr = (y_ - xt_ * state_.theta).squaredNorm();
    state_.sigma2 = rng_.inverse_gamma(0.5 * static_cast<double>(n_ - 1), 0.5 * ssr);
  }

  void draw_scales() {
    const double nu = prior_.nu;
    const auto w = state_.theta.head(d_);
    double weighted = 0.0;
    for (Eigen::Index j = 0; j < d_; ++j) {
      const double wj2 = w(j) * w(j);
      state_.lambda2(j) = rng_.inverse_gamma(0.5 * (nu + 1.0), nu / state_.aux(j) + wj2 / (2.0 * state_.tau2));
      state_.aux(j) = rng_.inverse_gamma(0.5 * (nu + 1.0), nu / state_.lambda2(j) + 1.0);
      weighted += wj2 / state_.lambda2(j);
    }
    const double a2 = prior_.tau_scale * prior_.tau_scale;
    state_.tau2 = rng_.inverse_gamma(0.5 * static_cast<double>(d_ + 1), 1.0 / state_.xi + 0.5 * weighted);
    state_.xi = rng_.inverse_gamma(1.0, 1.0 / state_.tau2 + 1.0 / a2);
  }

  const Eigen::MatrixXd& xt_;
  const Eigen::VectorXd& y_;
  BlrPriorConfig prior_;
  McmcOptions options_;
  Rng rng_;
  Eigen::Index n_ = 0, p_ = 0, d_ = 0;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  bool low_rank_ = false;
  ChainState state_;
};

}  // namespace

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::GaussianRidge: return "gaussian_ridge";
    case PriorKind::HalfT: return "half_t";
    case PriorKind::RegularizedHorseshoe: return "regularized_horseshoe";
  }
  return "unknown";
}

PriorKind prior_kind_from_string(const std::string& s) {
  if (s == "gaussian_ridge" || s == "gaussian" || s == "ridge") return PriorKind::GaussianRidge;
  if (s == "half_t" || s == "half-t") return PriorKind::HalfT;
  if (s == "regularized_horseshoe" || s == "rhs") return PriorKind::RegularizedHorseshoe;
  throw Error(Errc::InvalidArgument, "unknown prior '" + s + "' (gaussian_ridge|half_t|regularized_horseshoe)");
}

BlrPriorConfig BlrPriorConfig::gaussian_ridge(double c) {
  BlrPriorConfig p;
  p.kind = PriorKind::GaussianRidge;
  p.c = c;
  return p;
}

BlrPriorConfig BlrPriorConfig::half_t(double nu) {
  BlrPriorConfig p;
  p.kind = PriorKind::HalfT;
  p.nu = nu;
  return p;
}

BlrPriorConfig BlrPriorConfig::regularized_horseshoe(double nu, double slab_scale) {
  BlrPriorConfig p;
  p.kind = PriorKind::RegularizedHorseshoe;
  p.nu = nu;
  p.slab_scale = slab_scale;
  return p;
}

void BlrPriorConfig::validate() const {
  if (!(c > 0.0)) throw Error(Errc::InvalidArgument, "prior variance c must be > 0");
  if (!(nu >= 1.0)) throw Error(Errc::InvalidArgument, "degrees of freedom nu must be >= 1");
  if (!(slab_scale > 0.0)) throw Error(Errc::InvalidArgument, "slab_scale must be > 0");
  if (!(intercept_sd > 0.0)) throw Error(Errc::InvalidArgument, "intercept_sd must be > 0");
  if (!(tau_scale > 0.0)) throw Error(Errc::InvalidArgument, "tau_scale must be > 0");
}

GaussianPosterior fit_blr_conjugate(const Eigen::MatrixXd& x, std::span<const double> y, const ConjugateOptions& options) {
  if (!(options.c > 0.0) || !(options.sigma2 > 0.0) || !(options.intercept_sd > 0.0)) {
    throw Error(Errc::InvalidArgument, "c, sigma2 and intercept_sd must be positive");
  }
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(Errc::LengthMismatch, "X rows and y length differ");
  const Eigen::MatrixXd xt = options.fit_intercept ? with_intercept(x) : x;
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const auto p = xt.cols();

  Eigen::VectorXd prior_prec = Eigen::VectorXd::Constant(p, 1.0 / options.c);
  if (options.fit_intercept) prior_prec(p - 1) = 1.0 / (options.intercept_sd * options.intercept_sd);
  Eigen::MatrixXd precision = xt.transpose() * xt / options.sigma2;
  precision.diagonal() += prior_prec;

  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    precision.diagonal().array() += 1e-10;
    llt.compute(precision);
    if (llt.info() != Eigen::Success) throw Error(Errc::NumericalFailure, "posterior precision is not positive definite");
  }
  GaussianPosterior post;
  post.intercept = options.fit_intercept;
  post.sigma2 = options.sigma2;
  post.cov = llt.solve(Eigen::MatrixXd::Identity(p, p));
  post.cov = 0.5 * (post.cov + post.cov.transpose());
  post.mean = llt.solve(xt.transpose() * yv / options.sigma2);
  return post;
}

std::vector<PredictiveDistribution> predict_blr(const GaussianPosterior& posterior, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != posterior.features()) {
    throw Error(Errc::DimensionMismatch, "posterior has " + std::to_string(posterior.features()) + " features, input has " +
                                             std::to_string(x.cols()));
  }
  const Eigen::MatrixXd xt = posterior.intercept ? with_intercept(x) : x;
  const Eigen::VectorXd mu = xt * posterior.mean;
  const Eigen::VectorXd quad = (xt * posterior.cov).cwiseProduct(xt).rowwise().sum();
  std::vector<PredictiveDistribution> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.push_back(PredictiveDistribution::gaussian(mu(i), std::max(quad(i), 0.0) + posterior.sigma2));
  }
  return out;
}

std::vector<std::string> PosteriorDraws::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < features; ++j) names.push_back("w[" + std::to_string(j) + "]");
  names.emplace_back("b");
  names.emplace_back("sigma");
  names.emplace_back("tau");
  for (std::size_t j = 0; j < features; ++j) names.push_back("lambda[" + std::to_string(j) + "]");
  return names;
}

Eigen::VectorXd PosteriorDraws::parameters(std::size_t row) const {
  const auto r = static_cast<Eigen::Index>(row);
  const auto d = static_cast<Eigen::Index>(features);
  Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
  out.head(d + 1) = coefficients.row(r).transpose();
  out(d + 1) = sigma(r);
  out(d + 2) = tau(r);
  out.tail(d) = lambda.row(r).transpose();
  return out;
}

std::vector<double> PosteriorDraws::chain_series(std::size_t parameter, std::size_t chain) const {
  std::vector<double> out(kept());
  const auto d = features;
  for (std::size_t t = 0; t < kept(); ++t) {
    const auto r = static_cast<Eigen::Index>(chain * kept() + t);
    double v;
    if (parameter <= d) v = coefficients(r, static_cast<Eigen::Index>(parameter));
    else if (parameter == d + 1) v = sigma(r);
    else if (parameter == d + 2) v = tau(r);
    else v = lambda(r, static_cast<Eigen::Index>(parameter - d - 3));
    out[t] = v;
  }
  return out;
}

PosteriorDraws fit_blr_mcmc(const Eigen::MatrixXd& x, std::span<const double> y, const BlrPriorConfig& prior,
                            const McmcOptions& options) {
  prior.validate();
  const auto n = x.rows();
  const auto d = x.cols();
  if (static_cast<std::size_t>(n) != y.size()) throw Error(Errc::LengthMismatch, "X rows and y length differ");
  if (n < 3) throw Error(Errc::InvalidArgument, "MCMC fit needs at least 3 rows");
  if (options.chains == 0 || options.draws <= options.warmup) {
    throw Error(Errc::InvalidArgument, "need chains > 0 and draws > warmup");
  }
  if (options.fixed_sigma2 && !(*options.fixed_sigma2 > 0.0)) throw Error(Errc::InvalidArgument, "fixed sigma2 must be > 0");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(y[static_cast<std::size_t>(i)]) || !x.row(i).allFinite()) {
      throw Error(Errc::NonFiniteValue, "non-finite input at row " + std::to_string(i));
    }
  }

  Eigen::RowVectorXd means = Eigen::RowVectorXd::Zero(d);
  Eigen::RowVectorXd sds = Eigen::RowVectorXd::Ones(d);
  Eigen::MatrixXd xs = x;
  if (options.standardize) {
    const auto st = features::ColumnStandardizer::fit(x);
    means = st.means();
    sds = st.sds();
    xs = st.apply(x);
  }
  const Eigen::MatrixXd xt = with_intercept(xs);
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

  PosteriorDraws out;
  out.chains = options.chains;
  out.draws_per_chain = options.draws;
  out.warmup = options.warmup;
  out.features = static_cast<std::size_t>(d);
  out.prior = prior;
  const auto kept = static_cast<Eigen::Index>(out.kept());
  const auto total = static_cast<Eigen::Index>(out.total());
  out.coefficients.resize(total, d + 1);
  out.sigma.resize(total);
  out.tau.resize(total);
  out.lambda.resize(total, d);

  parallel_for(options.chains, [&](std::size_t c) {
    GibbsChain chain(xt, yv, prior, options, c);
    for (std::size_t it = 0; it < options.draws; ++it) {
      chain.step();
      if (it < options.warmup) continue;
      const auto& s = chain.state();
      const auto row = static_cast<Eigen::Index>(c) * kept + static_cast<Eigen::Index>(it - options.warmup);
      const Eigen::VectorXd w_raw = s.theta.head(d).array() / sds.transpose().array();
      out.coefficients.row(row).head(d) = w_raw.transpose();
      out.coefficients(row, d) = s.theta(d) - means.dot(w_raw);
      out.sigma(row) = std::sqrt(s.sigma2);
      const bool scaled = prior.kind != PriorKind::GaussianRidge && !options.pin_scales;
      out.tau(row) = scaled ? std::sqrt(s.tau2) : 1.0;
      out.lambda.row(row) = scaled ? Eigen::RowVectorXd(s.lambda2.cwiseSqrt().transpose()) : Eigen::RowVectorXd::Ones(d);
      if (!out.coefficients.row(row).allFinite() || !std::isfinite(out.sigma(row)) || !std::isfinite(out.tau(row)) ||
          !out.lambda.row(row).allFinite()) {
        throw Error(Errc::DivergentChain, "chain " + std::to_string(c) + " produced a non-finite draw at iteration " +
                                              std::to_string(it));
      }
    }
  });

  if (out.chains > 1 && out.kept() >= 4) {
    double worst = 1.0;
    for (std::size_t p = 0; p <= out.features; ++p) {
      diagnostics::Chains chains;
      for (std::size_t c = 0; c < out.chains; ++c) chains.push_back(out.chain_series(p, c));
      const double r = diagnostics::split_rhat(chains);
      if (!(r <= worst)) worst = r;
    }
    if (!(worst <= diagnostics::kRhatThreshold)) {
      out.warnings.push_back("RHatWarning: max split-R-hat over coefficients is " + std::to_string(worst));
    }
  }
  return out;
}

std::vector<PredictiveDistribution> predict_blr(const PosteriorDraws& draws, const Eigen::MatrixXd& x,
                                                std::uint64_t seed) {
  if (static_cast<std::size_t>(x.cols()) != draws.features) {
    throw Error(Errc::DimensionMismatch, "posterior has " + std::to_string(draws.features) + " features, input has " +
                                             std::to_string(x.cols()));
  }
  const auto d = static_cast<Eigen::Index>(draws.features);
  const Eigen::MatrixXd means = x * draws.coefficients.leftCols(d).transpose();  // rows x draws
  Rng rng(seed);
  std::vector<PredictiveDistribution> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  std::vector<double> samples(draws.total());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(draws.total()); ++s) {
      samples[static_cast<std::size_t>(s)] = means(i, s) + draws.coefficients(s, d) + draws.sigma(s) * rng.normal();
    }
    out.push_back(PredictiveDistribution::samples(samples));
  }
  return out;
}

Tensor draws_to_tensor(const PosteriorDraws& draws) {
  const std::size_t p = draws.parameter_count();
  std::vector<double> payload(draws.total() * p);
  for (std::size_t r = 0; r < draws.total(); ++r) {
    const Eigen::VectorXd params = draws.parameters(r);
    std::copy(params.data(), params.data() + p, payload.begin() + static_cast<std::ptrdiff_t>(r * p));
  }
  return Tensor{{draws.chains, draws.kept(), p}, std::move(payload)};
}

void save_draws(const std::filesystem::path& path, const PosteriorDraws& draws) {
  write_btsr(path, draws_to_tensor(draws));
  json side;
  side["parameters"] = draws.parameter_names();
  side["chains"] = draws.chains;
  side["draws_per_chain"] = draws.draws_per_chain;
  side["warmup"] = draws.warmup;
  side["features"] = draws.features;
  side["prior"] = {{"kind", to_string(draws.prior.kind)},
                   {"c", draws.prior.c},
                   {"nu", draws.prior.nu},
                   {"slab_scale", draws.prior.slab_scale},
                   {"intercept_sd", draws.prior.intercept_sd},
                   {"tau_scale", draws.prior.tau_scale}};
  write_text_file(sidecar_path(path, ".params.json"), side.dump(2) + "\n");
}

PosteriorDraws load_draws(const std::filesystem::path& path) {
  const Tensor t = read_btsr(path);
  const auto side_path = sidecar_path(path, ".params.json");
  json side;
  try {
    side = json::parse(read_text_file(side_path));
  } catch (const json::exception& e) {
    throw Error(Errc::Format, side_path.string() + ": " + e.what());
  }
  PosteriorDraws d;
  d.chains = side.at("chains").get<std::size_t>();
  d.draws_per_chain = side.at("draws_per_chain").get<std::size_t>();
  d.warmup = side.at("warmup").get<std::size_t>();
  d.features = side.at("features").get<std::size_t>();
  const auto& pj = side.at("prior");
  d.prior.kind = prior_kind_from_string(pj.at("kind").get<std::string>());
  d.prior.c = pj.value("c", 1.0);
  d.prior.nu = pj.value("nu", 3.0);
  d.prior.slab_scale = pj.value("slab_scale", 2.0);
  d.prior.intercept_sd = pj.value("intercept_sd", 5.0);
  d.prior.tau_scale = pj.value("tau_scale", 1.0);
  const std::size_t p = d.parameter_count();
  if (t.dims != std::vector<std::uint64_t>{d.chains, d.kept(), p}) {
    throw Error(Errc::Format, path.string() + ": tensor shape disagrees with " + side_path.string());
  }
  const auto total = static_cast<Eigen::Index>(d.total());
  const auto f = static_cast<Eigen::Index>(d.features);
  d.coefficients.resize(total, f + 1);
  d.sigma.resize(total);
  d.tau.resize(total);
  d.lambda.resize(total, f);
  for (Eigen::Index r = 0; r < total; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * p;
    for (Eigen::Index j = 0; j <= f; ++j) d.coefficients(r, j) = t.at(base + static_cast<std::size_t>(j));
    d.sigma(r) = t.at(base + static_cast<std::size_t>(f) + 1);
    d.tau(r) = t.at(base + static_cast<std::size_t>(f) + 2);
    for (Eigen::Index j = 0; j < f; ++j) d.lambda(r, j) = t.at(base + static_cast<std::size_t>(f + 3 + j));
  }
  return d;
}

}  // namespace mvuq::bayes
