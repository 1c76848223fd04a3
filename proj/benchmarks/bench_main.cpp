#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "mvuq/bayes.hpp"
#include "mvuq/features.hpp"
#include "mvuq/kriging.hpp"
#include "mvuq/metrics.hpp"
#include "mvuq/ridge.hpp"

using namespace mvuq;

namespace {

Eigen::MatrixXd noise(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

std::vector<double> linear_target(const Eigen::MatrixXd& x, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> y(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[static_cast<std::size_t>(i)] = x.row(i).head(3).sum() + nd(gen);
  return y;
}

void BM_CrpsSamples(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const Eigen::MatrixXd d = noise(static_cast<Eigen::Index>(m), 1, 1);
  std::vector<double> x(d.data(), d.data() + m);
  std::sort(x.begin(), x.end());
  for (auto _ : state) benchmark::DoNotOptimize(metrics::crps_samples(x, 0.3));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CrpsSamples)->RangeMultiplier(10)->Range(1000, 100000)->Complexity();

void BM_RidgeCv(benchmark::State& state) {
  const Eigen::MatrixXd x = noise(300, state.range(0), 2);
  const auto y = linear_target(x, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(regress::fit_ridge_cv(x, y, regress::default_alpha_grid(), 5, 0).report.chosen_alpha);
  }
}
BENCHMARK(BM_RidgeCv)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_GibbsHalfT(benchmark::State& state) {
  const Eigen::MatrixXd x = noise(200, state.range(0), 4);
  const auto y = linear_target(x, 5);
  bayes::McmcOptions mo;
  mo.chains = 1;
  mo.draws = 200;
  mo.warmup = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bayes::fit_blr_mcmc(x, y, bayes::BlrPriorConfig::half_t(), mo).sigma(0));
  }
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_GibbsHalfT)->Arg(10)->Arg(50)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_RandomConv(benchmark::State& state) {
  raster::ViewImage img;
  img.spec = raster::ViewSpec::natural();
  img.width = img.height = static_cast<std::size_t>(state.range(0));
  const Eigen::MatrixXd px = noise(3, static_cast<Eigen::Index>(img.width * img.height), 6);
  for (int c = 0; c < 3; ++c) img.channels[c].assign(px.row(c).data(), px.row(c).data() + px.cols());
  for (int c = 0; c < 3; ++c) {
    for (Eigen::Index i = 0; i < px.cols(); ++i) img.channels[c][static_cast<std::size_t>(i)] = 128 + 40 * px(c, i);
  }
  const features::RandomConvFeaturizer fz(features::ConvParams{256, 3, 0, 1}, &img);
  for (auto _ : state) benchmark::DoNotOptimize(fz.extract(img).sum());
}
BENCHMARK(BM_RandomConv)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_KrigeGrid(benchmark::State& state) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> lon(500), lat(500), v(500);
  for (int i = 0; i < 500; ++i) {
    lon[i] = 30 + u(gen);
    lat[i] = -1 + u(gen);
    v[i] = std::sin(5 * lon[i]) + u(gen);
  }
  const auto field = geo::ScatterField::make(lon, lat, v);
  const auto model = geo::fit_variogram(field);
  const geo::GridSpec grid{30, -1, 31, 0, static_cast<double>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(geo::krige(field, model, grid).estimate.size());
}
BENCHMARK(BM_KrigeGrid)->Arg(10)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
