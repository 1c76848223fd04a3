#include "mvuq/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "mvuq/error.hpp"
#include "mvuq/parallel.hpp"
#include "mvuq/png.hpp"
#include "mvuq/stats.hpp"

namespace mvuq::geo {
namespace {

constexpr double kDegenerateSill = 1e-12;
constexpr double kJitter = 1e-10;
constexpr double kKmPerDegLat = 110.574;
constexpr double kKmPerDegLonEquator = 111.32;

double deg2rad(double d) { return d * stats::kPi / 180.0; }

struct Fit {
  double nugget = 0.0;
  double psill = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

// For a fixed range the model is linear in (nugget, psill); solve the
// weighted least squares with both constrained to be non-negative.
Fit fit_linear(const EmpiricalVariogram& ev, const std::vector<double>& wt, double range) {
  double sw = 0, sf = 0, sff = 0, sg = 0, sfg = 0;
  std::vector<double> f(ev.gamma.size());
  for (std::size_t k = 0; k < ev.gamma.size(); ++k) {
    const double w = wt[k];
    f[k] = 1.0 - std::exp(-ev.lag_km[k] / range);
    sw += w;
    sf += w * f[k];
    sff += w * f[k] * f[k];
    sg += w * ev.gamma[k];
    sfg += w * f[k] * ev.gamma[k];
  }
  auto sse = [&](double nug, double ps) {
    double s = 0.0;
    for (std::size_t k = 0; k < ev.gamma.size(); ++k) {
      const double r = nug + ps * f[k] - ev.gamma[k];
      s += wt[k] * r * r;
    }
    return s;
  };
  std::vector<Fit> candidates;
  const double det = sw * sff - sf * sf;
  if (det > 1e-14 * sw * sff) {
    const double nug = (sff * sg - sf * sfg) / det;
    const double ps = (sw * sfg - sf * sg) / det;
    if (nug >= 0.0 && ps >= 0.0) candidates.push_back({nug, ps, sse(nug, ps)});
  }
  if (sff > 0.0) {
    const double ps = std::max(0.0, sfg / sff);
    candidates.push_back({0.0, ps, sse(0.0, ps)});
  }
  const double nug = std::max(0.0, sg / sw);
  candidates.push_back({nug, 0.0, sse(nug, 0.0)});
  return *std::min_element(candidates.begin(), candidates.end(),
                           [](const Fit& a, const Fit& b) { return a.sse < b.sse; });
}

// Coarse log-spaced scan of the range, then golden-section refinement.
double scan_range(const EmpiricalVariogram& ev, const std::vector<double>& wt, double lo, double hi, Fit& best) {
  constexpr int kScan = 200;
  double best_t = lo;
  for (int i = 0; i <= kScan; ++i) {
    const double t = lo + (hi - lo) * i / kScan;
    const Fit f = fit_linear(ev, wt, std::exp(t));
    if (f.sse < best.sse) {
      best = f;
      best_t = t;
    }
  }
  double a = std::max(lo, best_t - (hi - lo) / kScan), b = std::min(hi, best_t + (hi - lo) / kScan);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (fit_linear(ev, wt, std::exp(c)).sse < fit_linear(ev, wt, std::exp(d)).sse) b = d;
    else a = c;
  }
  const double t = 0.5 * (a + b);
  const Fit refined = fit_linear(ev, wt, std::exp(t));
  if (refined.sse <= best.sse) {
    best = refined;
    best_t = t;
  }
  return best_t;
}

}  // namespace

double haversine_km(double lon1, double lat1, double lon2, double lat2) {
  const double p1 = deg2rad(lat1), p2 = deg2rad(lat2);
  const double dp = p2 - p1, dl = deg2rad(lon2 - lon1);
  const double a = std::sin(dp / 2) * std::sin(dp / 2) + std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Target: return "target";
    case FieldKind::PosteriorMean: return "posterior_mean";
    case FieldKind::PosteriorVariance: return "posterior_variance";
  }
  return "target";
}

FieldKind field_kind_from_string(const std::string& s) {
  if (s == "posterior_mean" || s == "mu") return FieldKind::PosteriorMean;
  if (s == "posterior_variance" || s == "var") return FieldKind::PosteriorVariance;
  return FieldKind::Target;
}

ScatterField ScatterField::make(std::vector<double> lon, std::vector<double> lat, std::vector<double> values,
                                FieldKind kind, std::vector<std::string> ids) {
  if (lon.size() != lat.size() || lon.size() != values.size() || (!ids.empty() && ids.size() != values.size())) {
    throw Error(Errc::LengthMismatch, "scatter field coordinate/value lengths differ");
  }
  if (values.empty()) throw Error(Errc::TooFewPoints, "scatter field needs at least one point");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(lon[i]) || !std::isfinite(lat[i]) || !std::isfinite(values[i])) {
      throw Error(Errc::NonFiniteValue, "scatter point " + std::to_string(i) + " is not finite");
    }
  }
  ScatterField f;
  f.kind = kind;
  std::map<std::pair<double, double>, std::size_t> seen;
  std::vector<std::size_t> counts;
  std::size_t merged = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto [it, fresh] = seen.emplace(std::make_pair(lon[i], lat[i]), f.values.size());
    if (fresh) {
      f.lon.push_back(lon[i]);
      f.lat.push_back(lat[i]);
      f.values.push_back(values[i]);
      if (!ids.empty()) f.ids.push_back(ids[i]);
      counts.push_back(1);
    } else {
      const std::size_t k = it->second;
      f.values[k] += (values[i] - f.values[k]) / static_cast<double>(++counts[k]);
      ++merged;
    }
  }
  if (merged > 0) {
    f.warnings.push_back("DuplicateCoordinates: " + std::to_string(merged) + " point(s) merged by averaging");
  }
  return f;
}

double VariogramModel::gamma(double h_km) const {
  if (h_km <= 0.0) return 0.0;
  return nugget + (sill - nugget) * (1.0 - std::exp(-h_km / range_km));
}

EmpiricalVariogram empirical_variogram(const ScatterField& field, std::size_t n_bins) {
  if (n_bins == 0) throw Error(Errc::InvalidArgument, "n_bins must be positive");
  const std::size_t n = field.size();
  std::vector<double> dist;
  std::vector<double> semi;
  double max_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double h = haversine_km(field.lon[i], field.lat[i], field.lon[j], field.lat[j]);
      const double dz = field.values[i] - field.values[j];
      dist.push_back(h);
      semi.push_back(0.5 * dz * dz);
      max_d = std::max(max_d, h);
    }
  }
  const double cutoff = 0.5 * max_d;
  std::vector<double> sum_h(n_bins, 0.0), sum_g(n_bins, 0.0);
  std::vector<std::size_t> cnt(n_bins, 0);
  for (std::size_t p = 0; p < dist.size(); ++p) {
    if (dist[p] > cutoff || cutoff <= 0.0) continue;
    auto b = static_cast<std::size_t>(dist[p] / cutoff * static_cast<double>(n_bins));
    b = std::min(b, n_bins - 1);
    sum_h[b] += dist[p];
    sum_g[b] += semi[p];
    ++cnt[b];
  }
  EmpiricalVariogram ev;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (cnt[b] == 0) continue;
    ev.lag_km.push_back(sum_h[b] / static_cast<double>(cnt[b]));
    ev.gamma.push_back(sum_g[b] / static_cast<double>(cnt[b]));
    ev.pairs.push_back(cnt[b]);
  }
  return ev;
}

VariogramModel fit_variogram(const ScatterField& field, std::size_t n_bins) {
  if (field.size() < 10) {
    throw Error(Errc::TooFewPoints, "variogram fit needs at least 10 distinct points, got " + std::to_string(field.size()));
  }
  const EmpiricalVariogram ev = empirical_variogram(field, n_bins);
  VariogramModel m;
  const double var = stats::variance(field.values);
  double max_lag = ev.lag_km.empty() ? 1.0 : *std::max_element(ev.lag_km.begin(), ev.lag_km.end());
  if (!(max_lag > 0.0)) max_lag = 1.0;
  if (!(var > 0.0) || ev.lag_km.empty()) {
    m.nugget = 0.0;
    m.sill = kDegenerateSill;
    m.range_km = max_lag;
    m.degenerate = true;
    return m;
  }

  // Start from pair-count weights, then reweight twice with the Cressie
  // weights N_h / gamma(h)^2 of the current fit, which stops the many
  // long-lag pairs from dominating the short-lag structure.
  std::vector<double> wt(ev.pairs.begin(), ev.pairs.end());
  const double lo = std::log(max_lag * 1e-3), hi = std::log(max_lag * 1e2);
  double best_t = lo;
  Fit best;
  for (int pass = 0; pass < 3; ++pass) {
    if (pass > 0) {
      const double floor_g = 1e-6 * var;
      for (std::size_t k = 0; k < wt.size(); ++k) {
        const double gm = best.nugget + best.psill * (1.0 - std::exp(-ev.lag_km[k] / std::exp(best_t)));
        wt[k] = static_cast<double>(ev.pairs[k]) / std::pow(std::max(gm, floor_g), 2);
      }
    }
    best = Fit{};
    best_t = scan_range(ev, wt, lo, hi, best);
  }
  m.nugget = best.nugget;
  m.sill = best.nugget + best.psill;
  m.range_km = std::exp(best_t);
  if (!(m.sill > 0.0)) {
    m.sill = kDegenerateSill;
    m.degenerate = true;
  }
  return m;
}

KrigingPoint krige_point(const ScatterField& field, const VariogramModel& model, double lon, double lat,
                         std::size_t max_neighbours) {
  if (!(model.sill > 0.0) || !(model.range_km > 0.0) || model.nugget < 0.0 || model.nugget > model.sill) {
    throw Error(Errc::InvalidArgument, "variogram needs 0 <= nugget <= sill, sill > 0, range > 0");
  }
  const std::size_t n = field.size();
  if (n == 0) throw Error(Errc::TooFewPoints, "empty scatter field");
  std::vector<std::pair<double, std::size_t>> near(n);
  for (std::size_t i = 0; i < n; ++i) near[i] = {haversine_km(lon, lat, field.lon[i], field.lat[i]), i};
  const std::size_t k = std::min(n, std::max<std::size_t>(1, max_neighbours));
  std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(k), near.end());

  // Work with gamma / sill so nearly-constant fields stay well conditioned.
  const double scale = model.sill;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(k + 1));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(k + 1));
  for (std::size_t i = 0; i < k; ++i) {
    const auto pi = near[i].second;
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto pj = near[j].second;
      const double gij = model.gamma(haversine_km(field.lon[pi], field.lat[pi], field.lon[pj], field.lat[pj])) / scale;
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gij;
      a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = gij;
    }
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = 1.0;
    a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = 1.0;
    rhs(static_cast<Eigen::Index>(i)) = model.gamma(near[i].first) / scale;
  }
  rhs(static_cast<Eigen::Index>(k)) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    // covariance-form jitter C + eps I is gamma-form Gamma - eps I
    for (std::size_t i = 0; i < k; ++i) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= kJitter;
    lu.compute(a);
    if (!lu.isInvertible()) {
      throw Error(Errc::SingularKrigingSystem, "kriging system is singular at (" + std::to_string(lon) + ", " +
                                                   std::to_string(lat) + ")");
    }
  }
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) throw Error(Errc::SingularKrigingSystem, "kriging solve produced non-finite weights");

  KrigingPoint out;
  out.neighbours.resize(k);
  out.weights.resize(k);
  double est = 0.0, var = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    out.neighbours[i] = near[i].second;
    out.weights[i] = sol(static_cast<Eigen::Index>(i));
    est += out.weights[i] * field.values[near[i].second];
    var += out.weights[i] * rhs(static_cast<Eigen::Index>(i));
  }
  out.lagrange = sol(static_cast<Eigen::Index>(k)) * scale;
  var = (var + sol(static_cast<Eigen::Index>(k))) * scale;
  out.estimate = est;
  out.variance = std::max(0.0, var);
  return out;
}

void GridSpec::validate() const {
  if (!(lon1 > lon0) || !(lat1 > lat0)) throw Error(Errc::InvalidArgument, "bbox must satisfy lon0 < lon1 and lat0 < lat1");
  if (!(res_km > 0.0)) throw Error(Errc::InvalidArgument, "grid resolution must be > 0 km");
  if (lat0 < -90.0 || lat1 > 90.0) throw Error(Errc::InvalidArgument, "latitude outside [-90, 90]");
}

std::size_t GridSpec::rows() const {
  const double km = (lat1 - lat0) * kKmPerDegLat;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(km / res_km - 1e-9)));
}

std::size_t GridSpec::cols() const {
  const double mid = deg2rad(0.5 * (lat0 + lat1));
  const double km = (lon1 - lon0) * kKmPerDegLonEquator * std::cos(mid);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(km / res_km - 1e-9)));
}

double GridSpec::node_lon(std::size_t col) const {
  return lon0 + (static_cast<double>(col) + 0.5) * (lon1 - lon0) / static_cast<double>(cols());
}

double GridSpec::node_lat(std::size_t row) const {
  return lat1 - (static_cast<double>(row) + 0.5) * (lat1 - lat0) / static_cast<double>(rows());
}

KrigedGrid krige(const ScatterField& field, const VariogramModel& model, const GridSpec& grid,
                 std::size_t max_neighbours) {
  grid.validate();
  KrigedGrid out;
  out.spec = grid;
  out.rows = grid.rows();
  out.cols = grid.cols();
  out.estimate.assign(out.rows * out.cols, 0.0);
  out.variance.assign(out.rows * out.cols, 0.0);
  parallel_for(out.rows, [&](std::size_t r) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      const auto kp = krige_point(field, model, grid.node_lon(c), grid.node_lat(r), max_neighbours);
      out.estimate[r * out.cols + c] = kp.estimate;
      out.variance[r * out.cols + c] = kp.variance;
    }
  });
  return out;
}

Tensor grid_to_tensor(const KrigedGrid& grid) {
  std::vector<double> payload = grid.estimate;
  payload.insert(payload.end(), grid.variance.begin(), grid.variance.end());
  return Tensor{{2, grid.rows, grid.cols}, std::move(payload)};
}

std::array<unsigned char, 3> ramp_color(double t) {
  // viridis sampled at nine evenly spaced stops
  static constexpr std::array<std::array<double, 3>, 9> kStops{{{68, 1, 84},
                                                                 {71, 44, 122},
                                                                 {59, 81, 139},
                                                                 {44, 113, 142},
                                                                 {33, 144, 141},
                                                                 {39, 173, 129},
                                                                 {92, 200, 99},
                                                                 {170, 220, 50},
                                                                 {253, 231, 37}}};
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0) * 8.0;
  const auto i = std::min<std::size_t>(7, static_cast<std::size_t>(t));
  const double f = t - static_cast<double>(i);
  std::array<unsigned char, 3> rgb{};
  for (int ch = 0; ch < 3; ++ch) {
    const double v = kStops[i][ch] + f * (kStops[i + 1][ch] - kStops[i][ch]);
    rgb[ch] = static_cast<unsigned char>(std::nearbyint(v));
  }
  return rgb;
}

void write_heatmap(const std::filesystem::path& png_path, const KrigedGrid& grid, bool variance_layer) {
  const auto& layer = variance_layer ? grid.variance : grid.estimate;
  const auto [mn, mx] = std::minmax_element(layer.begin(), layer.end());
  const double vmin = layer.empty() ? 0.0 : *mn;
  const double vmax = layer.empty() ? 0.0 : *mx;
  std::vector<std::uint8_t> rgb;
  rgb.reserve(layer.size() * 3);
  for (double v : layer) {
    const double t = vmax > vmin ? (v - vmin) / (vmax - vmin) : 0.5;
    const auto c = ramp_color(t);
    rgb.insert(rgb.end(), c.begin(), c.end());
  }
  write_png_rgb(png_path, grid.cols, grid.rows, rgb);

  nlohmann::ordered_json legend;
  legend["layer"] = variance_layer ? "kriging_variance" : "estimate";
  legend["ramp"] = "viridis";
  legend["vmin"] = vmin;
  legend["vmax"] = vmax;
  legend["rows"] = grid.rows;
  legend["cols"] = grid.cols;
  legend["bbox"] = {grid.spec.lon0, grid.spec.lat0, grid.spec.lon1, grid.spec.lat1};
  legend["res_km"] = grid.spec.res_km;
  write_text_file(sidecar_path(png_path, ".legend.json"), legend.dump(2) + "\n");
}

std::string markers_geojson(const ScatterField& field) {
  nlohmann::ordered_json fc;
  fc["type"] = "FeatureCollection";
  auto features = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < field.size(); ++i) {
    nlohmann::ordered_json props;
    if (!field.ids.empty()) props["location_id"] = field.ids[i];
    props[to_string(field.kind)] = field.values[i];
    props["marker"] = "training";
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {field.lon[i], field.lat[i]}}}},
                        {"properties", props}});
  }
  fc["features"] = std::move(features);
  return fc.dump(2) + "\n";
}

}  // namespace mvuq::geo
