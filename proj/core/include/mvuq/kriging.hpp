#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "mvuq/tensor_io.hpp"

namespace mvuq::geo {

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr std::size_t kDefaultNeighbours = 32;

/// Great-circle distance in km between two (lon, lat) points in degrees.
double haversine_km(double lon1, double lat1, double lon2, double lat2);

enum class FieldKind { Target, PosteriorMean, PosteriorVariance };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& s);

/// Scattered values at (lon, lat) points. Points sharing exact coordinates
/// are merged into one point carrying the mean value.
struct ScatterField {
  std::vector<double> lon;
  std::vector<double> lat;
  std::vector<double> values;
  std::vector<std::string> ids;
  FieldKind kind = FieldKind::Target;
  std::vector<std::string> warnings;

  static ScatterField make(std::vector<double> lon, std::vector<double> lat, std::vector<double> values,
                           FieldKind kind = FieldKind::Target, std::vector<std::string> ids = {});
  std::size_t size() const { return values.size(); }
};

/// Exponential model gamma(h) = nugget + (sill - nugget)(1 - exp(-h / range))
/// for h > 0 and gamma(0) = 0. A degenerate model describes a constant field.
struct VariogramModel {
  double nugget = 0.0;
  double sill = 1.0;
  double range_km = 1.0;
  bool degenerate = false;

  double gamma(double h_km) const;
};

struct EmpiricalVariogram {
  std::vector<double> lag_km;  // mean pair distance per non-empty bin
  std::vector<double> gamma;
  std::vector<std::size_t> pairs;
};

/// Semivariance on n_bins equal-width bins up to half the largest pair distance.
EmpiricalVariogram empirical_variogram(const ScatterField& field, std::size_t n_bins);

/// Pair-count weighted least squares of the exponential model to the binned
/// semivariogram. Throws TooFewPoints for fewer than 10 points.
VariogramModel fit_variogram(const ScatterField& field, std::size_t n_bins = 15);

/// Ordinary kriging solution at one location.
struct KrigingPoint {
  std::vector<std::size_t> neighbours;
  std::vector<double> weights;  // sum to 1
  double lagrange = 0.0;
  double estimate = 0.0;
  double variance = 0.0;
};

KrigingPoint krige_point(const ScatterField& field, const VariogramModel& model, double lon, double lat,
                         std::size_t max_neighbours = kDefaultNeighbours);

/// Node centres of a regular grid over the bbox. Spacing targets res_km
/// (111.32 cos(lat) km per degree of longitude, 110.574 km per degree of
/// latitude); row 0 is the northern edge.
struct GridSpec {
  double lon0 = 0.0, lat0 = 0.0, lon1 = 0.0, lat1 = 0.0;
  double res_km = 1.0;

  std::size_t rows() const;
  std::size_t cols() const;
  double node_lon(std::size_t col) const;
  double node_lat(std::size_t row) const;
  void validate() const;
};

struct KrigedGrid {
  GridSpec spec;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> estimate;  // row-major
  std::vector<double> variance;
};

KrigedGrid krige(const ScatterField& field, const VariogramModel& model, const GridSpec& grid,
                 std::size_t max_neighbours = kDefaultNeighbours);

/// Rank-3 tensor (2, rows, cols): estimate then kriging variance.
Tensor grid_to_tensor(const KrigedGrid& grid);

/// Fixed viridis-style ramp, t in [0, 1].
std::array<unsigned char, 3> ramp_color(double t);

/// 8-bit RGB heatmap of the estimate (or variance) layer plus a legend JSON
/// next to it ("<stem>.legend.json") holding vmin/vmax.
void write_heatmap(const std::filesystem::path& png_path, const KrigedGrid& grid, bool variance_layer = false);

std::string markers_geojson(const ScatterField& field);

}  // namespace mvuq::geo
