#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mvuq/raster.hpp"

namespace mvuq::synth {

/// Planted multi-band task: every location draws a brightness level
/// u_b ~ U(0, 1) per band, pixels are 300 + 2400 u_b plus Gaussian texture,
/// and the target is sum_b beta_b (u_b - 1/2) + noise over the signal bands.
struct PlantedConfig {
  std::size_t n = 300;
  std::size_t width = 12;
  std::size_t height = 12;
  std::uint64_t seed = 0;
  double noise_sd = 0.1;
  double texture_sd = 150.0;
  std::vector<std::pair<std::string, double>> signal = {{"4", 1.0}, {"12", 1.0}, {"11", 1.0}, {"8", 0.5}};
  double lon0 = 30.0, lat0 = -2.0, lon1 = 32.0, lat1 = 0.0;
};

struct PlantedDataset {
  std::vector<std::string> ids;
  std::vector<raster::BandRaster> rasters;
  std::vector<double> y;
  std::vector<double> lon;
  std::vector<double> lat;
};

PlantedDataset make_planted(const PlantedConfig& config);

/// Writes <dir>/rasters/<id>.btsr (+ sidecars) and <dir>/targets.csv.
void write_planted(const std::filesystem::path& dir, const PlantedDataset& data);

}  // namespace mvuq::synth
