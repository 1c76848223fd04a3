#include "mvuq/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mvuq/error.hpp"
#include "mvuq/random.hpp"
#include "mvuq/table_io.hpp"

namespace mvuq::synth {

PlantedDataset make_planted(const PlantedConfig& config) {
  if (config.n == 0 || config.width == 0 || config.height == 0) {
    throw Error(Errc::InvalidArgument, "planted dataset needs n, width and height > 0");
  }
  const auto& bands = raster::sentinel2_bands();
  for (const auto& [label, beta] : config.signal) {
    (void)beta;
    if (std::none_of(bands.begin(), bands.end(), [&](const raster::BandId& b) { return b.label == label; })) {
      throw Error(Errc::MissingBand, "signal band " + label + " is not a Sentinel-2 band");
    }
  }
  Rng rng(config.seed);
  PlantedDataset out;
  const std::size_t pixels = config.width * config.height;
  const int digits = static_cast<int>(std::to_string(config.n).size());
  for (std::size_t i = 0; i < config.n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "loc%0*zu", digits, i);
    std::vector<double> u(bands.size());
    for (auto& v : u) v = rng.uniform();
    std::vector<std::vector<std::uint16_t>> data(bands.size(), std::vector<std::uint16_t>(pixels));
    for (std::size_t b = 0; b < bands.size(); ++b) {
      for (auto& px : data[b]) {
        const double v = 300.0 + 2400.0 * u[b] + config.texture_sd * rng.normal();
        px = static_cast<std::uint16_t>(std::clamp(std::nearbyint(v), 0.0, 4095.0));
      }
    }
    double y = config.noise_sd * rng.normal();
    for (const auto& [label, beta] : config.signal) {
      const auto it = std::find_if(bands.begin(), bands.end(), [&](const raster::BandId& b) { return b.label == label; });
      y += beta * (u[static_cast<std::size_t>(it - bands.begin())] - 0.5);
    }
    raster::BandRaster r(config.width, config.height, bands, std::move(data));
    r.crs_tag = "EPSG:4326";
    r.origin_lon = config.lon0 + (config.lon1 - config.lon0) * rng.uniform();
    r.origin_lat = config.lat0 + (config.lat1 - config.lat0) * rng.uniform();
    r.ground_size_m = 10.0 * static_cast<double>(config.width);
    out.lon.push_back(r.origin_lon);
    out.lat.push_back(r.origin_lat);
    out.ids.emplace_back(id);
    out.rasters.push_back(std::move(r));
    out.y.push_back(y);
  }
  return out;
}

void write_planted(const std::filesystem::path& dir, const PlantedDataset& data) {
  for (std::size_t i = 0; i < data.ids.size(); ++i) {
    raster::save_raster(dir / "rasters" / (data.ids[i] + ".btsr"), data.rasters[i]);
  }
  table::write_targets(dir / "targets.csv", {data.ids, data.y});
}

}  // namespace mvuq::synth
