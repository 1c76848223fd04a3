#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvuq::raster {

/// Spectral band identity. Bands are identified by label ("8A" is distinct
/// from "8"), never by position in a file.
struct BandId {
  std::string label;
  double wavelength_nm = 0.0;
  double resolution_m = 0.0;

  friend bool operator==(const BandId& a, const BandId& b) { return a.label == b.label; }
};

/// Sentinel-2 MSI bands in the order the mission documentation tabulates them
/// (Cirrus, band 10, is listed last).
const std::vector<BandId>& sentinel2_bands();

/// Sentinel-2 band by label; unknown labels give a band with zero metadata.
BandId band(const std::string& label);

/// Raw multi-band image: per-band grids of non-negative digital numbers on a
/// shared width x height grid.
class BandRaster {
 public:
  BandRaster(std::size_t width, std::size_t height, std::vector<BandId> bands,
             std::vector<std::vector<std::uint16_t>> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  const std::vector<BandId>& bands() const { return bands_; }
  std::optional<std::size_t> band_index(const std::string& label) const;
  std::span<const std::uint16_t> band_data(std::size_t index) const { return data_.at(index); }
  const std::vector<std::vector<std::uint16_t>>& data() const { return data_; }

  std::string crs_tag;
  double origin_lon = 0.0;
  double origin_lat = 0.0;
  double ground_size_m = 0.0;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<BandId> bands_;
  std::vector<std::vector<std::uint16_t>> data_;
};

/// A band at its native resolution, before alignment to a common grid.
struct NativeBand {
  BandId id;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> values;
};

/// Nearest-neighbour resampling of a row-major grid.
std::vector<std::uint16_t> resample_nearest(std::span<const std::uint16_t> src, std::size_t src_w,
                                            std::size_t src_h, std::size_t dst_w, std::size_t dst_h);

/// Upsamples every band to the largest grid present (nearest neighbour).
BandRaster assemble(std::vector<NativeBand> bands);

struct ViewSpec {
  std::string name;
  std::array<std::string, 3> triplet;  // output channel order R, G, B

  static ViewSpec natural();
  static ViewSpec false_color();
  static ViewSpec moisture();
  static ViewSpec agriculture();
  static std::vector<ViewSpec> presets();
  /// Accepts a preset name or "custom:<b1,b2,b3>".
  static ViewSpec parse(const std::string& text);
};

/// 3 x height x width normalized channels in [0, 255].
struct ViewImage {
  ViewSpec spec;
  std::size_t width = 0;
  std::size_t height = 0;
  std::array<std::vector<double>, 3> channels;

  double at(std::size_t channel, std::size_t row, std::size_t col) const {
    return channels[channel][row * width + col];
  }
};

inline constexpr double kNormalizeCeiling = 3000.0;

/// clamp(raw, 0, 3000) scaled linearly onto [0, 255].
inline double normalize_value(double raw) {
  const double c = raw < 0.0 ? 0.0 : (raw > kNormalizeCeiling ? kNormalizeCeiling : raw);
  return c * 255.0 / kNormalizeCeiling;
}

std::vector<double> normalize_band(std::span<const std::uint16_t> raw);

ViewImage compose_view(const BandRaster& raster, const ViewSpec& view);

/// Raster as a rank-3 (bands, height, width) u16 BTSR plus "<stem>.bands.json".
void save_raster(const std::filesystem::path& path, const BandRaster& raster);
BandRaster load_raster(const std::filesystem::path& path);

/// ViewImage as rank-3 (3, height, width) f64 BTSR.
void save_view_btsr(const std::filesystem::path& path, const ViewImage& view);
/// 8-bit RGB PNG; values rounded half-to-even.
void save_view_png(const std::filesystem::path& path, const ViewImage& view);
std::uint8_t quantize_channel(double value);

}  // namespace mvuq::raster
