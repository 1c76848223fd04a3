#include "mvuq/raster.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "mvuq/error.hpp"
#include "mvuq/png.hpp"
#include "mvuq/tensor_io.hpp"

namespace mvuq::raster {

using nlohmann::json;

const std::vector<BandId>& sentinel2_bands() {
  static const std::vector<BandId> table = {
      {"1", 443, 60},  {"2", 494, 10},  {"3", 560, 10},   {"4", 665, 10},   {"5", 703, 20},
      {"6", 740, 20},  {"7", 782, 20},  {"8", 835, 10},   {"8A", 864, 20},  {"9", 945, 60},
      {"11", 1610, 20}, {"12", 2190, 20}, {"10", 1375, 60},
  };
  return table;
}

BandId band(const std::string& label) {
  for (const auto& b : sentinel2_bands()) {
    if (b.label == label) return b;
  }
  return BandId{label, 0.0, 0.0};
}

BandRaster::BandRaster(std::size_t width, std::size_t height, std::vector<BandId> bands,
                       std::vector<std::vector<std::uint16_t>> data)
    : width_(width), height_(height), bands_(std::move(bands)), data_(std::move(data)) {
  if (bands_.size() != data_.size()) {
    throw Error(Errc::ShapeMismatch, "band list has " + std::to_string(bands_.size()) + " entries but " +
                                         std::to_string(data_.size()) + " grids were given");
  }
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    if (data_[i].size() != width_ * height_) {
      throw Error(Errc::ShapeMismatch, "band " + bands_[i].label + " has " + std::to_string(data_[i].size()) +
                                           " samples, expected " + std::to_string(width_ * height_));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (bands_[j] == bands_[i]) throw Error(Errc::InvalidArgument, "duplicate band " + bands_[i].label);
    }
  }
}

std::optional<std::size_t> BandRaster::band_index(const std::string& label) const {
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    if (bands_[i].label == label) return i;
  }
  return std::nullopt;
}

std::vector<std::uint16_t> resample_nearest(std::span<const std::uint16_t> src, std::size_t src_w,
                                            std::size_t src_h, std::size_t dst_w, std::size_t dst_h) {
  if (src.size() != src_w * src_h) throw Error(Errc::ShapeMismatch, "source grid size mismatch");
  std::vector<std::uint16_t> out(dst_w * dst_h);
  for (std::size_t r = 0; r < dst_h; ++r) {
    // Pixel-centre mapping: destination centre (r + 0.5) lands in source row floor((r + 0.5) * src_h / dst_h).
    const std::size_t sr = std::min(src_h - 1, (2 * r + 1) * src_h / (2 * dst_h));
    for (std::size_t c = 0; c < dst_w; ++c) {
      const std::size_t sc = std::min(src_w - 1, (2 * c + 1) * src_w / (2 * dst_w));
      out[r * dst_w + c] = src[sr * src_w + sc];
    }
  }
  return out;
}

BandRaster assemble(std::vector<NativeBand> bands) {
  if (bands.empty()) throw Error(Errc::InvalidArgument, "no bands to assemble");
  std::size_t w = 0, h = 0;
  for (const auto& b : bands) {
    if (b.width * b.height > w * h) {
      w = b.width;
      h = b.height;
    }
  }
  std::vector<BandId> ids;
  std::vector<std::vector<std::uint16_t>> grids;
  for (auto& b : bands) {
    ids.push_back(b.id);
    if (b.width == w && b.height == h) {
      grids.push_back(std::move(b.values));
    } else {
      grids.push_back(resample_nearest(b.values, b.width, b.height, w, h));
    }
  }
  return BandRaster(w, h, std::move(ids), std::move(grids));
}

ViewSpec ViewSpec::natural() { return {"natural", {"4", "3", "2"}}; }
ViewSpec ViewSpec::false_color() { return {"false_color", {"8", "4", "2"}}; }
ViewSpec ViewSpec::moisture() { return {"moisture", {"12", "1", "3"}}; }
ViewSpec ViewSpec::agriculture() { return {"agriculture", {"11", "8", "2"}}; }

std::vector<ViewSpec> ViewSpec::presets() { return {natural(), false_color(), moisture(), agriculture()}; }

ViewSpec ViewSpec::parse(const std::string& text) {
  for (auto& p : presets()) {
    if (p.name == text) return p;
  }
  const std::string prefix = "custom:";
  if (text.rfind(prefix, 0) == 0) {
    std::vector<std::string> parts;
    std::stringstream ss(text.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 3) throw Error(Errc::InvalidArgument, "custom view needs exactly 3 bands: " + text);
    return {text, {parts[0], parts[1], parts[2]}};
  }
  throw Error(Errc::InvalidArgument,
              "unknown view '" + text + "' (natural|false_color|moisture|agriculture|custom:b1,b2,b3)");
}

std::vector<double> normalize_band(std::span<const std::uint16_t> raw) {
  std::vector<double> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(), [](std::uint16_t v) { return normalize_value(v); });
  return out;
}

ViewImage compose_view(const BandRaster& raster, const ViewSpec& view) {
  ViewImage img;
  img.spec = view;
  img.width = raster.width();
  img.height = raster.height();
  for (std::size_t k = 0; k < 3; ++k) {
    const auto idx = raster.band_index(view.triplet[k]);
    if (!idx) throw Error(Errc::MissingBand, "band " + view.triplet[k] + " not present in raster");
    const auto data = raster.band_data(*idx);
    if (data.size() != img.width * img.height) throw Error(Errc::ShapeMismatch, "band grid size mismatch");
    img.channels[k] = normalize_band(data);
  }
  return img;
}

void save_raster(const std::filesystem::path& path, const BandRaster& raster) {
  std::vector<std::uint16_t> payload;
  payload.reserve(raster.bands().size() * raster.width() * raster.height());
  for (const auto& grid : raster.data()) payload.insert(payload.end(), grid.begin(), grid.end());
  Tensor t{{raster.bands().size(), raster.height(), raster.width()}, std::move(payload)};
  write_btsr(path, t);

  json side;
  side["bands"] = json::array();
  for (const auto& b : raster.bands()) side["bands"].push_back(b.label);
  side["crs"] = raster.crs_tag;
  side["origin"] = {raster.origin_lon, raster.origin_lat};
  side["ground_size_m"] = raster.ground_size_m;
  write_text_file(sidecar_path(path, ".bands.json"), side.dump(2) + "\n");
}

BandRaster load_raster(const std::filesystem::path& path) {
  const Tensor t = read_btsr(path);
  if (t.dims.size() != 3) throw FormatError(8, "band raster must be rank 3, got rank " + std::to_string(t.dims.size()));
  const std::size_t nb = t.dims[0], h = t.dims[1], w = t.dims[2];

  const auto side_path = sidecar_path(path, ".bands.json");
  json side;
  try {
    side = json::parse(read_text_file(side_path));
  } catch (const json::exception& e) {
    throw Error(Errc::Format, side_path.string() + ": " + e.what());
  }
  const json& labels = side.is_array() ? side : side.at("bands");
  if (labels.size() != nb) {
    throw Error(Errc::Format, side_path.string() + " lists " + std::to_string(labels.size()) + " bands, tensor has " +
                                  std::to_string(nb));
  }
  std::vector<BandId> ids;
  for (const auto& l : labels) {
    if (l.is_object()) {
      ids.push_back({l.at("label").get<std::string>(), l.value("wavelength_nm", 0.0), l.value("resolution_m", 0.0)});
    } else {
      ids.push_back(band(l.get<std::string>()));
    }
  }

  std::vector<std::vector<std::uint16_t>> grids(nb, std::vector<std::uint16_t>(h * w));
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < h * w; ++i) {
      const double v = t.at(b * h * w + i);
      if (!(v >= 0.0) || v > 65535.0 || v != std::floor(v)) {
        throw Error(Errc::Format, "raw value " + std::to_string(v) + " in band " + ids[b].label +
                                      " is not a non-negative integer digital number");
      }
      grids[b][i] = static_cast<std::uint16_t>(v);
    }
  }
  BandRaster r(w, h, std::move(ids), std::move(grids));
  if (side.is_object()) {
    r.crs_tag = side.value("crs", std::string{});
    if (side.contains("origin")) {
      r.origin_lon = side["origin"].at(0).get<double>();
      r.origin_lat = side["origin"].at(1).get<double>();
    }
    r.ground_size_m = side.value("ground_size_m", 0.0);
  }
  return r;
}

void save_view_btsr(const std::filesystem::path& path, const ViewImage& view) {
  std::vector<double> payload;
  payload.reserve(3 * view.width * view.height);
  for (const auto& c : view.channels) payload.insert(payload.end(), c.begin(), c.end());
  write_btsr(path, Tensor{{3, view.height, view.width}, std::move(payload)});
}

std::uint8_t quantize_channel(double value) {
  // nearbyint honours the default round-to-nearest-even mode.
  const double r = std::nearbyint(std::clamp(value, 0.0, 255.0));
  return static_cast<std::uint8_t>(r);
}

void save_view_png(const std::filesystem::path& path, const ViewImage& view) {
  std::vector<std::uint8_t> rgb(view.width * view.height * 3);
  for (std::size_t i = 0; i < view.width * view.height; ++i) {
    for (std::size_t k = 0; k < 3; ++k) rgb[3 * i + k] = quantize_channel(view.channels[k][i]);
  }
  write_png_rgb(path, view.width, view.height, rgb);
}

}  // namespace mvuq::raster
