#include <gtest/gtest.h>

#include <png.h>

#include <random>

#include "mvuq/error.hpp"
#include "mvuq/raster.hpp"
#include "mvuq/tensor_io.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace mvuq;
using namespace mvuq::raster;
using testing_support::TempDir;

namespace {

// 13 Sentinel-2 bands where band b is filled with the numeric value of its label.
BandRaster label_filled(std::size_t w, std::size_t h) {
  std::vector<std::vector<std::uint16_t>> data;
  for (const auto& b : sentinel2_bands()) {
    const int v = b.label == "8A" ? 8 : std::stoi(b.label);
    data.emplace_back(w * h, static_cast<std::uint16_t>(v));
  }
  return BandRaster(w, h, sentinel2_bands(), std::move(data));
}

BandRaster random_raster(std::mt19937_64& gen, std::size_t w, std::size_t h) {
  std::uniform_int_distribution<int> dn(0, 4095);
  std::vector<std::vector<std::uint16_t>> data;
  for (std::size_t b = 0; b < sentinel2_bands().size(); ++b) {
    std::vector<std::uint16_t> grid(w * h);
    for (auto& v : grid) v = static_cast<std::uint16_t>(dn(gen));
    data.push_back(std::move(grid));
  }
  return BandRaster(w, h, sentinel2_bands(), std::move(data));
}

BandRaster flipped(const BandRaster& r, bool horizontal) {
  std::vector<std::vector<std::uint16_t>> data;
  for (const auto& grid : r.data()) {
    std::vector<std::uint16_t> out(grid.size());
    for (std::size_t y = 0; y < r.height(); ++y) {
      for (std::size_t x = 0; x < r.width(); ++x) {
        const std::size_t sx = horizontal ? r.width() - 1 - x : x;
        const std::size_t sy = horizontal ? y : r.height() - 1 - y;
        out[y * r.width() + x] = grid[sy * r.width() + sx];
      }
    }
    data.push_back(std::move(out));
  }
  return BandRaster(r.width(), r.height(), r.bands(), std::move(data));
}

}  // namespace

TEST(SentinelBands, MatchAppendixTable) {
  struct Row {
    const char* label;
    double nm;
    double res;
  };
  // Central wavelength (nm) and resolution (m) per band label.
  const Row expected[] = {{"1", 443, 60},  {"2", 494, 10},   {"3", 560, 10},   {"4", 665, 10},  {"5", 703, 20},
                          {"6", 740, 20},  {"7", 782, 20},   {"8", 835, 10},   {"8A", 864, 20}, {"9", 945, 60},
                          {"11", 1610, 20}, {"12", 2190, 20}, {"10", 1375, 60}};
  ASSERT_EQ(sentinel2_bands().size(), 13u);
  for (const auto& e : expected) {
    const auto b = band(e.label);
    EXPECT_EQ(b.wavelength_nm, e.nm) << e.label;
    EXPECT_EQ(b.resolution_m, e.res) << e.label;
  }
  EXPECT_NE(band("8").wavelength_nm, band("8A").wavelength_nm);
}

TEST(Normalize, FixedPointsAreBitExact) {
  EXPECT_EQ(normalize_value(0), 0.0);
  EXPECT_EQ(normalize_value(3000), 255.0);
  EXPECT_EQ(normalize_value(4500), 255.0);
  EXPECT_EQ(normalize_value(1500), 127.5);
}

TEST(Normalize, MonotoneAndIdempotentAfterInverse) {
  double prev = -1.0;
  for (int raw = 0; raw <= 4095; ++raw) {
    const double v = normalize_value(raw);
    EXPECT_GE(v, prev);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 255.0);
    const double back = v * 3000.0 / 255.0;
    EXPECT_NEAR(normalize_value(back), v, 1e-12);
    prev = v;
  }
}

TEST(Normalize, BandKeepsRealValues) {
  const std::vector<std::uint16_t> raw{0, 1, 3000, 4095};
  const auto out = normalize_band(raw);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_DOUBLE_EQ(out[1], 0.085);
  EXPECT_EQ(out[3], 255.0);
}

TEST(ComposeView, ConstantFillPropagates) {
  const auto r = label_filled(4, 3);
  const auto nat = compose_view(r, ViewSpec::natural());
  EXPECT_EQ(nat.width, 4u);
  EXPECT_EQ(nat.height, 3u);
  for (double v : nat.channels[0]) EXPECT_DOUBLE_EQ(v, 0.34);
  for (double v : nat.channels[1]) EXPECT_DOUBLE_EQ(v, 0.255);
  for (double v : nat.channels[2]) EXPECT_DOUBLE_EQ(v, 0.17);
  const auto fc = compose_view(r, ViewSpec::false_color());
  EXPECT_DOUBLE_EQ(fc.channels[0][0], 0.68);
  EXPECT_DOUBLE_EQ(fc.channels[1][0], 0.34);
  EXPECT_DOUBLE_EQ(fc.channels[2][0], 0.17);
}

TEST(ComposeView, MissingBandIsReported) {
  const auto r = label_filled(2, 2);
  try {
    compose_view(r, ViewSpec::parse("custom:4,14,2"));
    FAIL() << "expected MissingBand";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingBand);
    EXPECT_NE(std::string(e.what()).find("14"), std::string::npos);
  }
}

TEST(ComposeView, PresetsMatchViewList) {
  EXPECT_EQ(ViewSpec::natural().triplet, (std::array<std::string, 3>{"4", "3", "2"}));
  EXPECT_EQ(ViewSpec::false_color().triplet, (std::array<std::string, 3>{"8", "4", "2"}));
  EXPECT_EQ(ViewSpec::moisture().triplet, (std::array<std::string, 3>{"12", "1", "3"}));
  EXPECT_EQ(ViewSpec::agriculture().triplet, (std::array<std::string, 3>{"11", "8", "2"}));
  EXPECT_THROW(ViewSpec::parse("custom:1,2"), Error);
  EXPECT_THROW(ViewSpec::parse("infrared"), Error);
}

TEST(ComposeView, FlipEquivarianceOnRandomRasters) {
  std::mt19937_64 gen(20240611);
  std::uniform_int_distribution<std::size_t> size(1, 9);
  const auto views = ViewSpec::presets();
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = random_raster(gen, size(gen), size(gen));
    const auto& spec = views[static_cast<std::size_t>(trial) % views.size()];
    const auto base = compose_view(r, spec);
    for (bool horizontal : {true, false}) {
      const auto flipped_view = compose_view(flipped(r, horizontal), spec);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        for (std::size_t y = 0; y < r.height(); ++y) {
          for (std::size_t x = 0; x < r.width(); ++x) {
            const std::size_t sx = horizontal ? r.width() - 1 - x : x;
            const std::size_t sy = horizontal ? y : r.height() - 1 - y;
            ASSERT_EQ(flipped_view.at(ch, y, x), base.at(ch, sy, sx));
          }
        }
      }
    }
    const auto again = compose_view(r, spec);
    ASSERT_EQ(again.channels, base.channels);
  }
}

TEST(BandRasterInvariants, RejectsBadShapes) {
  EXPECT_THROW(BandRaster(2, 2, {band("4")}, {std::vector<std::uint16_t>(3)}), Error);
  EXPECT_THROW(BandRaster(1, 1, {band("4"), band("4")}, {{1}, {2}}), Error);
}

TEST(Resample, NearestNeighbourUpsamplesToFinestGrid) {
  // 2x2 band at 20 m next to a 4x4 band at 10 m
  std::vector<NativeBand> bands;
  bands.push_back({band("4"), 4, 4, std::vector<std::uint16_t>(16, 7)});
  bands.push_back({band("11"), 2, 2, {1, 2, 3, 4}});
  const auto r = assemble(std::move(bands));
  ASSERT_EQ(r.width(), 4u);
  const auto b11 = r.band_data(*r.band_index("11"));
  const std::vector<std::uint16_t> expect{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  EXPECT_EQ(std::vector<std::uint16_t>(b11.begin(), b11.end()), expect);
}

TEST(RasterIo, RoundTripIsLosslessAndByteIdentical) {
  TempDir dir;
  std::mt19937_64 gen(3);
  auto r = random_raster(gen, 2, 2);
  r.crs_tag = "EPSG:4326";
  r.origin_lon = 36.8;
  r.origin_lat = -1.3;
  r.ground_size_m = 20;
  save_raster(dir / "a.btsr", r);
  const auto back = load_raster(dir / "a.btsr");
  EXPECT_EQ(back.data(), r.data());
  EXPECT_EQ(back.bands().size(), 13u);
  EXPECT_EQ(back.crs_tag, "EPSG:4326");
  EXPECT_DOUBLE_EQ(back.origin_lon, 36.8);
  save_raster(dir / "b.btsr", back);
  EXPECT_EQ(read_file_bytes(dir / "a.btsr"), read_file_bytes(dir / "b.btsr"));
  EXPECT_EQ(read_text_file(dir / "a.bands.json"), read_text_file(dir / "b.bands.json"));
}

TEST(RasterIo, TruncatedFileGivesFormatErrorWithOffset) {
  TempDir dir;
  std::mt19937_64 gen(4);
  save_raster(dir / "a.btsr", random_raster(gen, 2, 2));
  auto bytes = read_file_bytes(dir / "a.btsr");
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() - 1}) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    write_file_bytes(dir / "a.btsr", part);
    try {
      load_raster(dir / "a.btsr");
      FAIL() << "truncation at " << cut << " not detected";
    } catch (const FormatError& e) {
      EXPECT_LE(e.offset(), bytes.size());
    }
  }
}

TEST(RasterIo, MissingFileIsIoError) {
  try {
    load_raster("/nonexistent/x.btsr");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Io);
  }
}

TEST(TensorIo, F64RoundTripByteIdentical) {
  Tensor t{{2, 3}, std::vector<double>{0.1, -2.5, 1e300, 0.0, -0.0, 3.25}};
  const auto bytes = encode_btsr(t);
  const auto back = decode_btsr(bytes);
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(encode_btsr(back), bytes);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BTSR");
}

TEST(PngExport, RoundsHalfToEven) {
  for (double v : {0.0, 0.5, 1.5, 2.5, 126.5, 127.5, 128.49, 254.5, 255.0}) {
    EXPECT_EQ(quantize_channel(v), oracle::round_half_even(v)) << v;
  }
  EXPECT_EQ(quantize_channel(127.5), 128);

  TempDir dir;
  ViewImage img;
  img.spec = ViewSpec::natural();
  img.width = 2;
  img.height = 1;
  img.channels = {std::vector<double>{127.5, 0.0}, std::vector<double>{126.5, 255.0}, std::vector<double>{1.5, 3.0}};
  save_view_png(dir / "v.png", img);

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  ASSERT_TRUE(png_image_begin_read_from_file(&image, (dir / "v.png").c_str()));
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  ASSERT_TRUE(png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr));
  ASSERT_EQ(buf.size(), 6u);
  EXPECT_EQ(buf[0], 128);
  EXPECT_EQ(buf[1], 126);
  EXPECT_EQ(buf[2], 2);
  EXPECT_EQ(buf[4], 255);
}
