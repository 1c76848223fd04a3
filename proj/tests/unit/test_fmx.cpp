#include <gtest/gtest.h>

#include <cstring>
#include <limits>
#include <random>

#include "mvuq/error.hpp"
#include "mvuq/fmx.hpp"
#include "mvuq/tensor_io.hpp"
#include "tempdir.hpp"

using namespace mvuq;
using namespace mvuq::features;
using testing_support::TempDir;

namespace {

std::vector<double> random_payload(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(gen);
  return v;
}

void put_u64(std::vector<std::uint8_t>& b, std::size_t off, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b[off + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

TEST(Fmx, HeaderLayout) {
  const std::vector<double> payload{1.0, 2.0};
  const auto bytes = encode_fmx(1, 2, payload);
  ASSERT_EQ(bytes.size(), 4u + 4 + 8 + 8 + 1 + 8 + 16);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FMX1");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian
  EXPECT_EQ(bytes[8], 1);  // n
  EXPECT_EQ(bytes[16], 2);  // d
  EXPECT_EQ(bytes[24], 0);  // dtype f64
  std::uint64_t sum = 0;
  for (int i = 7; i >= 0; --i) sum = (sum << 8) | bytes[25 + static_cast<std::size_t>(i)];
  EXPECT_EQ(sum, fmx_checksum(payload));
  double first;
  std::memcpy(&first, bytes.data() + 33, 8);
  EXPECT_EQ(first, 1.0);
}

TEST(Fmx, ExporterStyleFileImports) {
  // what an external exporter writes: 5 x 768 plus manifest
  TempDir dir;
  const auto payload = random_payload(5 * 768, 1);
  FmxManifest m;
  for (int i = 0; i < 5; ++i) m.location_ids.push_back("cluster_" + std::to_string(i));
  m.view = "natural";
  m.provenance = "dinov2_vitb14";
  m.pooling = "cls";
  write_fmx(dir / "feats.fmx", 5, 768, payload, m);
  const auto fm = import_features(dir / "feats.fmx");
  EXPECT_EQ(fm.n(), 5u);
  EXPECT_EQ(fm.d(), 768u);
  EXPECT_EQ(fm.provenance(), Provenance::Imported);
  EXPECT_EQ(fm.row_ids()[4], "cluster_4");
  EXPECT_EQ(fm.view_name(), "natural");
  EXPECT_EQ(fm.values()(3, 700), payload[3 * 768 + 700]);
}

TEST(Fmx, RoundTripIsByteIdentical) {
  TempDir dir;
  const auto payload = random_payload(7 * 3, 2);
  FmxManifest m;
  m.location_ids = {"a", "b", "c", "d", "e", "f", "g"};
  m.view = "fused";
  write_fmx(dir / "x.fmx", 7, 3, payload, m);
  const auto fm = import_features(dir / "x.fmx");
  save_features(dir / "y.fmx", fm);
  EXPECT_EQ(read_file_bytes(dir / "x.fmx"), read_file_bytes(dir / "y.fmx"));
}

TEST(Fmx, MissingManifestLabelsRowsByIndex) {
  TempDir dir;
  write_file_bytes(dir / "bare.fmx", encode_fmx(2, 1, std::vector<double>{3.0, 4.0}));
  const auto fm = import_features(dir / "bare.fmx");
  EXPECT_EQ(fm.row_ids(), (std::vector<std::string>{"0", "1"}));
}

TEST(Fmx, NaNIsNonFiniteValueWithPosition) {
  TempDir dir;
  auto payload = random_payload(6, 3);
  payload[4] = std::numeric_limits<double>::quiet_NaN();
  write_file_bytes(dir / "nan.fmx", encode_fmx(3, 2, payload));
  try {
    import_features(dir / "nan.fmx");
    FAIL();
  } catch (const NonFiniteValueError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.col(), 0u);
  }
}

TEST(Fmx, CorruptPayloadIsChecksumMismatch) {
  TempDir dir;
  auto bytes = encode_fmx(2, 2, random_payload(4, 4));
  bytes.back() ^= 0x01;
  write_file_bytes(dir / "bad.fmx", bytes);
  try {
    import_features(dir / "bad.fmx");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ChecksumMismatch);
  }
}

TEST(Fmx, ShapeDisagreementIsFormatError) {
  TempDir dir;
  auto bytes = encode_fmx(2, 2, random_payload(4, 5));
  put_u64(bytes, 8, 3);  // claim three rows
  write_file_bytes(dir / "short.fmx", bytes);
  EXPECT_THROW(import_features(dir / "short.fmx"), FormatError);

  auto magic = encode_fmx(1, 1, std::vector<double>{1.0});
  magic[0] = 'X';
  write_file_bytes(dir / "magic.fmx", magic);
  try {
    import_features(dir / "magic.fmx");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Fmx, ManifestRowCountMustMatch) {
  TempDir dir;
  FmxManifest m;
  m.location_ids = {"only_one"};
  write_fmx(dir / "m.fmx", 2, 1, std::vector<double>{1.0, 2.0}, m);
  try {
    import_features(dir / "m.fmx");
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == Errc::RowCountMismatch || e.code() == Errc::ManifestMismatch);
  }
}
