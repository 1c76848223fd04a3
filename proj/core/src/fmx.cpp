#include "mvuq/fmx.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#define XXH_INLINE_ALL
#include <xxhash.h>
#include <json.hpp>

#include "mvuq/error.hpp"
#include "mvuq/tensor_io.hpp"

namespace mvuq::features {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'F', 'M', 'X', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 4 + 8 + 8 + 1 + 8;

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& bytes, std::size_t at) {
  T value;
  std::memcpy(&value, bytes.data() + at, sizeof(T));
  return value;
}

}  // namespace

std::uint64_t fmx_checksum(std::span<const double> payload) {
  return XXH64(payload.data(), payload.size_bytes(), 0);
}

std::vector<std::uint8_t> encode_fmx(std::uint64_t n, std::uint64_t d, std::span<const double> row_major) {
  if (row_major.size() != n * d) throw Error(Errc::ShapeMismatch, "FMX payload does not match n x d");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + row_major.size_bytes());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put(out, kVersion);
  put(out, n);
  put(out, d);
  put(out, std::uint8_t{0});
  put(out, fmx_checksum(row_major));
  const auto* p = reinterpret_cast<const std::uint8_t*>(row_major.data());
  out.insert(out.end(), p, p + row_major.size_bytes());
  return out;
}

void write_manifest(const std::filesystem::path& path, const FmxManifest& manifest) {
  json j;
  j["location_ids"] = manifest.location_ids;
  j["view"] = manifest.view;
  if (!manifest.provenance.empty()) j["provenance"] = manifest.provenance;
  if (!manifest.pooling.empty()) j["pooling"] = manifest.pooling;
  if (!manifest.blocks.empty()) {
    j["blocks"] = json::array();
    for (const auto& b : manifest.blocks) j["blocks"].push_back({{"view", b.view}, {"begin", b.begin}, {"end", b.end}});
  }
  write_text_file(path, j.dump(2) + "\n");
}

FmxManifest read_manifest(const std::filesystem::path& path) {
  FmxManifest m;
  try {
    const json j = json::parse(read_text_file(path));
    m.location_ids = j.at("location_ids").get<std::vector<std::string>>();
    m.view = j.value("view", std::string{});
    m.provenance = j.value("provenance", std::string{});
    m.pooling = j.value("pooling", std::string{});
    if (j.contains("blocks")) {
      for (const auto& b : j["blocks"]) {
        m.blocks.push_back({b.at("view").get<std::string>(), b.at("begin").get<std::size_t>(), b.at("end").get<std::size_t>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::Format, path.string() + ": " + e.what());
  }
  return m;
}

void write_fmx(const std::filesystem::path& path, std::uint64_t n, std::uint64_t d, std::span<const double> row_major,
               const FmxManifest& manifest) {
  write_file_bytes(path, encode_fmx(n, d, row_major));
  write_manifest(sidecar_path(path, ".manifest.json"), manifest);
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = m.values();
  FmxManifest manifest{m.row_ids(), m.view_name(), to_string(m.provenance()), {}, m.blocks()};
  write_fmx(path, m.n(), m.d(), std::span<const double>(row_major.data(), static_cast<std::size_t>(row_major.size())),
            manifest);
}

FeatureMatrix import_features(const std::filesystem::path& path, const std::optional<std::filesystem::path>& manifest) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < kHeaderSize) throw FormatError(bytes.size(), "truncated FMX header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError(0, "bad FMX magic");
  if (get<std::uint32_t>(bytes, 4) != kVersion) throw FormatError(4, "unsupported FMX version");
  const auto n = get<std::uint64_t>(bytes, 8);
  const auto d = get<std::uint64_t>(bytes, 16);
  if (bytes[24] != 0) throw FormatError(24, "FMX dtype must be f64 (0)");
  const auto stored = get<std::uint64_t>(bytes, 25);
  const std::size_t payload = bytes.size() - kHeaderSize;
  if (d == 0 || n > payload / sizeof(double) / d || n * d * sizeof(double) != payload) {
    throw FormatError(kHeaderSize, "header declares " + std::to_string(n) + "x" + std::to_string(d) + " but payload has " +
                                       std::to_string(payload) + " bytes");
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values(static_cast<Eigen::Index>(n),
                                                                                static_cast<Eigen::Index>(d));
  std::memcpy(values.data(), bytes.data() + kHeaderSize, payload);
  const auto actual = fmx_checksum(std::span<const double>(values.data(), n * d));
  if (actual != stored) {
    throw Error(Errc::ChecksumMismatch, path.string() + ": stored " + std::to_string(stored) + ", computed " +
                                            std::to_string(actual));
  }
  for (std::uint64_t r = 0; r < n; ++r) {
    for (std::uint64_t c = 0; c < d; ++c) {
      if (!std::isfinite(values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)))) throw NonFiniteValueError(r, c);
    }
  }

  const auto manifest_path = manifest.value_or(sidecar_path(path, ".manifest.json"));
  FmxManifest meta;
  if (manifest || std::filesystem::exists(manifest_path)) {
    meta = read_manifest(manifest_path);
    if (meta.location_ids.size() != n) {
      throw Error(Errc::RowCountMismatch, manifest_path.string() + " lists " + std::to_string(meta.location_ids.size()) +
                                              " locations, FMX has " + std::to_string(n) + " rows");
    }
  } else {
    for (std::uint64_t i = 0; i < n; ++i) meta.location_ids.push_back(std::to_string(i));
  }
  if (meta.view.empty()) meta.view = path.stem().string();
  return FeatureMatrix(values, std::move(meta.location_ids), meta.view, Provenance::Imported, std::move(meta.blocks));
}

}  // namespace mvuq::features
