#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvuq/features.hpp"

namespace mvuq::features {

/// Contents of "<stem>.manifest.json".
struct FmxManifest {
  std::vector<std::string> location_ids;
  std::string view;
  std::string provenance;  // informational; imports are always tagged imported
  std::string pooling;     // recorded by external exporters
  std::vector<ViewBlock> blocks;
};

/// XXH64 (seed 0) of the raw little-endian f64 payload.
std::uint64_t fmx_checksum(std::span<const double> payload);

/// FMX v1: "FMX1", u32 version, u64 n, u64 d, u8 dtype (0 = f64),
/// u64 checksum, row-major payload. No finiteness validation on write.
std::vector<std::uint8_t> encode_fmx(std::uint64_t n, std::uint64_t d, std::span<const double> row_major);
void write_fmx(const std::filesystem::path& path, std::uint64_t n, std::uint64_t d,
               std::span<const double> row_major, const FmxManifest& manifest);
void write_manifest(const std::filesystem::path& path, const FmxManifest& manifest);
FmxManifest read_manifest(const std::filesystem::path& path);

void save_features(const std::filesystem::path& path, const FeatureMatrix& m);

/// Validates header, payload length, checksum and finiteness. The manifest
/// defaults to the "<stem>.manifest.json" sidecar; without one rows are
/// labelled by index.
FeatureMatrix import_features(const std::filesystem::path& path,
                              const std::optional<std::filesystem::path>& manifest = std::nullopt);

}  // namespace mvuq::features
