#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvuq/evaluate.hpp"
#include "mvuq/features.hpp"

namespace mvuq::pipeline {

inline constexpr const char* kVersion = "0.1.0";

/// Declarative run description. Relative paths in the TOML file are resolved
/// against the directory holding it.
struct PipelineConfig {
  std::filesystem::path source;
  std::string text;  // raw config bytes, hashed into the provenance block

  // [inputs]
  std::optional<std::filesystem::path> raster_dir;
  std::vector<std::filesystem::path> feature_files;
  std::filesystem::path targets;
  std::string target_column = "target";
  std::optional<std::filesystem::path> locations;

  // [views] / [featurize]
  std::vector<std::string> views;
  features::ConvParams conv{64, 3, 0, 0};
  bool featurize_seed_set = false;
  bool calibrate = true;

  // [models] / [evaluate] and per-model sections
  std::vector<eval::Method> models;
  eval::EvalOptions eval;
  std::vector<std::string> view_sets;  // empty = every single view plus "fused"

  // [krige]
  bool krige = false;
  std::string krige_model = "blr_conjugate";
  std::string krige_value = "posterior_mean";
  double krige_res_km = 5.0;
  std::optional<std::array<double, 4>> krige_bbox;
  std::size_t variogram_bins = 15;

  // [run]
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  std::optional<std::size_t> jobs;
  std::vector<std::string> warnings;
};

/// Throws Error(Errc::Config) on syntax errors, unknown sections or keys,
/// wrongly typed values and unknown model or view names.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// MVUQ_SEED overrides the configured seed.
void apply_environment(PipelineConfig& config);

struct Diagnostics {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

/// Path existence and view/band consistency against sidecars and manifests.
/// Reads headers and JSON sidecars only, never payloads.
Diagnostics validate(const PipelineConfig& config);

struct RunResult {
  std::filesystem::path report_json;
  std::filesystem::path report_csv;
  std::vector<std::filesystem::path> artifacts;
  eval::ScoreReport report;
};

/// compose -> featurize -> fuse -> evaluate -> (krige). Failures surface as
/// StageError naming the stage; artifacts already written are kept.
RunResult run(const PipelineConfig& config);

/// {"tool", "version", "config_hash", "seed"}; no timestamps, so identical
/// inputs give identical bytes.
std::string provenance_json(const PipelineConfig& config);

}  // namespace mvuq::pipeline
