#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvuq/distribution.hpp"

namespace mvuq::table {

/// Minimal comma-separated table: first line is the header, no quoting.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws Format when absent
  bool has_column(const std::string& name) const;
  std::vector<std::string> strings(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
};

Table parse_csv(const std::string& text, const std::string& origin = "<csv>");
Table read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Table& table);

/// Shortest text that parses back to the same double.
std::string format_number(double v);

struct Targets {
  std::vector<std::string> ids;
  std::vector<double> values;
};

/// Targets CSV: a "location_id" column and a numeric value column.
Targets read_targets(const std::filesystem::path& path, const std::string& value_column = "target");
void write_targets(const std::filesystem::path& path, const Targets& targets,
                   const std::string& value_column = "target");

/// Targets reordered to match row_ids; ManifestMismatch when an id is absent.
std::vector<double> align_targets(const Targets& targets, const std::vector<std::string>& row_ids);

/// location_id, mu, var; sample predictives report their moments.
void write_predictions(const std::filesystem::path& path, const std::vector<std::string>& ids,
                       std::span<const PredictiveDistribution> dists);

}  // namespace mvuq::table
