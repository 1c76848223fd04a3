#include "mvuq/table_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "mvuq/error.hpp"
#include "mvuq/tensor_io.hpp"

namespace mvuq::table {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    std::string cell = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    const auto first = cell.find_first_not_of(" \t");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

double parse_number(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    if (s == "nan" || s == "NaN") return std::nan("");
    throw Error(Errc::Format, where + ": '" + s + "' is not a number");
  }
  return v;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(Errc::Format, "missing column '" + name + "'");
}

bool Table::has_column(const std::string& name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

std::vector<std::string> Table::strings(const std::string& name) const {
  const auto c = column(name);
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

std::vector<double> Table::numbers(const std::string& name) const {
  const auto c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back(parse_number(rows[i][c], "column '" + name + "' row " + std::to_string(i + 1)));
  }
  return out;
}

Table parse_csv(const std::string& text, const std::string& origin) {
  Table t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw Error(Errc::Format, origin + ":" + std::to_string(lineno) + ": expected " +
                                    std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw Error(Errc::Format, origin + ": empty table");
  return t;
}

Table read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path), path.string()); }

void write_csv(const std::filesystem::path& path, const Table& table) {
  std::string out;
  auto append_row = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  append_row(table.header);
  for (const auto& r : table.rows) append_row(r);
  write_text_file(path, out);
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(Errc::InvalidArgument, "cannot format number");
  return std::string(buf, ptr);
}

Targets read_targets(const std::filesystem::path& path, const std::string& value_column) {
  const Table t = read_csv(path);
  Targets out;
  out.ids = t.strings("location_id");
  out.values = t.numbers(value_column);
  return out;
}

void write_targets(const std::filesystem::path& path, const Targets& targets, const std::string& value_column) {
  if (targets.ids.size() != targets.values.size()) throw Error(Errc::LengthMismatch, "ids and values differ in length");
  Table t;
  t.header = {"location_id", value_column};
  for (std::size_t i = 0; i < targets.ids.size(); ++i) t.rows.push_back({targets.ids[i], format_number(targets.values[i])});
  write_csv(path, t);
}

std::vector<double> align_targets(const Targets& targets, const std::vector<std::string>& row_ids) {
  std::unordered_map<std::string, double> by_id;
  for (std::size_t i = 0; i < targets.ids.size(); ++i) by_id.emplace(targets.ids[i], targets.values[i]);
  std::vector<double> out;
  out.reserve(row_ids.size());
  for (const auto& id : row_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(Errc::ManifestMismatch, "no target for location '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<std::string>& ids,
                       std::span<const PredictiveDistribution> dists) {
  if (ids.size() != dists.size()) throw Error(Errc::LengthMismatch, "ids and predictions differ in length");
  Table t;
  t.header = {"location_id", "mu", "var"};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    t.rows.push_back({ids[i], format_number(dists[i].mean()), format_number(dists[i].variance())});
  }
  write_csv(path, t);
}

}  // namespace mvuq::table
