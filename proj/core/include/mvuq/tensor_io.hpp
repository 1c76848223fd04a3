#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace mvuq {

enum class DType : std::uint8_t { F64 = 0, U16 = 1 };

/// Dense row-major tensor as stored in a BTSR v1 container.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::variant<std::vector<double>, std::vector<std::uint16_t>> data;

  DType dtype() const { return data.index() == 0 ? DType::F64 : DType::U16; }
  std::uint64_t element_count() const;
  /// Element as double regardless of storage type.
  double at(std::size_t flat) const;
};

/// BTSR v1 layout (little-endian): "BTSR", u32 version, u32 rank,
/// rank x u64 dims, u8 dtype, row-major payload.
std::vector<std::uint8_t> encode_btsr(const Tensor& t);
Tensor decode_btsr(const std::vector<std::uint8_t>& bytes);

void write_btsr(const std::filesystem::path& path, const Tensor& t);
Tensor read_btsr(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Sidecar path: "<dir>/<stem><suffix>", e.g. a.btsr -> a.bands.json.
std::filesystem::path sidecar_path(const std::filesystem::path& path, const std::string& suffix);

}  // namespace mvuq
