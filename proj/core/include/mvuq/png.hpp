#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mvuq {

/// Writes interleaved 8-bit RGB rows (height * width * 3 bytes).
void write_png_rgb(const std::filesystem::path& path, std::size_t width, std::size_t height,
                   const std::vector<std::uint8_t>& rgb);

}  // namespace mvuq
