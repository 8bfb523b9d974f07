#pragma once

// Binary PGM (P5, maxval 255) reader and writer.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace kahs {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::size_t size() const noexcept { return pixels.size(); }
  std::vector<double> to_signal() const { return {pixels.begin(), pixels.end()}; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Throws IoError carrying the byte offset where parsing failed.
GrayImage parse_pgm(std::span<const std::uint8_t> bytes);
GrayImage read_pgm(const std::filesystem::path& path);

void write_pgm(const GrayImage& image, std::ostream& out);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

/// Rounds to nearest and clips to [0, 255].
GrayImage to_gray_image(std::span<const double> values, std::size_t width, std::size_t height);

}  // namespace kahs
