#include "kahs/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>

#include <fmt/format.h>

#include "kahs/errors.hpp"

namespace kahs {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (std::size_t{1} << 32)) throw IoError(fmt::format("PGM {} too large", what), start);
      ++pos_;
    }
    if (pos_ == start) throw IoError(fmt::format("PGM header: expected {}", what), pos_);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }
  std::uint8_t peek() const { return bytes_[pos_]; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw IoError("not a binary PGM (missing P5 magic)", 0);
  }
  HeaderReader reader(bytes.subspan(0));
  reader.advance();
  reader.advance();
  GrayImage img;
  img.width = reader.number("width");
  img.height = reader.number("height");
  const std::size_t start = reader.pos();
  const std::size_t maxval = reader.number("maxval");
  if (maxval != 255) throw IoError(fmt::format("PGM maxval {} unsupported (need 255)", maxval), start);
  if (img.width == 0 || img.height == 0) throw IoError("PGM has zero size", start);
  if (reader.at_end() || !std::isspace(reader.peek())) {
    throw IoError("PGM header must end with one whitespace byte", reader.pos());
  }
  reader.advance();
  const std::size_t offset = reader.pos();
  const std::size_t count = img.width * img.height;
  if (bytes.size() - offset < count) {
    throw IoError(fmt::format("PGM raster truncated: expected {} bytes, found {}", count,
                              bytes.size() - offset),
                  bytes.size());
  }
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                    bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return img;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()), 0);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_pgm(bytes);
  } catch (const IoError& e) {
    throw IoError(fmt::format("{}: {} (byte offset {})", path.string(), e.what(), e.offset()),
                  e.offset());
  }
}

void write_pgm(const GrayImage& image, std::ostream& out) {
  if (image.pixels.size() != image.width * image.height) {
    throw DimensionError("image pixel count does not match its dimensions");
  }
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()), 0);
  write_pgm(image, out);
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()), 0);
}

GrayImage to_gray_image(std::span<const double> values, std::size_t width, std::size_t height) {
  if (values.size() != width * height) throw DimensionError("value count does not match image size");
  GrayImage img{width, height, std::vector<std::uint8_t>(values.size())};
  for (std::size_t i = 0; i < values.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::round(values[i]), 0.0, 255.0));
  }
  return img;
}

}  // namespace kahs
