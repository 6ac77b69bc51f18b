#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace nrtrack {

/// Dense row-major raster. Pixel (col, row) lives at data[row * width + col].
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  bool contains(int col, int row) const { return col >= 0 && row >= 0 && col < width && row < height; }
  size_t index(int col, int row) const { return static_cast<size_t>(row) * width + col; }
  T& at(int col, int row) { return data[index(col, row)]; }
  const T& at(int col, int row) const { return data[index(col, row)]; }
  bool empty() const { return data.empty(); }

  friend bool operator==(const Image&, const Image&) = default;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using ColorImage = Image<Rgb>;
using DepthImage = Image<std::uint16_t>;
using Bitmap = Image<std::uint8_t>;
using FloatImage = Image<double>;

// Binary netpbm I/O. 16-bit PGM samples are big-endian per the netpbm format.
DepthImage read_pgm16(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, const DepthImage& img);
ColorImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ColorImage& img);

FloatImage to_grayscale(const ColorImage& img);

}  // namespace nrtrack
