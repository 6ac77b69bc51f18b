#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "nrtrack/image.hpp"
#include "nrtrack/mesh.hpp"

namespace nrtrack {

/// Registered colour + depth pair. Depth 0 marks an invalid sample.
struct RgbdFrame {
  ColorImage color;
  DepthImage depth;

  int width() const { return depth.width; }
  int height() const { return depth.height; }
  bool valid(int col, int row) const { return depth.at(col, row) != 0; }
};

struct Pixel {
  int col = 0;
  int row = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct Segmentation {
  Bitmap foreground;
  std::vector<Pixel> boundary;  // foreground pixels 4-adjacent to background (or the image border)
  std::vector<int> nearest;     // per image pixel: index into `boundary`

  int width() const { return foreground.width; }
  int height() const { return foreground.height; }
  const Pixel& nearest_boundary(int col, int row) const { return boundary[nearest[foreground.index(col, row)]]; }
};

struct SegmentOptions {
  // Background components enclosed by the object and no larger than this are
  // absorbed into the foreground (sensor dropouts). 0 disables filling.
  int maxHoleArea = 16;
};

/// Bilinear depth lookup; invalid neighbours are dropped and the remaining
/// weights renormalised. Returns nullopt when all four neighbours are invalid.
std::optional<double> sample_depth(const RgbdFrame& frame, double x, double y);
std::optional<double> sample_depth(const DepthImage& depth, double x, double y);

/// Depth band [zNear, zFar] followed by largest 4-connected component.
Segmentation segment_foreground(const RgbdFrame& frame, double zNear, double zFar, const SegmentOptions& opts = {});

/// Boundary pixels and the exact Euclidean nearest-boundary field of a mask.
Segmentation segmentation_from_mask(Bitmap foreground);

/// Exact Euclidean feature transform: for every pixel, the index (into
/// `sites`) of a nearest site. Separable lower-envelope algorithm.
std::vector<int> nearest_site_transform(int width, int height, const std::vector<Pixel>& sites);

/// Nearest current-frame boundary pixel of (v.x, v.y), lifted to 3D with its depth.
Vertex3 nearest_boundary_point3d(const Segmentation& seg, const RgbdFrame& frame, const Vertex3& v);

}  // namespace nrtrack
