#include "nrtrack/rgbd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>

#include "nrtrack/error.hpp"

namespace nrtrack {

std::optional<double> sample_depth(const DepthImage& depth, double x, double y) {
  if (!(x >= 0.0 && y >= 0.0 && x <= depth.width - 1 && y <= depth.height - 1))
    throw Error(ErrorCode::OutOfBounds, "depth sample outside image");
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, depth.width - 1);
  const int y1 = std::min(y0 + 1, depth.height - 1);
  const double fx = x - x0, fy = y - y0;

  const int cs[4] = {x0, x1, x0, x1};
  const int rs[4] = {y0, y0, y1, y1};
  const double ws[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  double sum = 0.0, weight = 0.0, plain = 0.0;
  int valid = 0;
  for (int n = 0; n < 4; ++n) {
    const std::uint16_t d = depth.at(cs[n], rs[n]);
    if (d == 0) continue;
    sum += ws[n] * d;
    weight += ws[n];
    plain += d;
    ++valid;
  }
  if (valid == 0) return std::nullopt;
  // Only zero-weight neighbours are valid: fall back to their plain mean.
  if (weight <= 1e-12) return plain / valid;
  return sum / weight;
}

std::optional<double> sample_depth(const RgbdFrame& frame, double x, double y) { return sample_depth(frame.depth, x, y); }

namespace {

constexpr int kDc[4] = {1, -1, 0, 0};
constexpr int kDr[4] = {0, 0, 1, -1};

// Labels 4-connected components of pixels where `member(c, r)` holds.
template <typename Pred>
std::vector<std::vector<int>> components(int w, int h, Pred member) {
  std::vector<std::vector<int>> out;
  std::vector<char> seen(static_cast<size_t>(w) * h, 0);
  std::queue<int> q;
  for (int start = 0; start < w * h; ++start) {
    if (seen[start] || !member(start % w, start / w)) continue;
    std::vector<int> comp;
    seen[start] = 1;
    q.push(start);
    while (!q.empty()) {
      const int p = q.front();
      q.pop();
      comp.push_back(p);
      const int c = p % w, r = p / w;
      for (int k = 0; k < 4; ++k) {
        const int nc = c + kDc[k], nr = r + kDr[k];
        if (nc < 0 || nr < 0 || nc >= w || nr >= h) continue;
        const int np = nr * w + nc;
        if (seen[np] || !member(nc, nr)) continue;
        seen[np] = 1;
        q.push(np);
      }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace

std::vector<int> nearest_site_transform(int width, int height, const std::vector<Pixel>& sites) {
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  const size_t count = static_cast<size_t>(width) * height;
  std::vector<int> siteAt(count, -1);
  for (size_t s = 0; s < sites.size(); ++s) siteAt[static_cast<size_t>(sites[s].row) * width + sites[s].col] = static_cast<int>(s);

  // Column pass: nearest site within the same column.
  std::vector<std::int64_t> colDist(count, kInf);
  std::vector<int> colSite(count, -1);
  for (int c = 0; c < width; ++c) {
    int last = -1;
    for (int r = 0; r < height; ++r) {
      const size_t p = static_cast<size_t>(r) * width + c;
      if (siteAt[p] >= 0) last = r;
      if (last >= 0) {
        colDist[p] = static_cast<std::int64_t>(r - last) * (r - last);
        colSite[p] = siteAt[static_cast<size_t>(last) * width + c];
      }
    }
    last = -1;
    for (int r = height - 1; r >= 0; --r) {
      const size_t p = static_cast<size_t>(r) * width + c;
      if (siteAt[p] >= 0) last = r;
      if (last >= 0) {
        const std::int64_t d = static_cast<std::int64_t>(last - r) * (last - r);
        if (d < colDist[p]) {
          colDist[p] = d;
          colSite[p] = siteAt[static_cast<size_t>(last) * width + c];
        }
      }
    }
  }

  // Row pass: lower envelope of parabolas (c - q)^2 + colDist(q).
  std::vector<int> result(count, -1);
  std::vector<int> hull(width);
  std::vector<double> breaks(width + 1);
  for (int r = 0; r < height; ++r) {
    auto f = [&](int q) { return colDist[static_cast<size_t>(r) * width + q]; };
    int k = -1;
    for (int q = 0; q < width; ++q) {
      if (f(q) >= kInf) continue;
      while (k >= 0) {
        const int p = hull[k];
        const double s = ((f(q) + static_cast<double>(q) * q) - (f(p) + static_cast<double>(p) * p)) / (2.0 * (q - p));
        if (s <= breaks[k]) {
          --k;
        } else {
          break;
        }
      }
      ++k;
      hull[k] = q;
      if (k == 0) {
        breaks[0] = -std::numeric_limits<double>::infinity();
      } else {
        const int p = hull[k - 1];
        breaks[k] = ((f(q) + static_cast<double>(q) * q) - (f(p) + static_cast<double>(p) * p)) / (2.0 * (q - p));
      }
    }
    if (k < 0) continue;
    int j = 0;
    for (int c = 0; c < width; ++c) {
      while (j < k && breaks[j + 1] < c) ++j;
      result[static_cast<size_t>(r) * width + c] = colSite[static_cast<size_t>(r) * width + hull[j]];
    }
  }
  return result;
}

Segmentation segmentation_from_mask(Bitmap foreground) {
  Segmentation seg;
  seg.foreground = std::move(foreground);
  const int w = seg.width(), h = seg.height();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!seg.foreground.at(c, r)) continue;
      bool edge = false;
      for (int k = 0; k < 4 && !edge; ++k) {
        const int nc = c + kDc[k], nr = r + kDr[k];
        edge = !seg.foreground.contains(nc, nr) || !seg.foreground.at(nc, nr);
      }
      if (edge) seg.boundary.push_back({c, r});
    }
  }
  if (seg.boundary.empty()) throw Error(ErrorCode::NoForeground, "segmentation is empty");
  seg.nearest = nearest_site_transform(w, h, seg.boundary);
  return seg;
}

Segmentation segment_foreground(const RgbdFrame& frame, double zNear, double zFar, const SegmentOptions& opts) {
  if (!(zNear < zFar)) throw Error(ErrorCode::InvalidArgument, "zNear must be < zFar");
  const int w = frame.width(), h = frame.height();
  auto inBand = [&](int c, int r) {
    const auto d = frame.depth.at(c, r);
    return d != 0 && d >= zNear && d <= zFar;
  };
  const auto comps = components(w, h, inBand);
  if (comps.empty()) throw Error(ErrorCode::NoForeground, "no pixel inside the depth band");
  // Components come out in order of their smallest pixel index, so a strict
  // comparison keeps the earliest of equally large components.
  size_t best = 0;
  for (size_t i = 1; i < comps.size(); ++i)
    if (comps[i].size() > comps[best].size()) best = i;

  Bitmap mask(w, h, 0);
  for (int p : comps[best]) mask.data[p] = 1;

  if (opts.maxHoleArea > 0) {
    const auto holes = components(w, h, [&](int c, int r) { return mask.at(c, r) == 0; });
    for (const auto& hole : holes) {
      if (static_cast<int>(hole.size()) > opts.maxHoleArea) continue;
      const bool touchesBorder = std::any_of(hole.begin(), hole.end(), [&](int p) {
        const int c = p % w, r = p / w;
        return c == 0 || r == 0 || c == w - 1 || r == h - 1;
      });
      if (touchesBorder) continue;
      for (int p : hole) mask.data[p] = 1;
    }
  }
  return segmentation_from_mask(std::move(mask));
}

Vertex3 nearest_boundary_point3d(const Segmentation& seg, const RgbdFrame& frame, const Vertex3& v) {
  const int c = static_cast<int>(std::lround(v.x()));
  const int r = static_cast<int>(std::lround(v.y()));
  if (!seg.foreground.contains(c, r)) throw Error(ErrorCode::OutOfBounds, "boundary lookup outside image");
  if (seg.boundary.empty()) throw Error(ErrorCode::NoForeground, "segmentation has no boundary");
  const Pixel& b = seg.nearest_boundary(c, r);
  if (frame.valid(b.col, b.row)) return {static_cast<double>(b.col), static_cast<double>(b.row), static_cast<double>(frame.depth.at(b.col, b.row))};

  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  const Pixel* pick = nullptr;
  for (const auto& p : seg.boundary) {
    if (!frame.valid(p.col, p.row)) continue;
    const std::int64_t d = static_cast<std::int64_t>(p.col - c) * (p.col - c) + static_cast<std::int64_t>(p.row - r) * (p.row - r);
    if (d < best) {
      best = d;
      pick = &p;
    }
  }
  if (!pick) throw Error(ErrorCode::NoForeground, "no boundary pixel has valid depth");
  return {static_cast<double>(pick->col), static_cast<double>(pick->row), static_cast<double>(frame.depth.at(pick->col, pick->row))};
}

}  // namespace nrtrack
