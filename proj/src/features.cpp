#include "nrtrack/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "nrtrack/error.hpp"

namespace nrtrack {

namespace {

FloatImage gaussian_blur(const FloatImage& src, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (auto& k : kernel) k /= norm;

  const int w = src.width, h = src.height;
  FloatImage tmp(w, h), out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * src.at(std::clamp(c + i, 0, w - 1), r);
      tmp.at(c, r) = acc;
    }
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(c, std::clamp(r + i, 0, h - 1));
      out.at(c, r) = acc;
    }
  }
  return out;
}

FloatImage hessian_response(const FloatImage& L, double sigma) {
  const int w = L.width, h = L.height;
  FloatImage out(w, h, 0.0);
  const double s4 = sigma * sigma * sigma * sigma;
  for (int r = 1; r + 1 < h; ++r) {
    for (int c = 1; c + 1 < w; ++c) {
      const double lxx = L.at(c + 1, r) - 2.0 * L.at(c, r) + L.at(c - 1, r);
      const double lyy = L.at(c, r + 1) - 2.0 * L.at(c, r) + L.at(c, r - 1);
      const double lxy = 0.25 * (L.at(c + 1, r + 1) - L.at(c + 1, r - 1) - L.at(c - 1, r + 1) + L.at(c - 1, r - 1));
      out.at(c, r) = s4 * (lxx * lyy - lxy * lxy);
    }
  }
  return out;
}

Eigen::VectorXd describe(const FloatImage& L, double x, double y, double sigma) {
  Eigen::VectorXd desc = Eigen::VectorXd::Zero(64);
  const int w = L.width, h = L.height;
  auto at = [&](int c, int r) { return L.at(std::clamp(c, 0, w - 1), std::clamp(r, 0, h - 1)); };
  const double weightSigma = 3.3 * sigma;
  // 20 x 20 samples at spacing sigma, grouped into 4 x 4 cells of 5 x 5.
  for (int sy = 0; sy < 20; ++sy) {
    for (int sx = 0; sx < 20; ++sx) {
      const double ox = (sx - 9.5) * sigma, oy = (sy - 9.5) * sigma;
      const int c = static_cast<int>(std::lround(x + ox));
      const int r = static_cast<int>(std::lround(y + oy));
      const double dx = 0.5 * (at(c + 1, r) - at(c - 1, r));
      const double dy = 0.5 * (at(c, r + 1) - at(c, r - 1));
      const double g = std::exp(-0.5 * (ox * ox + oy * oy) / (weightSigma * weightSigma));
      const int cell = (sy / 5) * 4 + (sx / 5);
      desc[4 * cell + 0] += g * dx;
      desc[4 * cell + 1] += g * dy;
      desc[4 * cell + 2] += g * std::abs(dx);
      desc[4 * cell + 3] += g * std::abs(dy);
    }
  }
  const double n = desc.norm();
  if (n > 0) desc /= n;
  return desc;
}

bool keypoint_order(const Keypoint& a, const Keypoint& b) {
  if (a.response != b.response) return a.response > b.response;
  if (a.position.y() != b.position.y()) return a.position.y() < b.position.y();
  return a.position.x() < b.position.x();
}

}  // namespace

BlobDetector::BlobDetector(BlobDetectorOptions opts) : opts_(std::move(opts)) {
  if (opts_.sigmas.empty()) throw Error(ErrorCode::InvalidArgument, "blob detector needs at least one scale");
}

std::vector<Keypoint> BlobDetector::detect(const FloatImage& gray, const Bitmap& mask) const {
  const int w = gray.width, h = gray.height;
  const bool masked = mask.width == w && mask.height == h;
  const size_t scales = opts_.sigmas.size();
  std::vector<FloatImage> blurred, response;
  for (double s : opts_.sigmas) {
    blurred.push_back(gaussian_blur(gray, s));
    response.push_back(hessian_response(blurred.back(), s));
  }

  std::vector<Keypoint> out;
  for (size_t s = 0; s < scales; ++s) {
    const auto& R = response[s];
    for (int r = 2; r + 2 < h; ++r) {
      for (int c = 2; c + 2 < w; ++c) {
        const double v = R.at(c, r);
        if (v <= opts_.threshold || (masked && !mask.at(c, r))) continue;
        bool isMax = true;
        for (size_t t = (s == 0 ? 0 : s - 1); t <= std::min(scales - 1, s + 1) && isMax; ++t) {
          for (int dr = -1; dr <= 1 && isMax; ++dr) {
            for (int dc = -1; dc <= 1 && isMax; ++dc) {
              if (t == s && dr == 0 && dc == 0) continue;
              const double u = response[t].at(c + dc, r + dr);
              // Strict against earlier neighbours, non-strict against later ones: plateaus yield one peak.
              const bool earlier = t < s || (t == s && (dr < 0 || (dr == 0 && dc < 0)));
              if (earlier ? u >= v : u > v) isMax = false;
            }
          }
        }
        if (!isMax) continue;
        Keypoint kp;
        kp.position = {static_cast<double>(c), static_cast<double>(r)};
        kp.scale = opts_.sigmas[s];
        kp.response = v;
        kp.descriptor = describe(blurred[s], c, r, opts_.sigmas[s]);
        out.push_back(std::move(kp));
      }
    }
  }
  std::sort(out.begin(), out.end(), keypoint_order);
  if (static_cast<int>(out.size()) > opts_.maxKeypoints) out.resize(opts_.maxKeypoints);
  return out;
}

std::vector<Keypoint> detect(const FeatureDetector& detector, const RgbdFrame& frame, const Segmentation& seg) {
  auto kps = detector.detect(to_grayscale(frame.color), seg.foreground);
  std::erase_if(kps, [&](const Keypoint& kp) {
    const int c = static_cast<int>(std::lround(kp.position.x()));
    const int r = static_cast<int>(std::lround(kp.position.y()));
    return !seg.foreground.contains(c, r) || !seg.foreground.at(c, r);
  });
  std::stable_sort(kps.begin(), kps.end(), keypoint_order);
  return kps;
}

std::vector<Match> putative_match(const std::vector<Keypoint>& canonical, const std::vector<Keypoint>& current,
                                  const std::vector<Eigen::Vector2d>& previousPositions, double gate) {
  if (!(gate > 0)) throw Error(ErrorCode::InvalidArgument, "matching gate must be positive");
  if (!previousPositions.empty() && previousPositions.size() != canonical.size())
    throw Error(ErrorCode::InvalidArgument, "previousPositions must match the canonical keypoints");

  std::vector<Match> best;
  for (size_t i = 0; i < canonical.size(); ++i) {
    const Eigen::Vector2d prev = previousPositions.empty() ? canonical[i].position : previousPositions[i];
    Match m{static_cast<int>(i), -1, std::numeric_limits<double>::infinity()};
    for (size_t j = 0; j < current.size(); ++j) {
      if ((current[j].position - prev).norm() > gate) continue;
      const double d = (canonical[i].descriptor - current[j].descriptor).norm();
      if (d < m.distance) {
        m.current = static_cast<int>(j);
        m.distance = d;
      }
    }
    if (m.current >= 0) best.push_back(m);
  }

  std::sort(best.begin(), best.end(), [](const Match& a, const Match& b) {
    return std::tie(a.distance, a.canonical, a.current) < std::tie(b.distance, b.canonical, b.current);
  });
  std::vector<char> taken(current.size(), 0);
  std::vector<Match> unique;
  for (const auto& m : best) {
    if (taken[m.current]) continue;
    taken[m.current] = 1;
    unique.push_back(m);
  }
  unique.resize((unique.size() + 1) / 2);
  return unique;
}

CorrespondenceResult build_correspondences(const std::vector<Match>& matches, const std::vector<Keypoint>& canonicalKeypoints,
                                           const std::vector<Keypoint>& currentKeypoints, const CanonicalMesh& mesh,
                                           const RgbdFrame& canonicalFrame, const RgbdFrame& frame) {
  CorrespondenceResult out;
  const MeshState rest = mesh.state();
  for (const auto& m : matches) {
    if (m.canonical < 0 || m.current < 0 || m.canonical >= static_cast<int>(canonicalKeypoints.size()) ||
        m.current >= static_cast<int>(currentKeypoints.size()))
      throw Error(ErrorCode::InvalidArgument, "match index out of range");
    const auto& ck = canonicalKeypoints[m.canonical].position;
    const auto att = try_barycentric_coords(Vertex3(ck.x(), ck.y(), 0.0), mesh);
    if (!att) {
      ++out.droppedOutsideMesh;
      continue;
    }
    const auto& ok = currentKeypoints[m.current].position;
    const auto observedDepth = sample_depth(frame, ok.x(), ok.y());
    if (!observedDepth) {
      ++out.droppedInvalidDepth;
      continue;
    }
    Correspondence c;
    c.attachment = *att;
    const auto canonicalDepth = sample_depth(canonicalFrame, ck.x(), ck.y());
    c.canonicalPoint = {ck.x(), ck.y(), canonicalDepth ? *canonicalDepth : transform_point(*att, rest).z()};
    c.observedPoint = {ok.x(), ok.y(), *observedDepth};
    c.descriptorDistance = m.distance;
    out.correspondences.push_back(c);
  }
  return out;
}

CorrespondenceResult attach_correspondences(const std::vector<std::pair<Vertex3, Vertex3>>& pairs, const CanonicalMesh& mesh) {
  CorrespondenceResult out;
  for (const auto& [canonical, observed] : pairs) {
    const auto att = try_barycentric_coords(canonical, mesh);
    if (!att) {
      ++out.droppedOutsideMesh;
      continue;
    }
    Correspondence c;
    c.canonicalPoint = canonical;
    c.attachment = *att;
    c.observedPoint = observed;
    out.correspondences.push_back(c);
  }
  return out;
}

}  // namespace nrtrack
