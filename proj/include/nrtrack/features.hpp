#pragma once

#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "nrtrack/mesh.hpp"
#include "nrtrack/rgbd.hpp"

namespace nrtrack {

struct Keypoint {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::VectorXd descriptor;
  double scale = 1.0;
  double response = 0.0;
};

/// Pluggable detector: grayscale image + foreground mask in, keypoints out.
class FeatureDetector {
 public:
  virtual ~FeatureDetector() = default;
  virtual std::vector<Keypoint> detect(const FloatImage& gray, const Bitmap& mask) const = 0;
  virtual int descriptor_size() const = 0;
};

struct BlobDetectorOptions {
  std::vector<double> sigmas{1.6, 2.4, 3.2};
  double threshold = 1e-3;  // on the scale-normalised Hessian determinant, gray in [0, 1]
  int maxKeypoints = 500;
};

/// Determinant-of-Hessian blob detector with a 4x4 cell histogram of
/// (dx, dy, |dx|, |dy|) sums as descriptor (upright SURF layout, 64 values).
class BlobDetector final : public FeatureDetector {
 public:
  explicit BlobDetector(BlobDetectorOptions opts = {});
  // A mask of the wrong size (e.g. empty) means the whole image.
  std::vector<Keypoint> detect(const FloatImage& gray, const Bitmap& mask) const override;
  int descriptor_size() const override { return 64; }

 private:
  BlobDetectorOptions opts_;
};

/// Run `detector` on the frame's grayscale and keep keypoints on the foreground.
/// Sorted by descending response, then (row, col).
std::vector<Keypoint> detect(const FeatureDetector& detector, const RgbdFrame& frame, const Segmentation& seg);

struct Match {
  int canonical = -1;
  int current = -1;
  double distance = 0.0;
  friend bool operator==(const Match&, const Match&) = default;
};

/// Nearest-descriptor matching gated to `gate` pixels around each canonical
/// feature's previous position, made one-to-one greedily by ascending
/// (distance, canonical, current), then cut to the best ceil(half).
std::vector<Match> putative_match(const std::vector<Keypoint>& canonical, const std::vector<Keypoint>& current,
                                  const std::vector<Eigen::Vector2d>& previousPositions, double gate);

struct Correspondence {
  Vertex3 canonicalPoint = Vertex3::Zero();
  BarycentricAttachment attachment;
  Vertex3 observedPoint = Vertex3::Zero();
  double descriptorDistance = 0.0;
};

struct CorrespondenceResult {
  std::vector<Correspondence> correspondences;
  int droppedOutsideMesh = 0;
  int droppedInvalidDepth = 0;
};

CorrespondenceResult build_correspondences(const std::vector<Match>& matches, const std::vector<Keypoint>& canonicalKeypoints,
                                           const std::vector<Keypoint>& currentKeypoints, const CanonicalMesh& mesh,
                                           const RgbdFrame& canonicalFrame, const RgbdFrame& frame);

/// Attach explicit (canonical, observed) point pairs, e.g. loaded from CSV.
/// Pairs whose canonical point misses the mesh are dropped and counted.
CorrespondenceResult attach_correspondences(const std::vector<std::pair<Vertex3, Vertex3>>& pairs, const CanonicalMesh& mesh);

}  // namespace nrtrack
