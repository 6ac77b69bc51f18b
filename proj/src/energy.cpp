#include "nrtrack/energy.hpp"

#include <cmath>
#include <limits>

#include "nrtrack/error.hpp"

namespace nrtrack {

void EnergyParams::validate() const {
  if (!(alpha > 0)) throw Error(ErrorCode::InvalidArgument, "alpha must be > 0");
  if (!(lambdaC >= 0 && lambdaD >= 0 && lambdaB >= 0)) throw Error(ErrorCode::InvalidArgument, "energy weights must be >= 0");
  if (!(occlusionThreshold > 0)) throw Error(ErrorCode::InvalidArgument, "occlusion threshold must be > 0");
}

TermResult psi_smoothness(const MeshState& state, const SparseMatrix& K) {
  if (K.rows() != state.size() || K.cols() != state.size())
    throw Error(ErrorCode::InvalidArgument, "smoothness matrix does not match the state");
  TermResult out;
  out.gradient.x = K * state.x;
  out.gradient.y = K * state.y;
  out.gradient.z = K * state.z;
  out.value = 0.5 * (state.x.dot(out.gradient.x) + state.y.dot(out.gradient.y) + state.z.dot(out.gradient.z));
  return out;
}

TermResult psi_smoothness(const MeshState& state, const CanonicalMesh& mesh) {
  TermResult out = psi_smoothness(state, mesh.smoothness);
  // Summing squared triple residuals avoids the cancellation in X^T K X near affine states.
  double sum = 0.0;
  for (const auto& t : mesh.triplets) {
    const double ex = state.x[t.i] - 2.0 * state.x[t.j] + state.x[t.k];
    const double ey = state.y[t.i] - 2.0 * state.y[t.j] + state.y[t.k];
    const double ez = state.z[t.i] - 2.0 * state.z[t.j] + state.z[t.k];
    sum += ex * ex + ey * ey + ez * ez;
  }
  out.value = 0.5 * sum;
  return out;
}

TermResult psi_correspondence(const MeshState& state, std::span<const Correspondence> correspondences) {
  TermResult out;
  out.gradient = Gradient(state.size());
  for (const auto& c : correspondences) {
    const Vertex3 r = c.observedPoint - transform_point(c.attachment, state);
    out.value += 0.5 * r.squaredNorm();
    for (int e = 0; e < 3; ++e) {
      const int v = c.attachment.vertices[e];
      const double b = c.attachment.beta[e];
      out.gradient.x[v] -= b * r.x();
      out.gradient.y[v] -= b * r.y();
      out.gradient.z[v] -= b * r.z();
    }
  }
  return out;
}

DepthTargets sample_depth_targets(const MeshState& state, const RgbdFrame& frame) {
  DepthTargets targets(static_cast<size_t>(state.size()));
  const double maxX = frame.width() - 1, maxY = frame.height() - 1;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double x = state.x[i], y = state.y[i];
    if (!(x >= 0 && y >= 0 && x <= maxX && y <= maxY)) continue;
    targets[i] = sample_depth(frame, x, y);
  }
  return targets;
}

TermResult psi_depth(const MeshState& state, const DepthTargets& targets, double occlusionThreshold) {
  if (static_cast<Eigen::Index>(targets.size()) != state.size())
    throw Error(ErrorCode::InvalidArgument, "depth targets do not match the state");
  TermResult out;
  out.gradient = Gradient(state.size());
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    if (!targets[i]) {
      ++out.skipped;
      continue;
    }
    const double r = *targets[i] - state.z[i];
    if (std::abs(r) > occlusionThreshold) {
      ++out.skipped;
      continue;
    }
    out.value += 0.5 * r * r;
    out.gradient.z[i] = -r;
  }
  return out;
}

TermResult psi_depth(const MeshState& state, const RgbdFrame& frame, double occlusionThreshold) {
  return psi_depth(state, sample_depth_targets(state, frame), occlusionThreshold);
}

BoundaryTargets boundary_targets(const MeshState& state, const CanonicalMesh& mesh, const Segmentation& seg,
                                 const RgbdFrame& frame) {
  BoundaryTargets targets(mesh.boundary.size());
  for (size_t b = 0; b < mesh.boundary.size(); ++b) {
    const Vertex3 v = state.vertex(mesh.boundary[b]);
    const long c = std::lround(v.x()), r = std::lround(v.y());
    if (!std::isfinite(v.x()) || !std::isfinite(v.y()) || !seg.foreground.contains(static_cast<int>(c), static_cast<int>(r)))
      continue;
    targets[b] = nearest_boundary_point3d(seg, frame, v);
  }
  return targets;
}

TermResult psi_boundary(const MeshState& state, const CanonicalMesh& mesh, const BoundaryTargets& targets) {
  if (targets.size() != mesh.boundary.size()) throw Error(ErrorCode::InvalidArgument, "boundary targets do not match the mesh");
  TermResult out;
  out.gradient = Gradient(state.size());
  for (size_t b = 0; b < mesh.boundary.size(); ++b) {
    if (!targets[b]) {
      ++out.skipped;
      continue;
    }
    const int v = mesh.boundary[b];
    const Vertex3 r = *targets[b] - state.vertex(v);
    out.value += 0.5 * r.squaredNorm();
    out.gradient.x[v] = -r.x();
    out.gradient.y[v] = -r.y();
    out.gradient.z[v] = -r.z();
  }
  return out;
}

TermResult psi_boundary(const MeshState& state, const CanonicalMesh& mesh, const Segmentation& seg, const RgbdFrame& frame) {
  return psi_boundary(state, mesh, boundary_targets(state, mesh, seg, frame));
}

std::vector<double> canonical_boundary_offsets(const CanonicalMesh& mesh, const Segmentation& canonicalSeg) {
  std::vector<double> out;
  out.reserve(mesh.boundary.size());
  for (int v : mesh.boundary) {
    const Vertex3& p = mesh.vertices[v];
    const int c = static_cast<int>(std::lround(p.x())), r = static_cast<int>(std::lround(p.y()));
    if (!canonicalSeg.foreground.contains(c, r)) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const Pixel& b = canonicalSeg.nearest_boundary(c, r);
    out.push_back(std::hypot(b.col - p.x(), b.row - p.y()));
  }
  return out;
}

EnergyBreakdown combine(double smoothness, double correspondence, double depth, double boundary, const EnergyParams& params) {
  EnergyBreakdown e;
  e.smoothness = smoothness;
  e.correspondence = correspondence;
  e.depth = depth;
  e.boundary = boundary;
  e.total = smoothness + params.lambdaC * correspondence + params.lambdaD * depth + params.lambdaB * boundary;
  return e;
}

EnergyBreakdown psi_total(const MeshState& state, const EnergyInputs& inputs, const EnergyParams& params) {
  const double s = psi_smoothness(state, inputs.mesh).value;
  const double c = psi_correspondence(state, inputs.correspondences).value;
  double d = 0.0, b = 0.0;
  if (inputs.frame) {
    d = psi_depth(state, *inputs.frame, params.occlusionThreshold).value;
    if (inputs.segmentation) b = psi_boundary(state, inputs.mesh, *inputs.segmentation, *inputs.frame).value;
  }
  return combine(s, c, d, b, params);
}

}  // namespace nrtrack
