#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "nrtrack/features.hpp"
#include "nrtrack/mesh.hpp"
#include "nrtrack/rgbd.hpp"

namespace nrtrack {

struct EnergyParams {
  double lambdaC = 1.3;
  double lambdaD = 0.6;
  double lambdaB = 0.8;
  double alpha = 10.0;
  // Depth residuals larger than this (depth units) are treated as occlusion and skipped.
  double occlusionThreshold = 30.0;

  void validate() const;
};

struct Gradient {
  Eigen::VectorXd x, y, z;

  explicit Gradient(Eigen::Index n = 0)
      : x(Eigen::VectorXd::Zero(n)), y(Eigen::VectorXd::Zero(n)), z(Eigen::VectorXd::Zero(n)) {}
};

struct TermResult {
  double value = 0.0;
  Gradient gradient;
  int skipped = 0;
};

struct EnergyBreakdown {
  double smoothness = 0.0;
  double correspondence = 0.0;
  double depth = 0.0;
  double boundary = 0.0;
  double total = 0.0;
};

/// Per-vertex depth samples d(x_i, y_i); nullopt where out of bounds or invalid.
using DepthTargets = std::vector<std::optional<double>>;
/// Per boundary vertex (in CanonicalMesh::boundary order) nearest boundary point.
using BoundaryTargets = std::vector<std::optional<Vertex3>>;

TermResult psi_smoothness(const MeshState& state, const SparseMatrix& K);
/// Same gradient; value summed over the mesh's triples, so it is never negative.
TermResult psi_smoothness(const MeshState& state, const CanonicalMesh& mesh);

TermResult psi_correspondence(const MeshState& state, std::span<const Correspondence> correspondences);

DepthTargets sample_depth_targets(const MeshState& state, const RgbdFrame& frame);
TermResult psi_depth(const MeshState& state, const DepthTargets& targets, double occlusionThreshold);
TermResult psi_depth(const MeshState& state, const RgbdFrame& frame, double occlusionThreshold);

BoundaryTargets boundary_targets(const MeshState& state, const CanonicalMesh& mesh, const Segmentation& seg,
                                 const RgbdFrame& frame);
/// Displacement form: r_i = b(v_i) - v_i over boundary vertices, value 1/2 sum |r_i|^2.
TermResult psi_boundary(const MeshState& state, const CanonicalMesh& mesh, const BoundaryTargets& targets);
TermResult psi_boundary(const MeshState& state, const CanonicalMesh& mesh, const Segmentation& seg, const RgbdFrame& frame);

/// Image-plane distance from each canonical boundary vertex to the canonical
/// segmentation's boundary (diagnostic; same order as CanonicalMesh::boundary).
std::vector<double> canonical_boundary_offsets(const CanonicalMesh& mesh, const Segmentation& canonicalSeg);

struct EnergyInputs {
  const CanonicalMesh& mesh;
  std::span<const Correspondence> correspondences;
  const RgbdFrame* frame = nullptr;        // required when lambdaD or lambdaB > 0
  const Segmentation* segmentation = nullptr;  // required when lambdaB > 0
};

EnergyBreakdown combine(double smoothness, double correspondence, double depth, double boundary, const EnergyParams& params);
EnergyBreakdown psi_total(const MeshState& state, const EnergyInputs& inputs, const EnergyParams& params);

}  // namespace nrtrack
