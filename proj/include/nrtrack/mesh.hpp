#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nrtrack/image.hpp"

namespace nrtrack {

/// (image column, image row, depth value). Depth shares the depth image's units.
using Vertex3 = Eigen::Vector3d;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct Triangle {
  std::array<int, 3> v;  // counter-clockwise in the image plane
};

/// Ordered chain of two equal, collinear, connected edges: v_i - v_j == v_j - v_k.
struct Triplet {
  int i, j, k;
  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Coordinate vectors of a deformed mesh, one entry per canonical vertex.
struct MeshState {
  Eigen::VectorXd x, y, z;

  MeshState() = default;
  explicit MeshState(Eigen::Index n) : x(Eigen::VectorXd::Zero(n)), y(Eigen::VectorXd::Zero(n)), z(Eigen::VectorXd::Zero(n)) {}

  Eigen::Index size() const { return x.size(); }
  Vertex3 vertex(Eigen::Index i) const { return {x[i], y[i], z[i]}; }
  void set_vertex(Eigen::Index i, const Vertex3& v) {
    x[i] = v.x();
    y[i] = v.y();
    z[i] = v.z();
  }
  bool all_finite() const { return x.allFinite() && y.allFinite() && z.allFinite(); }
};

/// Undeformed reference mesh. Immutable once built.
struct CanonicalMesh {
  std::vector<Vertex3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Triplet> triplets;
  std::vector<int> boundary;        // sorted vertex indices with degree != 6
  std::vector<int> degree;          // neighbour count per vertex
  double spacing = 0.0;
  SparseMatrix smoothness;          // K = Kcol^T Kcol

  int size() const { return static_cast<int>(vertices.size()); }
  MeshState state() const;
  bool is_boundary(int v) const;
};

struct BarycentricAttachment {
  int triangle = -1;
  std::array<int, 3> vertices{-1, -1, -1};  // copied from the triangle
  Eigen::Vector3d beta = Eigen::Vector3d::Zero();
};

struct GridOrigin {
  double col = 0.0;
  double row = 0.0;
};

/// Tile the mask's bounding box with equilateral triangles (edge `spacing`)
/// and keep the triangles whose centroid falls on the mask. Vertex depth is
/// sampled from `depth`; holes are filled from the nearest valid mask pixel.
/// When `origin` is given the lattice is anchored there instead of at the
/// bounding box's top-left corner.
CanonicalMesh build_canonical_mesh(const Bitmap& mask, const DepthImage& depth, double spacing,
                                   std::optional<GridOrigin> origin = std::nullopt);

/// Assemble a canonical mesh from explicit vertices and triangles: derives
/// triplets, degrees, boundary set and K.
CanonicalMesh assemble_mesh(std::vector<Vertex3> vertices, std::vector<Triangle> triangles, double spacing);

std::vector<Triplet> enumerate_triplets(const std::vector<Vertex3>& vertices, const std::vector<Triangle>& triangles,
                                        double spacing);

SparseMatrix collinearity_matrix(const std::vector<Triplet>& triplets, int n);
SparseMatrix smoothness_matrix(const std::vector<Triplet>& triplets, int n);

/// Locate p's (x, y) on the canonical mesh. Throws OutsideMesh / SingularTriangle.
BarycentricAttachment barycentric_coords(const Vertex3& p, const CanonicalMesh& mesh);
std::optional<BarycentricAttachment> try_barycentric_coords(const Vertex3& p, const CanonicalMesh& mesh);

/// T_V(p): the attached point carried along by the deformed triangle.
Vertex3 transform_point(const BarycentricAttachment& a, const MeshState& state);

}  // namespace nrtrack
