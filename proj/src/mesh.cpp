#include "nrtrack/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "nrtrack/error.hpp"
#include "nrtrack/rgbd.hpp"

namespace nrtrack {

namespace {

constexpr double kBetaTolerance = 1e-9;

double cross2(const Vertex3& a, const Vertex3& b, const Vertex3& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

std::vector<std::vector<int>> adjacency(int n, const std::vector<Triangle>& triangles) {
  std::vector<std::set<int>> sets(n);
  for (const auto& t : triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = t.v[e], b = t.v[(e + 1) % 3];
      sets[a].insert(b);
      sets[b].insert(a);
    }
  }
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) adj[i].assign(sets[i].begin(), sets[i].end());
  return adj;
}

}  // namespace

MeshState CanonicalMesh::state() const {
  MeshState s(size());
  for (int i = 0; i < size(); ++i) s.set_vertex(i, vertices[i]);
  return s;
}

bool CanonicalMesh::is_boundary(int v) const { return std::binary_search(boundary.begin(), boundary.end(), v); }

std::vector<Triplet> enumerate_triplets(const std::vector<Vertex3>& vertices, const std::vector<Triangle>& triangles,
                                        double spacing) {
  const int n = static_cast<int>(vertices.size());
  const auto adj = adjacency(n, triangles);
  const double tol = 1e-6 * std::max(spacing, 1.0);
  std::vector<Triplet> out;
  for (int j = 0; j < n; ++j) {
    const Eigen::Vector2d vj = vertices[j].head<2>();
    for (int i : adj[j]) {
      const Eigen::Vector2d mirror = 2.0 * vj - vertices[i].head<2>();
      for (int k : adj[j]) {
        if (k <= i) continue;
        if ((vertices[k].head<2>() - mirror).cwiseAbs().maxCoeff() <= tol) out.push_back({i, j, k});
      }
    }
  }
  return out;
}

SparseMatrix collinearity_matrix(const std::vector<Triplet>& triplets, int n) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(triplets.size() * 3);
  for (size_t r = 0; r < triplets.size(); ++r) {
    const auto& t = triplets[r];
    for (int idx : {t.i, t.j, t.k}) {
      if (idx < 0 || idx >= n) throw Error(ErrorCode::InvalidArgument, "triplet index out of range");
    }
    const auto row = static_cast<int>(r);
    entries.emplace_back(row, t.i, 1.0);
    entries.emplace_back(row, t.j, -2.0);
    entries.emplace_back(row, t.k, 1.0);
  }
  SparseMatrix kcol(static_cast<Eigen::Index>(triplets.size()), n);
  kcol.setFromTriplets(entries.begin(), entries.end());
  return kcol;
}

SparseMatrix smoothness_matrix(const std::vector<Triplet>& triplets, int n) {
  const SparseMatrix kcol = collinearity_matrix(triplets, n);
  SparseMatrix K = SparseMatrix(kcol.transpose()) * kcol;
  K.makeCompressed();
  return K;
}

CanonicalMesh assemble_mesh(std::vector<Vertex3> vertices, std::vector<Triangle> triangles, double spacing) {
  CanonicalMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.triangles = std::move(triangles);
  mesh.spacing = spacing;
  const int n = mesh.size();
  for (const auto& t : mesh.triangles) {
    for (int v : t.v) {
      if (v < 0 || v >= n) throw Error(ErrorCode::InvalidArgument, "triangle index out of range");
    }
  }
  const auto adj = adjacency(n, mesh.triangles);
  mesh.degree.resize(n);
  for (int i = 0; i < n; ++i) {
    mesh.degree[i] = static_cast<int>(adj[i].size());
    if (mesh.degree[i] != 6) mesh.boundary.push_back(i);
  }
  mesh.triplets = enumerate_triplets(mesh.vertices, mesh.triangles, spacing);
  mesh.smoothness = smoothness_matrix(mesh.triplets, n);
  return mesh;
}

CanonicalMesh build_canonical_mesh(const Bitmap& mask, const DepthImage& depth, double spacing,
                                   std::optional<GridOrigin> origin) {
  if (!(spacing >= 2.0)) throw Error(ErrorCode::InvalidArgument, "mesh spacing must be >= 2 pixels");
  if (mask.width != depth.width || mask.height != depth.height)
    throw Error(ErrorCode::InvalidArgument, "mask and depth dimensions differ");

  int cmin = mask.width, cmax = -1, rmin = mask.height, rmax = -1;
  std::vector<Pixel> validMask;
  size_t maskCount = 0;
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      if (!mask.at(c, r)) continue;
      ++maskCount;
      cmin = std::min(cmin, c);
      cmax = std::max(cmax, c);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      if (depth.at(c, r) != 0) validMask.push_back({c, r});
    }
  }
  if (maskCount == 0) throw Error(ErrorCode::EmptyMask, "mask has no foreground pixels");
  if (validMask.size() * 10 < maskCount * 9) throw Error(ErrorCode::InvalidArgument, "depth valid on < 90% of the mask");

  const GridOrigin o = origin.value_or(GridOrigin{static_cast<double>(cmin), static_cast<double>(rmin)});
  const double rowStep = spacing * std::sqrt(3.0) / 2.0;
  const int rows = std::max(1, static_cast<int>(std::ceil((rmax - o.row) / rowStep - 1e-9)) + 1);
  const int cols = std::max(1, static_cast<int>(std::ceil((cmax - o.col) / spacing - 1e-9)) + 1);

  auto lattice = [&](int r, int i) { return r * cols + i; };
  auto position = [&](int r, int i) {
    return Vertex3(o.col + i * spacing + ((r & 1) ? spacing / 2.0 : 0.0), o.row + r * rowStep, 0.0);
  };

  std::vector<std::array<int, 3>> kept;
  auto consider = [&](std::array<std::pair<int, int>, 3> tri) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (auto [r, i] : tri) {
      if (i < 0 || i >= cols) return;
      centroid += position(r, i).head<2>();
    }
    centroid /= 3.0;
    const int c = static_cast<int>(std::lround(centroid.x()));
    const int r = static_cast<int>(std::lround(centroid.y()));
    if (!mask.contains(c, r) || !mask.at(c, r)) return;
    kept.push_back({lattice(tri[0].first, tri[0].second), lattice(tri[1].first, tri[1].second),
                    lattice(tri[2].first, tri[2].second)});
  };
  for (int r = 0; r + 1 < rows; ++r) {
    for (int i = 0; i < cols; ++i) {
      if ((r & 1) == 0) {
        consider({{{r, i}, {r, i + 1}, {r + 1, i}}});
        consider({{{r + 1, i}, {r + 1, i + 1}, {r, i + 1}}});
      } else {
        consider({{{r, i}, {r, i + 1}, {r + 1, i + 1}}});
        consider({{{r + 1, i}, {r + 1, i + 1}, {r, i}}});
      }
    }
  }
  if (kept.size() < 3) throw Error(ErrorCode::DegenerateMesh, "fewer than 3 triangles survive clipping");

  std::vector<int> remap(static_cast<size_t>(rows) * cols, -1);
  for (const auto& t : kept)
    for (int v : t) remap[v] = 0;
  std::vector<Vertex3> vertices;
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < cols; ++i) {
      const int l = lattice(r, i);
      if (remap[l] < 0) continue;
      remap[l] = static_cast<int>(vertices.size());
      vertices.push_back(position(r, i));
    }
  }

  for (auto& v : vertices) {
    std::optional<double> z;
    if (v.x() >= 0 && v.y() >= 0 && v.x() <= depth.width - 1 && v.y() <= depth.height - 1) z = sample_depth(depth, v.x(), v.y());
    if (!z) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : validMask) {
        const double d = std::hypot(p.col - v.x(), p.row - v.y());
        if (d < best) {
          best = d;
          z = depth.at(p.col, p.row);
        }
      }
    }
    v.z() = *z;
  }

  std::vector<Triangle> triangles;
  triangles.reserve(kept.size());
  for (const auto& t : kept) {
    Triangle tri{{remap[t[0]], remap[t[1]], remap[t[2]]}};
    if (cross2(vertices[tri.v[0]], vertices[tri.v[1]], vertices[tri.v[2]]) < 0) std::swap(tri.v[1], tri.v[2]);
    triangles.push_back(tri);
  }
  return assemble_mesh(std::move(vertices), std::move(triangles), spacing);
}

std::optional<BarycentricAttachment> try_barycentric_coords(const Vertex3& p, const CanonicalMesh& mesh) {
  const double singular = 1e-12 * mesh.spacing * mesh.spacing;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vertex3& a = mesh.vertices[tri.v[0]];
    const Vertex3& b = mesh.vertices[tri.v[1]];
    const Vertex3& c = mesh.vertices[tri.v[2]];
    const double minX = std::min({a.x(), b.x(), c.x()}), maxX = std::max({a.x(), b.x(), c.x()});
    const double minY = std::min({a.y(), b.y(), c.y()}), maxY = std::max({a.y(), b.y(), c.y()});
    const double slack = 1e-9 * std::max(mesh.spacing, 1.0);
    if (p.x() < minX - slack || p.x() > maxX + slack || p.y() < minY - slack || p.y() > maxY + slack) continue;

    const double m00 = a.x() - c.x(), m01 = b.x() - c.x();
    const double m10 = a.y() - c.y(), m11 = b.y() - c.y();
    const double det = m00 * m11 - m01 * m10;
    if (std::abs(det) < singular) throw Error(ErrorCode::SingularTriangle, "triangle " + std::to_string(t));
    const double rx = p.x() - c.x(), ry = p.y() - c.y();
    const double bi = (rx * m11 - m01 * ry) / det;
    const double bj = (m00 * ry - m10 * rx) / det;
    const double bk = 1.0 - bi - bj;
    if (bi < -kBetaTolerance || bj < -kBetaTolerance || bk < -kBetaTolerance) continue;
    BarycentricAttachment att;
    att.triangle = static_cast<int>(t);
    att.vertices = tri.v;
    att.beta = {bi, bj, bk};
    return att;
  }
  return std::nullopt;
}

BarycentricAttachment barycentric_coords(const Vertex3& p, const CanonicalMesh& mesh) {
  auto att = try_barycentric_coords(p, mesh);
  if (!att) throw Error(ErrorCode::OutsideMesh, "point is not inside any triangle");
  return *att;
}

Vertex3 transform_point(const BarycentricAttachment& a, const MeshState& state) {
  Vertex3 out = Vertex3::Zero();
  for (int e = 0; e < 3; ++e) out += a.beta[e] * state.vertex(a.vertices[e]);
  return out;
}

}  // namespace nrtrack
