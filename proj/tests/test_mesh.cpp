#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>

#include "nrtrack/error.hpp"
#include "nrtrack/mesh.hpp"
#include "oracles.hpp"

using namespace nrtrack;

namespace {

int count_as_middle(const CanonicalMesh& mesh, int v) {
  return static_cast<int>(std::count_if(mesh.triplets.begin(), mesh.triplets.end(), [&](const Triplet& t) { return t.j == v; }));
}

template <typename Fn>
ErrorCode error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected nrtrack::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("hexagonal mesh over a rectangle has six-neighbour interior vertices") {
  const CanonicalMesh mesh = oracle::rect_mesh(100, 100, 10.0);
  REQUIRE(mesh.size() > 50);
  int interior = 0;
  for (int v = 0; v < mesh.size(); ++v) {
    if (mesh.degree[v] == 6) {
      ++interior;
      CHECK(count_as_middle(mesh, v) == 3);
      CHECK_FALSE(mesh.is_boundary(v));
    } else {
      CHECK(mesh.is_boundary(v));
      CHECK(count_as_middle(mesh, v) < 3);
    }
  }
  CHECK(interior > 40);

  // equilateral edges of the requested length
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const double len = (mesh.vertices[t.v[e]] - mesh.vertices[t.v[(e + 1) % 3]]).head<2>().norm();
      CHECK(len == doctest::Approx(10.0).epsilon(1e-12));
    }
    const auto& a = mesh.vertices[t.v[0]];
    const auto& b = mesh.vertices[t.v[1]];
    const auto& c = mesh.vertices[t.v[2]];
    CHECK((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()) > 0);
  }
  for (const auto& v : mesh.vertices) CHECK(v.z() == 800.0);
}

TEST_CASE("triplets match an exhaustive collinear scan on a small grid") {
  // 5 x 5 vertices: 4 spacings wide, 4 row steps tall.
  const double s = 10.0;
  const int h = static_cast<int>(std::ceil(4 * s * std::sqrt(3.0) / 2.0));
  const CanonicalMesh mesh = oracle::rect_mesh(41, h, s);
  auto expected = oracle::brute_force_triplets(mesh);
  auto actual = mesh.triplets;
  auto key = [](const Triplet& t) { return std::tuple(t.i, t.j, t.k); };
  std::sort(expected.begin(), expected.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
  std::sort(actual.begin(), actual.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
  CHECK(actual == expected);

  // boundary set from an independent neighbour count
  std::vector<std::set<int>> nb(mesh.size());
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      nb[t.v[e]].insert(t.v[(e + 1) % 3]);
      nb[t.v[(e + 1) % 3]].insert(t.v[e]);
    }
  std::vector<int> boundary;
  for (int v = 0; v < mesh.size(); ++v)
    if (nb[v].size() != 6) boundary.push_back(v);
  CHECK(mesh.boundary == boundary);
  CHECK(mesh.size() >= 25);
}

TEST_CASE("single triangle has no triplets and a zero smoothness matrix") {
  std::vector<Vertex3> v{{0, 0, 5}, {10, 0, 5}, {5, 8.660254037844386, 5}};
  const CanonicalMesh mesh = assemble_mesh(v, {Triangle{{0, 2, 1}}}, 10.0);
  CHECK(mesh.triplets.empty());
  CHECK(mesh.boundary == std::vector<int>{0, 1, 2});
  CHECK(Eigen::MatrixXd(mesh.smoothness).isZero(0.0));
}

TEST_CASE("build_canonical_mesh error paths") {
  const DepthImage depth(40, 40, 800);
  CHECK(error_of([&] { build_canonical_mesh(Bitmap(40, 40, 0), depth, 10.0); }) == ErrorCode::EmptyMask);
  CHECK(error_of([&] { build_canonical_mesh(oracle::rect_mask(40, 40, 5, 5, 3, 3), depth, 10.0); }) == ErrorCode::DegenerateMesh);
  CHECK(error_of([&] { build_canonical_mesh(oracle::rect_mask(40, 40, 5, 5, 30, 30), depth, 1.5); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([&] { build_canonical_mesh(oracle::rect_mask(40, 40, 5, 5, 30, 30), DepthImage(40, 40, 0), 10.0); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("vertex depth is filled from the nearest valid mask pixel") {
  DepthImage depth(80, 80, 0);
  const Bitmap mask = oracle::rect_mask(80, 80, 10, 10, 50, 50);
  for (int r = 0; r < 80; ++r)
    for (int c = 0; c < 80; ++c)
      if (mask.at(c, r)) depth.at(c, r) = 700;
  depth.at(10, 10) = 0;  // the lattice origin vertex sits exactly here
  depth.at(11, 10) = 0;
  depth.at(10, 11) = 0;
  depth.at(11, 11) = 0;
  const CanonicalMesh mesh = build_canonical_mesh(mask, depth, 10.0);
  for (const auto& v : mesh.vertices) CHECK(v.z() == 700.0);
}

TEST_CASE("smoothness_matrix examples") {
  SUBCASE("single triple") {
    const Eigen::MatrixXd K = smoothness_matrix({{0, 1, 2}}, 3);
    Eigen::Matrix3d expected;
    expected << 1, -2, 1, -2, 4, -2, 1, -2, 1;
    CHECK(K == expected);
  }
  SUBCASE("empty") { CHECK(Eigen::MatrixXd(smoothness_matrix({}, 4)).isZero(0.0)); }
  SUBCASE("index bounds") { CHECK_THROWS_AS(smoothness_matrix({{0, 1, 3}}, 3), Error); }
  SUBCASE("6x6 grid equals dense Kcol^T Kcol exactly") {
    const CanonicalMesh mesh = oracle::rect_mesh(51, 44, 10.0);
    const Eigen::MatrixXd kcol = oracle::dense_kcol(mesh.triplets, mesh.size());
    const Eigen::MatrixXd dense = kcol.transpose() * kcol;
    CHECK(Eigen::MatrixXd(mesh.smoothness) == dense);
  }
}

TEST_CASE("K is symmetric PSD with affine nullspace; each middle vertex is its neighbours' mean") {
  const CanonicalMesh mesh = oracle::rect_mesh(81, 75, 10.0);
  REQUIRE(mesh.size() <= 100);
  const Eigen::MatrixXd K = mesh.smoothness;
  CHECK(K == K.transpose());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.size());
  CHECK((K * ones).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10);

  double residual = 0.0;
  for (const auto& t : mesh.triplets) {
    const Eigen::Vector2d r = (mesh.vertices[t.i] - 2 * mesh.vertices[t.j] + mesh.vertices[t.k]).head<2>();
    residual = std::max(residual, r.norm());
  }
  CHECK(residual <= 1e-9);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::Matrix3d A;
    for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = u(rng);
    const MeshState s = oracle::affine_state(mesh, A);
    const double scale = std::max({s.x.norm(), s.y.norm(), s.z.norm()});
    CHECK((mesh.smoothness * s.x).norm() <= 1e-9 * scale);
    CHECK((mesh.smoothness * s.y).norm() <= 1e-9 * scale);
    CHECK((mesh.smoothness * s.z).norm() <= 1e-9 * scale);
  }
}

TEST_CASE("barycentric_coords examples") {
  const CanonicalMesh mesh = oracle::rect_mesh(60, 60, 10.0);
  const Triangle& tri = mesh.triangles[5];
  const Vertex3& a = mesh.vertices[tri.v[0]];
  const Vertex3& b = mesh.vertices[tri.v[1]];
  const Vertex3& c = mesh.vertices[tri.v[2]];

  SUBCASE("vertex") {
    const auto att = barycentric_coords(a, mesh);
    const int slot = static_cast<int>(std::find(att.vertices.begin(), att.vertices.end(), tri.v[0]) - att.vertices.begin());
    REQUIRE(slot < 3);
    CHECK(att.beta[slot] == doctest::Approx(1.0));
    CHECK(att.beta.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("centroid") {
    const auto att = barycentric_coords((a + b + c) / 3.0, mesh);
    CHECK(att.triangle == 5);
    for (int e = 0; e < 3; ++e) CHECK(att.beta[e] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("edge midpoint resolves to the lowest triangle index") {
    const auto att = barycentric_coords((a + b) / 2.0, mesh);
    CHECK(att.triangle <= 5);
    std::vector<double> sorted(att.beta.data(), att.beta.data() + 3);
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sorted[1] == doctest::Approx(0.5));
    CHECK(sorted[2] == doctest::Approx(0.5));
  }
  SUBCASE("outside") {
    CHECK(error_of([&] { barycentric_coords(Vertex3(-100, -100, 0), mesh); }) == ErrorCode::OutsideMesh);
    CHECK_FALSE(try_barycentric_coords(Vertex3(1e4, 0, 0), mesh).has_value());
  }
  SUBCASE("singular triangle") {
    const CanonicalMesh bad = assemble_mesh({{0, 0, 0}, {5, 0, 0}, {10, 0, 0}}, {Triangle{{0, 1, 2}}}, 10.0);
    CHECK(error_of([&] { barycentric_coords(Vertex3(5, 0, 0), bad); }) == ErrorCode::SingularTriangle);
  }
}

TEST_CASE("attach then transform on the canonical state is the identity") {
  const CanonicalMesh mesh = oracle::rect_mesh(90, 90, 10.0);
  const MeshState rest = mesh.state();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(20, 110), uy(20, 110);
  int tested = 0;
  for (int n = 0; n < 500; ++n) {
    const Vertex3 p(ux(rng), uy(rng), 0.0);
    const auto att = try_barycentric_coords(p, mesh);
    if (!att) continue;
    ++tested;
    CHECK(att->beta.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(att->beta.minCoeff() >= -1e-9);
    CHECK(att->beta.maxCoeff() <= 1 + 1e-9);
    const Vertex3 q = transform_point(*att, rest);
    CHECK((q - p).head<2>().norm() <= 1e-9 * mesh.spacing);
    CHECK(q.z() == doctest::Approx(800.0));
  }
  CHECK(tested > 300);
}

TEST_CASE("z equation holds on a planar canonical mesh") {
  DepthImage depth(140, 140, 0);
  for (int r = 0; r < 140; ++r)
    for (int c = 0; c < 140; ++c) depth.at(c, r) = static_cast<std::uint16_t>(500 + 2 * c + 3 * r);
  const CanonicalMesh mesh = build_canonical_mesh(oracle::rect_mask(140, 140, 20, 20, 90, 90), depth, 10.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(25, 105);
  for (int n = 0; n < 200; ++n) {
    const double x = u(rng), y = u(rng);
    const Vertex3 p(x, y, 500 + 2 * x + 3 * y);
    const auto att = try_barycentric_coords(p, mesh);
    if (!att) continue;
    const Vertex3& vi = mesh.vertices[att->vertices[0]];
    const Vertex3& vj = mesh.vertices[att->vertices[1]];
    const Vertex3& vk = mesh.vertices[att->vertices[2]];
    const double lhs = (vi.z() - vk.z()) * att->beta[0] + (vj.z() - vk.z()) * att->beta[1];
    CHECK(std::abs(lhs - (p.z() - vk.z())) <= 1e-9 * std::abs(p.z()));
  }
}

TEST_CASE("transform_point follows the deformed triangle") {
  const CanonicalMesh mesh = assemble_mesh({{0, 0, 100}, {10, 0, 100}, {5, 8.660254037844386, 100}, {15, 8.660254037844386, 100}},
                                           {Triangle{{0, 2, 1}}, Triangle{{1, 2, 3}}}, 10.0);
  const Vertex3 p(7, 3, 100);
  const auto att = barycentric_coords(p, mesh);

  SUBCASE("translation") {
    MeshState s = mesh.state();
    const Vertex3 t(3, -2, 7);
    for (int i = 0; i < mesh.size(); ++i) s.set_vertex(i, s.vertex(i) + t);
    CHECK((transform_point(att, s) - (p + t)).norm() < 1e-12);
  }
  SUBCASE("random deformation matches hand expansion") {
    std::mt19937_64 rng(3);
    const MeshState s = oracle::random_state(mesh.state(), 4.0, rng);
    Vertex3 expected = Vertex3::Zero();
    for (int e = 0; e < 3; ++e)
      expected += att.beta[e] * Vertex3(s.x[att.vertices[e]], s.y[att.vertices[e]], s.z[att.vertices[e]]);
    CHECK((transform_point(att, s) - expected).norm() < 1e-12);
  }
}
