#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "nrtrack/mesh.hpp"
#include "nrtrack/rgbd.hpp"

namespace nrtrack::synth {

enum class DeformationKind { Translate, Slant, CylinderBend, OutOfPlaneRotate, FoldOcclude };

DeformationKind parse_kind(const std::string& name);
std::string to_string(DeformationKind kind);

struct DeformationModel {
  DeformationKind kind = DeformationKind::Translate;
  int frames = 10;
  Eigen::Vector3d step{0.0, 0.0, 0.0};  // translate: offset added per frame
  double maxAngle = 0.0;                 // slant / rotate / fold, radians
  double maxCurvature = 0.0;             // bend: 1 / radius at the last frame
};

/// Ground-truth state at frame t. Pivot geometry (bottom edge, centre line,
/// crease) is taken from the canonical mesh's bounding box.
MeshState deform(const DeformationModel& model, const CanonicalMesh& mesh, int t);

struct Blob {
  Eigen::Vector2d center;
  double radius;
  Rgb color;
};

/// Texture defined on canonical (x, y): a flat base colour with Gaussian blobs.
struct BlobTexture {
  Rgb base{128, 128, 128};
  std::vector<Blob> blobs;

  Rgb sample(double x, double y) const;
};

BlobTexture make_blob_texture(double minX, double minY, double maxX, double maxY, int count, std::uint64_t seed);

struct RenderResult {
  RgbdFrame frame;
  FloatImage zbuffer;  // +inf where no surface
  Image<int> triangle; // -1 where no surface
};

/// Orthographic z-buffer rasterisation in the (column, row) plane; pixel
/// centres at integer coordinates, nearest depth wins.
RenderResult render(const MeshState& state, const CanonicalMesh& mesh, const BlobTexture& texture, int width, int height);

struct NoiseModel {
  double sigma = 2.0;
  double dropout = 0.01;
};

void add_noise(RgbdFrame& frame, const NoiseModel& noise, std::uint64_t seed);

struct PlantedPoint {
  Vertex3 canonical;
  BarycentricAttachment attachment;
};

/// density = points per 100x100 pixels of canonical triangle area.
std::vector<PlantedPoint> sample_planted_points(const CanonicalMesh& mesh, double density, std::uint64_t seed);

/// Depth of the nearest surface of `state` along the ray through (x, y);
/// +inf when the ray misses every triangle.
double nearest_surface(const MeshState& state, const CanonicalMesh& mesh, double x, double y);

/// Carry planted points through `state`; keep those no more than `tolerance`
/// behind the nearest surface.
std::vector<std::pair<Vertex3, Vertex3>> plant_correspondences(const std::vector<PlantedPoint>& planted, const MeshState& state,
                                                               const CanonicalMesh& mesh, double tolerance = 1.0);

/// Vertices of `state` not hidden behind another part of the surface.
std::vector<int> visible_vertices(const MeshState& state, const CanonicalMesh& mesh, double tolerance = 1.0);

struct Scenario {
  std::string name;
  DeformationModel model;
  int width = 160;
  int height = 160;
  int maskCol = 30, maskRow = 30, maskWidth = 100, maskHeight = 100;
  double spacing = 10.0;
  double baseDepth = 800.0;
  double density = 0.0;
  int textureBlobs = 0;
  NoiseModel noise;
  bool noisy = true;
  double zNear = 400.0;
  double zFar = 1500.0;
};

/// Named scenarios: translate, slant, bend, rotate, fold, textureless-rotate.
Scenario make_scenario(const std::string& name);

struct SyntheticSequence {
  Scenario scenario;
  CanonicalMesh mesh;
  GridOrigin origin;
  std::vector<RgbdFrame> frames;
  std::vector<FloatImage> zbuffers;
  std::vector<MeshState> truth;
  std::vector<PlantedPoint> planted;
  std::vector<std::vector<std::pair<Vertex3, Vertex3>>> correspondences;
};

SyntheticSequence generate(const Scenario& scenario, std::uint64_t seed);

/// Sequence directory: manifest.txt, frame_%05d.{ppm,pgm}, truth_%05d.obj, corr_%05d.csv.
void write_sequence(const SyntheticSequence& seq, const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace nrtrack::synth
