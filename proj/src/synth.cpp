#include "nrtrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "nrtrack/error.hpp"
#include "nrtrack/io.hpp"

namespace nrtrack::synth {

namespace {

// Portable draws from mt19937_64 so sequences are bit-identical across standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double gaussian(std::mt19937_64& rng) {
  const double u1 = std::max(uniform01(rng), 1e-300);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct Bounds {
  double minX, maxX, minY, maxY;
};

Bounds bounds(const CanonicalMesh& mesh) {
  Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& v : mesh.vertices) {
    b.minX = std::min(b.minX, v.x());
    b.maxX = std::max(b.maxX, v.x());
    b.minY = std::min(b.minY, v.y());
    b.maxY = std::max(b.maxY, v.y());
  }
  return b;
}

}  // namespace

DeformationKind parse_kind(const std::string& name) {
  if (name == "translate") return DeformationKind::Translate;
  if (name == "slant") return DeformationKind::Slant;
  if (name == "bend" || name == "cylinderBend") return DeformationKind::CylinderBend;
  if (name == "rotate" || name == "outOfPlaneRotate") return DeformationKind::OutOfPlaneRotate;
  if (name == "fold" || name == "foldOcclude") return DeformationKind::FoldOcclude;
  throw Error(ErrorCode::UnknownKind, "unknown deformation kind '" + name + "'");
}

std::string to_string(DeformationKind kind) {
  switch (kind) {
    case DeformationKind::Translate: return "translate";
    case DeformationKind::Slant: return "slant";
    case DeformationKind::CylinderBend: return "bend";
    case DeformationKind::OutOfPlaneRotate: return "rotate";
    case DeformationKind::FoldOcclude: return "fold";
  }
  return "unknown";
}

MeshState deform(const DeformationModel& model, const CanonicalMesh& mesh, int t) {
  if (t < 0 || t >= model.frames) throw Error(ErrorCode::InvalidArgument, "frame index out of range");
  MeshState s = mesh.state();
  if (t == 0) return s;
  const double u = model.frames > 1 ? static_cast<double>(t) / (model.frames - 1) : 0.0;
  const Bounds b = bounds(mesh);
  const double centerX = 0.5 * (b.minX + b.maxX);

  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double x = s.x[i], y = s.y[i], z = s.z[i];
    switch (model.kind) {
      case DeformationKind::Translate:
        s.x[i] = x + t * model.step.x();
        s.y[i] = y + t * model.step.y();
        s.z[i] = z + t * model.step.z();
        break;
      case DeformationKind::Slant: {
        // Rotation about the bottom edge; the top tilts away from the camera.
        const double theta = u * model.maxAngle;
        const double up = b.maxY - y;
        s.y[i] = b.maxY - up * std::cos(theta);
        s.z[i] = z + up * std::sin(theta);
        break;
      }
      case DeformationKind::CylinderBend: {
        // Arc-length preserving wrap around a vertical cylinder of radius 1 / kappa.
        const double kappa = u * model.maxCurvature;
        const double arc = x - centerX;
        if (std::abs(kappa) > 1e-12) {
          s.x[i] = centerX + std::sin(kappa * arc) / kappa;
          s.z[i] = z + (1.0 - std::cos(kappa * arc)) / kappa;
        }
        break;
      }
      case DeformationKind::OutOfPlaneRotate: {
        const double theta = u * model.maxAngle;
        const double arm = x - centerX;
        s.x[i] = centerX + arm * std::cos(theta);
        s.z[i] = z + arm * std::sin(theta);
        break;
      }
      case DeformationKind::FoldOcclude: {
        // Lower third swings up about a horizontal crease, away from the camera,
        // and ends up behind the middle third.
        const double phi = u * model.maxAngle;
        const double crease = b.minY + 2.0 * (b.maxY - b.minY) / 3.0;
        if (y > crease) {
          const double down = y - crease;
          s.y[i] = crease + down * std::cos(phi);
          s.z[i] = z + down * std::sin(phi);
        }
        break;
      }
    }
  }
  return s;
}

Rgb BlobTexture::sample(double x, double y) const {
  double r = base.r, g = base.g, b = base.b;
  for (const auto& blob : blobs) {
    const double d2 = (x - blob.center.x()) * (x - blob.center.x()) + (y - blob.center.y()) * (y - blob.center.y());
    if (d2 > 16.0 * blob.radius * blob.radius) continue;
    const double w = std::exp(-0.5 * d2 / (blob.radius * blob.radius));
    r += w * (blob.color.r - r);
    g += w * (blob.color.g - g);
    b += w * (blob.color.b - b);
  }
  auto to8 = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
  return {to8(r), to8(g), to8(b)};
}

BlobTexture make_blob_texture(double minX, double minY, double maxX, double maxY, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BlobTexture tex;
  for (int i = 0; i < count; ++i) {
    Blob blob;
    blob.center = {minX + uniform01(rng) * (maxX - minX), minY + uniform01(rng) * (maxY - minY)};
    blob.radius = 2.0 + 3.0 * uniform01(rng);
    const bool dark = uniform01(rng) < 0.5;
    blob.color = dark ? Rgb{20, 20, 20} : Rgb{240, 240, 240};
    tex.blobs.push_back(blob);
  }
  return tex;
}

RenderResult render(const MeshState& state, const CanonicalMesh& mesh, const BlobTexture& texture, int width, int height) {
  if (!state.all_finite()) throw Error(ErrorCode::InvalidArgument, "render: state is not finite");
  RenderResult out;
  out.frame.color = ColorImage(width, height, Rgb{0, 0, 0});
  out.frame.depth = DepthImage(width, height, 0);
  out.zbuffer = FloatImage(width, height, std::numeric_limits<double>::infinity());
  out.triangle = Image<int>(width, height, -1);

  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vertex3 a = state.vertex(tri.v[0]), b = state.vertex(tri.v[1]), c = state.vertex(tri.v[2]);
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (std::abs(det) < 1e-9) continue;  // edge-on
    const int c0 = std::max(0, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}) - 1e-9)));
    const int c1 = std::min(width - 1, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}) + 1e-9)));
    const int r0 = std::max(0, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}) - 1e-9)));
    const int r1 = std::min(height - 1, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}) + 1e-9)));
    const Vertex3& ca = mesh.vertices[tri.v[0]];
    const Vertex3& cb = mesh.vertices[tri.v[1]];
    const Vertex3& cc = mesh.vertices[tri.v[2]];
    for (int r = r0; r <= r1; ++r) {
      for (int col = c0; col <= c1; ++col) {
        const double px = col, py = r;
        const double wb = ((px - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (py - a.y())) / det;
        const double wc = ((b.x() - a.x()) * (py - a.y()) - (px - a.x()) * (b.y() - a.y())) / det;
        const double wa = 1.0 - wb - wc;
        if (wa < -1e-9 || wb < -1e-9 || wc < -1e-9) continue;
        const double z = wa * a.z() + wb * b.z() + wc * c.z();
        if (!(z < out.zbuffer.at(col, r))) continue;
        out.zbuffer.at(col, r) = z;
        out.triangle.at(col, r) = static_cast<int>(t);
        const Vertex3 canon = wa * ca + wb * cb + wc * cc;
        out.frame.color.at(col, r) = texture.sample(canon.x(), canon.y());
      }
    }
  }
  for (size_t p = 0; p < out.zbuffer.data.size(); ++p) {
    const double z = out.zbuffer.data[p];
    if (std::isfinite(z)) out.frame.depth.data[p] = static_cast<std::uint16_t>(std::clamp(std::lround(z), 1L, 65535L));
  }
  return out;
}

void add_noise(RgbdFrame& frame, const NoiseModel& noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& d : frame.depth.data) {
    if (d == 0) continue;
    const double drop = uniform01(rng);
    const double n = gaussian(rng);
    if (drop < noise.dropout) {
      d = 0;
      continue;
    }
    d = static_cast<std::uint16_t>(std::clamp(std::lround(d + noise.sigma * n), 1L, 65535L));
  }
}

std::vector<PlantedPoint> sample_planted_points(const CanonicalMesh& mesh, double density, std::uint64_t seed) {
  if (!(density >= 0)) throw Error(ErrorCode::InvalidArgument, "density must be >= 0");
  std::vector<double> cumulative;
  double area = 0.0;
  for (const auto& tri : mesh.triangles) {
    const Vertex3& a = mesh.vertices[tri.v[0]];
    const Vertex3& b = mesh.vertices[tri.v[1]];
    const Vertex3& c = mesh.vertices[tri.v[2]];
    area += 0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
    cumulative.push_back(area);
  }
  const long count = std::lround(density * area / 10000.0);
  std::vector<PlantedPoint> out;
  if (count <= 0 || area <= 0) return out;
  std::mt19937_64 rng(seed);
  for (long n = 0; n < count; ++n) {
    const double pick = uniform01(rng) * area;
    const auto t = static_cast<size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    const size_t tri = std::min(t, mesh.triangles.size() - 1);
    double u = uniform01(rng), v = uniform01(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    PlantedPoint p;
    p.attachment.triangle = static_cast<int>(tri);
    p.attachment.vertices = mesh.triangles[tri].v;
    p.attachment.beta = {1.0 - u - v, u, v};
    p.canonical = Vertex3::Zero();
    for (int e = 0; e < 3; ++e) p.canonical += p.attachment.beta[e] * mesh.vertices[p.attachment.vertices[e]];
    out.push_back(p);
  }
  return out;
}

double nearest_surface(const MeshState& state, const CanonicalMesh& mesh, double x, double y) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& tri : mesh.triangles) {
    const Vertex3 a = state.vertex(tri.v[0]), b = state.vertex(tri.v[1]), c = state.vertex(tri.v[2]);
    if (x < std::min({a.x(), b.x(), c.x()}) - 1e-9 || x > std::max({a.x(), b.x(), c.x()}) + 1e-9) continue;
    if (y < std::min({a.y(), b.y(), c.y()}) - 1e-9 || y > std::max({a.y(), b.y(), c.y()}) + 1e-9) continue;
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (std::abs(det) < 1e-9) continue;
    const double wb = ((x - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (y - a.y())) / det;
    const double wc = ((b.x() - a.x()) * (y - a.y()) - (x - a.x()) * (b.y() - a.y())) / det;
    const double wa = 1.0 - wb - wc;
    if (wa < -1e-9 || wb < -1e-9 || wc < -1e-9) continue;
    best = std::min(best, wa * a.z() + wb * b.z() + wc * c.z());
  }
  return best;
}

std::vector<std::pair<Vertex3, Vertex3>> plant_correspondences(const std::vector<PlantedPoint>& planted, const MeshState& state,
                                                               const CanonicalMesh& mesh, double tolerance) {
  std::vector<std::pair<Vertex3, Vertex3>> out;
  for (const auto& p : planted) {
    const Vertex3 observed = transform_point(p.attachment, state);
    if (observed.z() > nearest_surface(state, mesh, observed.x(), observed.y()) + tolerance) continue;
    out.emplace_back(p.canonical, observed);
  }
  return out;
}

std::vector<int> visible_vertices(const MeshState& state, const CanonicalMesh& mesh, double tolerance) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < state.size(); ++i)
    if (state.z[i] <= nearest_surface(state, mesh, state.x[i], state.y[i]) + tolerance) out.push_back(static_cast<int>(i));
  return out;
}

Scenario make_scenario(const std::string& name) {
  Scenario s;
  s.name = name;
  constexpr double deg = std::numbers::pi / 180.0;
  if (name == "translate") {
    s.model = {DeformationKind::Translate, 10, {2.0, 1.0, 0.0}, 0.0, 0.0};
    s.density = 10;
    s.textureBlobs = 60;
  } else if (name == "slant") {
    s.model = {DeformationKind::Slant, 20, {0, 0, 0}, 45.0 * deg, 0.0};
    s.density = 2;
    s.textureBlobs = 60;
  } else if (name == "bend") {
    s.model = {DeformationKind::CylinderBend, 20, {0, 0, 0}, 0.0, 0.02};
    s.density = 2;
    s.textureBlobs = 60;
  } else if (name == "rotate") {
    s.model = {DeformationKind::OutOfPlaneRotate, 20, {0, 0, 0}, 40.0 * deg, 0.0};
    s.density = 10;
    s.textureBlobs = 60;
  } else if (name == "fold") {
    s.model = {DeformationKind::FoldOcclude, 20, {0, 0, 0}, 120.0 * deg, 0.0};
    s.density = 30;
    s.textureBlobs = 60;
  } else if (name == "textureless-rotate") {
    s.model = {DeformationKind::OutOfPlaneRotate, 20, {0, 0, 0}, 40.0 * deg, 0.0};
    s.density = 0;
    s.textureBlobs = 0;
  } else {
    throw Error(ErrorCode::UnknownKind, "unknown scenario '" + name + "'");
  }
  return s;
}

SyntheticSequence generate(const Scenario& scenario, std::uint64_t seed) {
  SyntheticSequence seq;
  seq.scenario = scenario;
  Bitmap mask(scenario.width, scenario.height, 0);
  for (int r = scenario.maskRow; r < scenario.maskRow + scenario.maskHeight; ++r)
    for (int c = scenario.maskCol; c < scenario.maskCol + scenario.maskWidth; ++c)
      if (mask.contains(c, r)) mask.at(c, r) = 1;
  const DepthImage flat(scenario.width, scenario.height, static_cast<std::uint16_t>(std::lround(scenario.baseDepth)));
  seq.origin = {static_cast<double>(scenario.maskCol), static_cast<double>(scenario.maskRow)};
  seq.mesh = build_canonical_mesh(mask, flat, scenario.spacing, seq.origin);

  const Bounds b = bounds(seq.mesh);
  const BlobTexture texture = make_blob_texture(b.minX, b.minY, b.maxX, b.maxY, scenario.textureBlobs, seed * 2654435761ULL + 1);
  seq.planted = sample_planted_points(seq.mesh, scenario.density, seed * 2654435761ULL + 2);

  for (int t = 0; t < scenario.model.frames; ++t) {
    MeshState truth = deform(scenario.model, seq.mesh, t);
    RenderResult rendered = render(truth, seq.mesh, texture, scenario.width, scenario.height);
    seq.correspondences.push_back(plant_correspondences(seq.planted, truth, seq.mesh));
    if (scenario.noisy) add_noise(rendered.frame, scenario.noise, seed * 2654435761ULL + 1000 + static_cast<std::uint64_t>(t));
    seq.truth.push_back(std::move(truth));
    seq.frames.push_back(std::move(rendered.frame));
    seq.zbuffers.push_back(std::move(rendered.zbuffer));
  }
  return seq;
}

void write_sequence(const SyntheticSequence& seq, const std::filesystem::path& dir, std::uint64_t seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string());
  const auto& s = seq.scenario;
  io::KeyValues kv{
      {"scenario", s.name},
      {"seed", std::to_string(seed)},
      {"frames", std::to_string(seq.frames.size())},
      {"width", std::to_string(s.width)},
      {"height", std::to_string(s.height)},
      {"zNear", io::format_double(s.zNear)},
      {"zFar", io::format_double(s.zFar)},
      {"spacing", io::format_double(s.spacing)},
      {"gridOriginCol", io::format_double(seq.origin.col)},
      {"gridOriginRow", io::format_double(seq.origin.row)},
  };
  io::write_key_values(dir / "manifest.txt", kv);
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    const int i = static_cast<int>(t);
    io::save_frame(dir, i, seq.frames[t]);
    io::write_obj(dir / io::indexed_name("truth_", i, ".obj"), seq.truth[t], seq.mesh.triangles);
    io::write_correspondences(dir / io::indexed_name("corr_", i, ".csv"), i, seq.correspondences[t]);
  }
}

}  // namespace nrtrack::synth
