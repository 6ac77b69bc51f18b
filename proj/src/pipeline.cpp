#include "nrtrack/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include "nrtrack/error.hpp"
#include "nrtrack/features.hpp"
#include "nrtrack/synth.hpp"

namespace nrtrack {

CorrespondenceSource parse_correspondence_source(const std::string& s) {
  if (s == "auto") return CorrespondenceSource::Auto;
  if (s == "detector") return CorrespondenceSource::Detector;
  if (s == "csv") return CorrespondenceSource::Csv;
  if (s == "none") return CorrespondenceSource::None;
  throw Error(ErrorCode::Config, "correspondences must be auto|detector|csv|none, got '" + s + "'");
}

std::string to_string(CorrespondenceSource s) {
  switch (s) {
    case CorrespondenceSource::Auto: return "auto";
    case CorrespondenceSource::Detector: return "detector";
    case CorrespondenceSource::Csv: return "csv";
    case CorrespondenceSource::None: return "none";
  }
  return "auto";
}

EnergyParams RunConfig::effective_params() const {
  EnergyParams p = solver.params;
  if (disableDepth) p.lambdaD = 0.0;
  if (disableBoundary) p.lambdaB = 0.0;
  return p;
}

namespace {

std::string bool_str(bool b) { return b ? "true" : "false"; }

double to_number(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Config, "'" + key + "' expects a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_number(key, v);
  if (d != std::floor(d)) throw Error(ErrorCode::Config, "'" + key + "' expects an integer, got '" + v + "'");
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::Config, "'" + key + "' expects true|false, got '" + v + "'");
}

}  // namespace

io::KeyValues RunConfig::to_key_values() const {
  const auto& p = solver.params;
  return {
      {"sequence", sequence.string()},
      {"output", output.string()},
      {"spacing", io::format_double(spacing)},
      {"zNear", zNear ? io::format_double(*zNear) : ""},
      {"zFar", zFar ? io::format_double(*zFar) : ""},
      {"lambdaC", io::format_double(p.lambdaC)},
      {"lambdaD", io::format_double(p.lambdaD)},
      {"lambdaB", io::format_double(p.lambdaB)},
      {"alpha", io::format_double(p.alpha)},
      {"occlusionThreshold", io::format_double(p.occlusionThreshold)},
      {"maxIterations", std::to_string(solver.maxIterations)},
      {"convergenceTol", io::format_double(solver.convergenceTol)},
      {"refreshDataTermsEvery", std::to_string(solver.refreshDataTermsEvery)},
      {"correspondences", to_string(correspondences)},
      {"disableDepth", bool_str(disableDepth)},
      {"disableBoundary", bool_str(disableBoundary)},
      {"gateFactor", io::format_double(gateFactor)},
      {"maxHoleArea", std::to_string(maxHoleArea)},
  };
}

void RunConfig::apply(const io::KeyValues& kv) {
  auto& p = solver.params;
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
      {"sequence", [&](auto&, auto& v) { sequence = v; }},
      {"output", [&](auto&, auto& v) { output = v; }},
      {"spacing", [&](auto& k, auto& v) { spacing = to_number(k, v); }},
      {"zNear", [&](auto& k, auto& v) { zNear = v.empty() ? std::nullopt : std::optional(to_number(k, v)); }},
      {"zFar", [&](auto& k, auto& v) { zFar = v.empty() ? std::nullopt : std::optional(to_number(k, v)); }},
      {"lambdaC", [&](auto& k, auto& v) { p.lambdaC = to_number(k, v); }},
      {"lambdaD", [&](auto& k, auto& v) { p.lambdaD = to_number(k, v); }},
      {"lambdaB", [&](auto& k, auto& v) { p.lambdaB = to_number(k, v); }},
      {"alpha", [&](auto& k, auto& v) { p.alpha = to_number(k, v); }},
      {"occlusionThreshold", [&](auto& k, auto& v) { p.occlusionThreshold = to_number(k, v); }},
      {"maxIterations", [&](auto& k, auto& v) { solver.maxIterations = to_int(k, v); }},
      {"convergenceTol", [&](auto& k, auto& v) { solver.convergenceTol = to_number(k, v); }},
      {"refreshDataTermsEvery", [&](auto& k, auto& v) { solver.refreshDataTermsEvery = to_int(k, v); }},
      {"correspondences", [&](auto&, auto& v) { correspondences = parse_correspondence_source(v); }},
      {"disableDepth", [&](auto& k, auto& v) { disableDepth = to_bool(k, v); }},
      {"disableBoundary", [&](auto& k, auto& v) { disableBoundary = to_bool(k, v); }},
      {"gateFactor", [&](auto& k, auto& v) { gateFactor = to_number(k, v); }},
      {"maxHoleArea", [&](auto& k, auto& v) { maxHoleArea = to_int(k, v); }},
  };
  for (const auto& [k, v] : kv) {
    const auto it = setters.find(k);
    if (it == setters.end()) throw Error(ErrorCode::Config, "unknown config key '" + k + "'");
    it->second(k, v);
  }
}

namespace {

double manifest_number(const io::KeyValues& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw Error(ErrorCode::Config, "manifest lacks '" + key + "'");
  return to_number(key, it->second);
}

// Canonical keypoints carry their last matched position; unmatched ones fall
// back to T_V of their canonical location under the previous estimate.
struct FeatureTrack {
  std::vector<Keypoint> canonical;
  std::vector<std::optional<BarycentricAttachment>> attachment;
  std::vector<std::optional<Eigen::Vector2d>> lastMatched;

  std::vector<Eigen::Vector2d> previous_positions(const MeshState& previous) const {
    std::vector<Eigen::Vector2d> out;
    out.reserve(canonical.size());
    for (size_t i = 0; i < canonical.size(); ++i) {
      if (lastMatched[i]) {
        out.push_back(*lastMatched[i]);
      } else if (attachment[i]) {
        out.push_back(transform_point(*attachment[i], previous).head<2>());
      } else {
        out.push_back(canonical[i].position);
      }
    }
    return out;
  }
};

}  // namespace

SequenceView open_sequence(const fs::path& dir) {
  const io::KeyValues manifest = io::read_key_values(dir / "manifest.txt");
  SequenceView v;
  v.frames = static_cast<int>(manifest_number(manifest, "frames"));
  v.spacing = manifest_number(manifest, "spacing");
  v.zNear = manifest_number(manifest, "zNear");
  v.zFar = manifest_number(manifest, "zFar");
  if (manifest.contains("gridOriginCol") && manifest.contains("gridOriginRow"))
    v.origin = GridOrigin{manifest_number(manifest, "gridOriginCol"), manifest_number(manifest, "gridOriginRow")};
  v.frame = [dir](int t) { return io::load_frame(dir, t); };
  v.pairs = [dir](int t) -> std::optional<io::PointPairs> {
    const fs::path p = dir / io::indexed_name("corr_", t, ".csv");
    if (!fs::exists(p)) return std::nullopt;
    return io::read_correspondences(p);
  };
  return v;
}

SequenceView view_of(const synth::SyntheticSequence& seq) {
  SequenceView v;
  v.frames = static_cast<int>(seq.frames.size());
  v.spacing = seq.scenario.spacing;
  v.zNear = seq.scenario.zNear;
  v.zFar = seq.scenario.zFar;
  v.origin = seq.origin;
  v.frame = [&seq](int t) { return seq.frames.at(t); };
  v.pairs = [&seq](int t) -> std::optional<io::PointPairs> { return seq.correspondences.at(t); };
  return v;
}

TrackResult track_sequence(const RunConfig& config) { return track(open_sequence(config.sequence), config); }

TrackResult track(const SequenceView& seq, const RunConfig& config) {
  config.solver.validate();
  const int frames = seq.frames;
  if (frames < 1) throw Error(ErrorCode::Config, "sequence has no frames");
  const double spacing = config.spacing > 0 ? config.spacing : seq.spacing;
  const double zNear = config.zNear ? *config.zNear : seq.zNear;
  const double zFar = config.zFar ? *config.zFar : seq.zFar;

  SolverConfig solverConfig = config.solver;
  solverConfig.params = config.effective_params();
  const SegmentOptions segOpts{config.maxHoleArea};

  const RgbdFrame frame0 = seq.frame(0);
  const Segmentation seg0 = segment_foreground(frame0, zNear, zFar, segOpts);

  TrackResult result;
  result.mesh = build_canonical_mesh(seg0.foreground, frame0.depth, spacing, seq.origin);
  const CanonicalMesh& mesh = result.mesh;
  const FactoredSystem system = prefactor(mesh.smoothness, solverConfig.params.alpha);

  CorrespondenceSource source = config.correspondences;
  if (source == CorrespondenceSource::Auto)
    source = seq.pairs && seq.pairs(0) ? CorrespondenceSource::Csv : CorrespondenceSource::Detector;

  const BlobDetector detector;
  FeatureTrack track;
  if (source == CorrespondenceSource::Detector) {
    track.canonical = detect(detector, frame0, seg0);
    for (const auto& kp : track.canonical)
      track.attachment.push_back(try_barycentric_coords(Vertex3(kp.position.x(), kp.position.y(), 0.0), mesh));
    track.lastMatched.assign(track.canonical.size(), std::nullopt);
  }

  MeshState state = mesh.state();
  result.states.push_back(state);
  result.correspondenceCounts.push_back(0);

  for (int t = 1; t < frames; ++t) {
    const RgbdFrame frame = seq.frame(t);
    const Segmentation seg = segment_foreground(frame, zNear, zFar, segOpts);

    std::vector<Correspondence> correspondences;
    if (source == CorrespondenceSource::Csv) {
      const auto pairs = seq.pairs ? seq.pairs(t) : std::nullopt;
      if (!pairs) throw Error(ErrorCode::Io, "no correspondences for frame " + std::to_string(t));
      correspondences = attach_correspondences(*pairs, mesh).correspondences;
    } else if (source == CorrespondenceSource::Detector) {
      const auto current = detect(detector, frame, seg);
      const auto matches = putative_match(track.canonical, current, track.previous_positions(state), config.gateFactor * spacing);
      correspondences = build_correspondences(matches, track.canonical, current, mesh, frame0, frame).correspondences;
      track.lastMatched.assign(track.canonical.size(), std::nullopt);
      for (const auto& m : matches) track.lastMatched[m.canonical] = current[m.current].position;
    }

    const EnergyInputs inputs{mesh, correspondences, &frame, &seg};
    FrameSolution sol = solve_frame(state, inputs, system, solverConfig);
    for (size_t k = 0; k < sol.trace.size(); ++k) result.trace.push_back({t, static_cast<int>(k), sol.trace[k]});
    state = std::move(sol.state);
    result.states.push_back(state);
    result.correspondenceCounts.push_back(static_cast<int>(correspondences.size()));
  }
  return result;
}

TrackResult cmd_track(const RunConfig& config) {
  TrackResult result = track_sequence(config);
  std::error_code ec;
  fs::create_directories(config.output, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + config.output.string());
  for (size_t t = 0; t < result.states.size(); ++t)
    io::write_obj(config.output / io::indexed_name("est_", static_cast<int>(t), ".obj"), result.states[t], result.mesh.triangles);
  io::write_energy_trace(config.output / "energy.csv", result.trace);
  return result;
}

void cmd_synth(const std::string& scenario, std::uint64_t seed, const fs::path& outDir) {
  const synth::Scenario s = synth::make_scenario(scenario);
  synth::write_sequence(synth::generate(s, seed), outDir, seed);
}

namespace {

template <typename Fn>
void for_each_vertex(const MeshState& estimate, const MeshState& truth, const std::vector<int>* subset, Fn&& fn) {
  if (estimate.size() != truth.size()) throw Error(ErrorCode::CountMismatch, "vertex counts differ");
  if (subset) {
    for (int i : *subset) fn((estimate.vertex(i) - truth.vertex(i)).norm());
  } else {
    for (Eigen::Index i = 0; i < truth.size(); ++i) fn((estimate.vertex(i) - truth.vertex(i)).norm());
  }
}

}  // namespace

double rmse(const MeshState& estimate, const MeshState& truth, const std::vector<int>* subset) {
  double sum = 0.0;
  size_t n = 0;
  for_each_vertex(estimate, truth, subset, [&](double e) {
    sum += e * e;
    ++n;
  });
  return n ? std::sqrt(sum / n) : 0.0;
}

double max_error(const MeshState& estimate, const MeshState& truth, const std::vector<int>* subset) {
  double m = 0.0;
  for_each_vertex(estimate, truth, subset, [&](double e) { m = std::max(m, e); });
  return m;
}

EvalResult evaluate(const std::vector<MeshState>& estimates, const std::vector<MeshState>& truth) {
  if (estimates.size() != truth.size())
    throw Error(ErrorCode::CountMismatch, std::to_string(estimates.size()) + " estimated frames vs " + std::to_string(truth.size()));
  EvalResult out;
  for (size_t t = 0; t < truth.size(); ++t) {
    out.frames.push_back({static_cast<int>(t), rmse(estimates[t], truth[t]), max_error(estimates[t], truth[t])});
    out.meanRmse += out.frames.back().rmse;
    out.meanMaxError += out.frames.back().maxError;
  }
  if (!truth.empty()) {
    out.meanRmse /= static_cast<double>(truth.size());
    out.meanMaxError /= static_cast<double>(truth.size());
  }
  return out;
}

namespace {

std::vector<MeshState> load_states(const fs::path& dir, const std::string& prefix) {
  std::vector<MeshState> out;
  for (int t = 0;; ++t) {
    const fs::path p = dir / io::indexed_name(prefix, t, ".obj");
    if (!fs::exists(p)) break;
    out.push_back(io::to_state(io::read_obj(p).vertices));
  }
  if (out.empty()) throw Error(ErrorCode::Io, "no " + prefix + "*.obj files in " + dir.string());
  return out;
}

}  // namespace

EvalResult cmd_eval(const fs::path& estimatedDir, const fs::path& truthDir, const fs::path& out) {
  const EvalResult r = evaluate(load_states(estimatedDir, "est_"), load_states(truthDir, "truth_"));
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + out.string());
  f << "frame,rmse,max_error\n";
  for (const auto& m : r.frames) f << m.frame << ',' << io::format_double(m.rmse) << ',' << io::format_double(m.maxError) << '\n';
  f << "mean," << io::format_double(r.meanRmse) << ',' << io::format_double(r.meanMaxError) << '\n';
  if (!f) throw Error(ErrorCode::Io, "write failed " + out.string());
  return r;
}

void export_cloud(const fs::path& obj, const fs::path& ply, const PinholeIntrinsics& k) {
  if (!(k.fx > 0 && k.fy > 0 && k.depthScale > 0)) throw Error(ErrorCode::Config, "intrinsics must be positive");
  const io::ObjMesh mesh = io::read_obj(obj);
  std::ofstream f(ply);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + ply.string());
  f << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size()
    << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  for (const auto& v : mesh.vertices) {
    const double Z = v.z() * k.depthScale;
    const double X = (v.x() - k.cx) * Z / k.fx;
    const double Y = (v.y() - k.cy) * Z / k.fy;
    f << io::format_double(X) << ' ' << io::format_double(Y) << ' ' << io::format_double(Z) << '\n';
  }
  if (!f) throw Error(ErrorCode::Io, "write failed " + ply.string());
}

}  // namespace nrtrack
