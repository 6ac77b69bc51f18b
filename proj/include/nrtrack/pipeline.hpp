#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nrtrack/io.hpp"
#include "nrtrack/mesh.hpp"
#include "nrtrack/solver.hpp"
#include "nrtrack/synth.hpp"

namespace nrtrack {

namespace fs = std::filesystem;

enum class CorrespondenceSource { Auto, Detector, Csv, None };

CorrespondenceSource parse_correspondence_source(const std::string& s);
std::string to_string(CorrespondenceSource s);

struct RunConfig {
  fs::path sequence;
  fs::path output;
  double spacing = 0.0;  // <= 0: take from the manifest
  std::optional<double> zNear, zFar;
  SolverConfig solver;
  CorrespondenceSource correspondences = CorrespondenceSource::Auto;
  bool disableDepth = false;
  bool disableBoundary = false;
  double gateFactor = 3.0;  // matching gate in units of mesh spacing
  int maxHoleArea = 16;

  /// Solver parameters with ablation flags folded in.
  EnergyParams effective_params() const;

  io::KeyValues to_key_values() const;
  /// Unknown keys or unparsable values throw Error(Config).
  void apply(const io::KeyValues& kv);
};

struct TrackResult {
  CanonicalMesh mesh;
  std::vector<MeshState> states;
  std::vector<io::TraceRow> trace;
  std::vector<int> correspondenceCounts;
};

/// Frame and correspondence access for one sequence, on disk or in memory.
struct SequenceView {
  int frames = 0;
  double spacing = 0.0;
  double zNear = 0.0, zFar = 0.0;
  std::optional<GridOrigin> origin;
  std::function<RgbdFrame(int)> frame;
  std::function<std::optional<io::PointPairs>(int)> pairs;  // nullopt: no stored correspondences
};

SequenceView open_sequence(const fs::path& dir);
/// Borrows `seq`; it must outlive the view.
SequenceView view_of(const synth::SyntheticSequence& seq);

TrackResult track(const SequenceView& seq, const RunConfig& config);
/// track(open_sequence(config.sequence), config)
TrackResult track_sequence(const RunConfig& config);

/// Writes est_%05d.obj per frame and energy.csv into config.output.
TrackResult cmd_track(const RunConfig& config);

void cmd_synth(const std::string& scenario, std::uint64_t seed, const fs::path& outDir);

struct FrameMetrics {
  int frame;
  double rmse;
  double maxError;
};

struct EvalResult {
  std::vector<FrameMetrics> frames;
  double meanRmse = 0.0;
  double meanMaxError = 0.0;
};

double rmse(const MeshState& estimate, const MeshState& truth, const std::vector<int>* subset = nullptr);
double max_error(const MeshState& estimate, const MeshState& truth, const std::vector<int>* subset = nullptr);

EvalResult evaluate(const std::vector<MeshState>& estimates, const std::vector<MeshState>& truth);

/// Compares est_%05d.obj against truth_%05d.obj and writes metrics.csv to `out`.
EvalResult cmd_eval(const fs::path& estimatedDir, const fs::path& truthDir, const fs::path& out);

struct PinholeIntrinsics {
  double fx = 525.0, fy = 525.0, cx = 319.5, cy = 239.5;
  double depthScale = 0.001;  // depth units to metres
};

/// OBJ in (column, row, depth) space to an ASCII PLY point cloud in metres.
void export_cloud(const fs::path& obj, const fs::path& ply, const PinholeIntrinsics& intrinsics);

}  // namespace nrtrack
