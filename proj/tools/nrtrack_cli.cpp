// nrtrack command line: synth | track | eval | export-cloud.
//
// Exit codes: 0 success, 1 other failure, 2 config error, 3 divergence, 4 I/O.

#include <cstdint>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "nrtrack/error.hpp"
#include "nrtrack/pipeline.hpp"

namespace {

int exit_code(nrtrack::ErrorCode code) {
  using nrtrack::ErrorCode;
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownKind: return 2;
    case ErrorCode::Diverged: return 3;
    case ErrorCode::Io:
    case ErrorCode::CountMismatch: return 4;
    default: return 1;
  }
}

// Flags that map one-to-one onto RunConfig keys.
struct Overrides {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options[key] = app->add_option(flag, values[key], help);
  }
  void add_flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options[key] = app->add_flag(flag, help);
  }
  nrtrack::io::KeyValues collect() const {
    nrtrack::io::KeyValues kv;
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      kv[key] = opt->get_expected() == 0 ? "true" : values.at(key);
    }
    return kv;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-rigid surface tracking from RGBD sequences"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic RGBD sequence with ground truth");
  std::string scenario;
  std::uint64_t seed = 1;
  std::string synthOut;
  synth->add_option("scenario", scenario, "translate|slant|bend|rotate|fold|textureless-rotate")->required();
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("-o,--out", synthOut, "Output sequence directory")->required();

  auto* track = app.add_subcommand("track", "Track the mesh through a sequence");
  std::string configFile;
  bool dumpConfig = false;
  Overrides ov;
  track->add_option("--config", configFile, "key=value config file (flags override it)");
  track->add_flag("--dump-config", dumpConfig, "Print the effective configuration and exit");
  ov.add(track, "-s,--sequence", "sequence", "Sequence directory");
  ov.add(track, "-o,--out", "output", "Output directory for est_*.obj and energy.csv");
  ov.add(track, "--spacing", "spacing", "Mesh edge length in pixels (default: manifest)");
  ov.add(track, "--z-near", "zNear", "Segmentation band near limit (default: manifest)");
  ov.add(track, "--z-far", "zFar", "Segmentation band far limit (default: manifest)");
  ov.add(track, "--lambda-c", "lambdaC", "Correspondence weight");
  ov.add(track, "--lambda-d", "lambdaD", "Depth weight");
  ov.add(track, "--lambda-b", "lambdaB", "Boundary weight");
  ov.add(track, "--alpha", "alpha", "Adaptation rate");
  ov.add(track, "--occlusion-threshold", "occlusionThreshold", "Depth residual above which a vertex is treated as occluded");
  ov.add(track, "--max-iterations", "maxIterations", "Iterations per frame");
  ov.add(track, "--tol", "convergenceTol", "Stop when no vertex moves more than this");
  ov.add(track, "--refresh-every", "refreshDataTermsEvery", "Iterations between data target refreshes");
  ov.add(track, "--correspondences", "correspondences", "auto|detector|csv|none");
  ov.add(track, "--gate-factor", "gateFactor", "Matching gate in mesh spacings");
  ov.add(track, "--max-hole-area", "maxHoleArea", "Largest segmentation hole filled, in pixels");
  ov.add_flag(track, "--disable-depth", "disableDepth", "Ablate the depth term");
  ov.add_flag(track, "--disable-boundary", "disableBoundary", "Ablate the boundary term");

  auto* eval = app.add_subcommand("eval", "Compare estimated meshes against ground truth");
  std::string estDir, truthDir, metricsOut;
  eval->add_option("--est", estDir, "Directory with est_*.obj")->required();
  eval->add_option("--truth", truthDir, "Directory with truth_*.obj")->required();
  eval->add_option("-o,--out", metricsOut, "metrics.csv path (default: <est>/metrics.csv)");

  auto* cloud = app.add_subcommand("export-cloud", "Convert an OBJ mesh to a metric PLY point cloud");
  std::string objIn, plyOut;
  nrtrack::PinholeIntrinsics k;
  cloud->add_option("input", objIn, "OBJ mesh")->required();
  cloud->add_option("-o,--out", plyOut, "PLY output")->required();
  cloud->add_option("--fx", k.fx);
  cloud->add_option("--fy", k.fy);
  cloud->add_option("--cx", k.cx);
  cloud->add_option("--cy", k.cy);
  cloud->add_option("--depth-scale", k.depthScale, "Metres per depth unit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      nrtrack::cmd_synth(scenario, seed, synthOut);
    } else if (track->parsed()) {
      nrtrack::RunConfig config;
      if (!configFile.empty()) config.apply(nrtrack::io::read_key_values(configFile));
      config.apply(ov.collect());
      if (dumpConfig) {
        for (const auto& [key, value] : config.to_key_values()) std::cout << key << '=' << value << '\n';
        return 0;
      }
      if (config.sequence.empty() || config.output.empty())
        throw nrtrack::Error(nrtrack::ErrorCode::Config, "track needs --sequence and --out");
      const auto result = nrtrack::cmd_track(config);
      std::cout << "tracked " << result.states.size() << " frames, " << result.mesh.size() << " vertices\n";
    } else if (eval->parsed()) {
      const std::string out = metricsOut.empty() ? (std::filesystem::path(estDir) / "metrics.csv").string() : metricsOut;
      const auto r = nrtrack::cmd_eval(estDir, truthDir, out);
      std::cout << "mean rmse " << r.meanRmse << ", mean max error " << r.meanMaxError << '\n';
    } else if (cloud->parsed()) {
      nrtrack::export_cloud(objIn, plyOut, k);
    }
  } catch (const nrtrack::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
