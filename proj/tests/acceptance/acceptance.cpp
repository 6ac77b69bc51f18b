// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//
// usage: nrtrack_acceptance [path/to/nrtrack-cli] [scratch-dir]
// Criterion 10 is reported as FAIL when no CLI path is given.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "nrtrack/energy.hpp"
#include "nrtrack/error.hpp"
#include "nrtrack/features.hpp"
#include "nrtrack/pipeline.hpp"
#include "nrtrack/solver.hpp"
#include "nrtrack/synth.hpp"
#include "oracles.hpp"

using namespace nrtrack;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RgbdFrame frame_from_depth(DepthImage depth) {
  RgbdFrame f;
  f.color = ColorImage(depth.width, depth.height, Rgb{});
  f.depth = std::move(depth);
  return f;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(30, 50), count(1, 20);
  double worstSC = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const CanonicalMesh mesh = oracle::rect_mesh(dim(rng), dim(rng), 10.0);
    if (mesh.size() > 60) return {false, "instance with n > 60"};
    const auto corr = oracle::random_correspondences(mesh, count(rng), 5.0, rng);
    const MeshState s = oracle::random_state(mesh.state(), 3.0, rng);
    const auto rs = psi_smoothness(s, mesh);
    const auto fs_ = oracle::fd_gradient(s, [&](const MeshState& p) { return psi_smoothness(p, mesh).value; });
    worstSC = std::max(worstSC, oracle::relative_error(oracle::stack(rs.gradient.x, rs.gradient.y, rs.gradient.z), fs_));
    const auto rc = psi_correspondence(s, corr);
    const auto fc = oracle::fd_gradient(s, [&](const MeshState& p) { return psi_correspondence(p, corr).value; });
    worstSC = std::max(worstSC, oracle::relative_error(oracle::stack(rc.gradient.x, rc.gradient.y, rc.gradient.z), fc));
  }

  // piecewise-smooth terms on a rendered synthetic frame, at generic points
  const auto seq = synth::generate(synth::make_scenario("bend"), 11);
  const int t = 12;
  const RgbdFrame& frame = seq.frames[t];
  const Segmentation seg = segment_foreground(frame, seq.scenario.zNear, seq.scenario.zFar);
  double worstDB = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    MeshState s = oracle::keep_generic(oracle::random_state(seq.truth[t], 2.0, rng));
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const auto d = sample_depth(frame, std::clamp(s.x[i], 0.0, frame.width() - 1.0), std::clamp(s.y[i], 0.0, frame.height() - 1.0));
      if (d) s.z[i] = *d + 3.0;
    }
    const auto rd = psi_depth(s, frame, 30.0);
    const auto fd = oracle::fd_gradient(s, [&](const MeshState& p) { return psi_depth(p, frame, 30.0).value; }, 1e-5);
    worstDB = std::max(worstDB, oracle::relative_error(rd.gradient.z, fd.tail(s.size())));
    const auto rb = psi_boundary(s, seq.mesh, seg, frame);
    const auto fb = oracle::fd_gradient(s, [&](const MeshState& p) { return psi_boundary(p, seq.mesh, seg, frame).value; }, 1e-5);
    worstDB = std::max(worstDB, oracle::relative_error(oracle::stack(rb.gradient.x, rb.gradient.y, rb.gradient.z), fb));
  }
  const double secs = seconds_since(t0);
  return {worstSC < 1e-6 && worstDB < 1e-4 && secs < 10.0,
          "S/C rel err " + fmt(worstSC) + ", D/B rel err " + fmt(worstDB) + ", " + fmt(secs) + " s"};
}

Outcome smoothness_nullspace() {
  const CanonicalMesh mesh = oracle::rect_mesh(91, 76, 10.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix3d A;
    for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = u(rng);
    A(2, 2) = 800 + 100 * u(rng);
    const MeshState s = oracle::affine_state(mesh, A);
    const double scale = std::max({s.x.norm(), s.y.norm(), s.z.norm()});
    const auto r = psi_smoothness(s, mesh);
    worst = std::max({worst, r.value / (scale * scale), r.gradient.x.norm() / scale, r.gradient.y.norm() / scale,
                      r.gradient.z.norm() / scale});
  }
  return {mesh.size() == 100 && worst <= 1e-9, "n=" + std::to_string(mesh.size()) + ", worst relative residual " + fmt(worst)};
}

Outcome quadratic_exactness() {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const CanonicalMesh mesh = oracle::rect_mesh(50 + trial, 45 + trial % 4, 10.0);
    if (mesh.size() > 50) return {false, "instance with n > 50"};
    const auto corr = oracle::random_correspondences(mesh, 10 + trial, 6.0, rng);
    SolverConfig cfg;
    cfg.params.lambdaD = cfg.params.lambdaB = 0;
    cfg.maxIterations = 50000;
    cfg.convergenceTol = 1e-11;
    const auto sol =
        solve_frame(mesh.state(), EnergyInputs{mesh, corr, nullptr, nullptr}, prefactor(mesh.smoothness, cfg.params.alpha), cfg);

    // dense normal equations of the quadratic
    const int n = mesh.size();
    Eigen::MatrixXd H = Eigen::MatrixXd(mesh.smoothness);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 3);
    const double lc = cfg.params.lambdaC;
    for (const auto& c : corr)
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) H(c.attachment.vertices[a], c.attachment.vertices[b]) += lc * c.attachment.beta[a] * c.attachment.beta[b];
        for (int axis = 0; axis < 3; ++axis) rhs(c.attachment.vertices[a], axis) += lc * c.attachment.beta[a] * c.observedPoint[axis];
      }
    MeshState expected(n);
    expected.x = oracle::cholesky_solve(H, rhs.col(0));
    expected.y = oracle::cholesky_solve(H, rhs.col(1));
    expected.z = oracle::cholesky_solve(H, rhs.col(2));
    worst = std::max(worst, max_displacement(sol.state, expected) / mesh.spacing);
  }
  return {worst < 1e-6, "max deviation " + fmt(worst) + " x spacing"};
}

Outcome sparse_dense_equivalence() {
  const CanonicalMesh mesh = oracle::rect_mesh(91, 76, 10.0);
  const FactoredSystem sys = prefactor(mesh.smoothness, 10.0);
  const Eigen::MatrixXd A = Eigen::MatrixXd(sys.matrix());
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 500);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd b(mesh.size());
    for (auto& v : b) v = g(rng);
    worst = std::max(worst, (sys.solve(b) - oracle::cholesky_solve(A, b)).cwiseAbs().maxCoeff());
  }
  return {mesh.size() <= 100 && worst < 1e-8, "n=" + std::to_string(mesh.size()) + ", max abs diff " + fmt(worst)};
}

// ---------------------------------------------------------------------------

RunConfig planted_config() {
  RunConfig cfg;
  cfg.correspondences = CorrespondenceSource::Csv;
  return cfg;
}

Outcome depth_ablation() {
  const auto seq = synth::generate(synth::make_scenario("bend"), 1);
  RunConfig with = planted_config();
  RunConfig without = planted_config();
  without.solver.params.lambdaD = 0.0;
  const auto a = track(view_of(seq), with);
  const auto b = track(view_of(seq), without);

  // vertices farther than two spacings from every planted point
  std::vector<int> untextured;
  for (int v = 0; v < seq.mesh.size(); ++v) {
    bool near = false;
    for (const auto& p : seq.planted) near |= (p.canonical - seq.mesh.vertices[v]).head<2>().norm() <= 2 * seq.mesh.spacing;
    if (!near) untextured.push_back(v);
  }
  // judged at the most bent (final) frame; the all-frame maximum is reported alongside
  const double maxWith = max_error(a.states.back(), seq.truth.back(), &untextured);
  const double maxWithout = max_error(b.states.back(), seq.truth.back(), &untextured);
  double allWith = 0.0, allWithout = 0.0;
  for (size_t t = 1; t < seq.truth.size(); ++t) {
    allWith = std::max(allWith, max_error(a.states[t], seq.truth[t], &untextured));
    allWithout = std::max(allWithout, max_error(b.states[t], seq.truth[t], &untextured));
  }
  const double rWith = evaluate(a.states, seq.truth).meanRmse;
  const double rWithout = evaluate(b.states, seq.truth).meanRmse;
  const bool ok = !untextured.empty() && rWith < rWithout && maxWithout >= 2.0 * maxWith;
  return {ok, "mean RMSE " + fmt(rWith) + " vs " + fmt(rWithout) + " (lambdaD 0); untextured final-frame max error " + fmt(maxWith) +
                  " vs " + fmt(maxWithout) + " (x" + fmt(maxWithout / maxWith) + ", " + std::to_string(untextured.size()) +
                  " vertices; all frames " + fmt(allWith) + " vs " + fmt(allWithout) + ")"};
}

Outcome boundary_ablation() {
  const auto seq = synth::generate(synth::make_scenario("slant"), 1);
  RunConfig with = planted_config();
  RunConfig without = planted_config();
  without.solver.params.lambdaB = 0.0;
  const auto a = track(view_of(seq), with);
  const auto b = track(view_of(seq), without);
  double bWith = 0.0, bWithout = 0.0;
  for (size_t t = 0; t < seq.truth.size(); ++t) {
    bWith += rmse(a.states[t], seq.truth[t], &seq.mesh.boundary);
    bWithout += rmse(b.states[t], seq.truth[t], &seq.mesh.boundary);
  }
  bWith /= static_cast<double>(seq.truth.size());
  bWithout /= static_cast<double>(seq.truth.size());
  const double final = rmse(a.states.back(), seq.truth.back());
  const bool ok = bWith < bWithout && final < 0.5 * seq.mesh.spacing;
  return {ok, "boundary-vertex mean RMSE " + fmt(bWith) + " vs " + fmt(bWithout) + " (lambdaB 0); final-frame RMSE " + fmt(final) +
                  " (limit " + fmt(0.5 * seq.mesh.spacing) + ")"};
}

Outcome textureless() {
  const auto seq = synth::generate(synth::make_scenario("textureless-rotate"), 1);
  RunConfig cfg;
  cfg.correspondences = CorrespondenceSource::None;
  try {
    const auto r = track(view_of(seq), cfg);
    const double final = rmse(r.states.back(), seq.truth.back());
    return {r.states.size() == seq.truth.size() && final < seq.mesh.spacing,
            std::to_string(r.states.size()) + " frames, final RMSE " + fmt(final) + " (limit " + fmt(seq.mesh.spacing) + ")"};
  } catch (const Error& e) {
    return {false, std::string("error: ") + e.what()};
  }
}

Outcome self_occlusion() {
  const auto seq = synth::generate(synth::make_scenario("fold"), 1);
  try {
    const auto r = track(view_of(seq), planted_config());
    double worst = 0.0;
    int worstFrame = 0;
    for (size_t t = 0; t < seq.truth.size(); ++t) {
      const auto visible = synth::visible_vertices(seq.truth[t], seq.mesh);
      const double e = rmse(r.states[t], seq.truth[t], &visible);
      if (e > worst) {
        worst = e;
        worstFrame = static_cast<int>(t);
      }
    }
    const size_t fewest = std::min_element(seq.correspondences.begin(), seq.correspondences.end(),
                                           [](auto& a, auto& b) { return a.size() < b.size(); })->size();
    return {worst < seq.mesh.spacing, "worst visible-vertex RMSE " + fmt(worst) + " at frame " + std::to_string(worstFrame) +
                                          "; correspondences " + std::to_string(seq.correspondences[0].size()) + " -> " +
                                          std::to_string(fewest) + " at most occluded"};
  } catch (const Error& e) {
    return {false, std::string("error: ") + e.what()};
  }
}

// ---------------------------------------------------------------------------

Outcome matching_rules() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(314);
  std::uniform_int_distribution<int> count(0, 60);
  std::uniform_real_distribution<double> gateDist(3, 80);
  int agree = 0, invariants = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto can = oracle::random_keypoints(count(rng), 160, 160, 16, rng);
    const auto cur = oracle::random_keypoints(count(rng), 160, 160, 16, rng);
    std::vector<Eigen::Vector2d> prev;
    if (trial % 3 == 0)
      for (const auto& k : can) prev.push_back(k.position + Eigen::Vector2d(5, 5));
    const double gate = gateDist(rng);
    const auto got = putative_match(can, cur, prev, gate);
    agree += got == oracle::exhaustive_match(can, cur, prev, gate);
    std::set<int> a, b;
    bool ok = got.size() <= (std::min(can.size(), cur.size()) + 1) / 2;
    for (const auto& m : got) {
      ok &= a.insert(m.canonical).second && b.insert(m.current).second;
      const Eigen::Vector2d p = prev.empty() ? can[m.canonical].position : prev[m.canonical];
      ok &= (cur[m.current].position - p).norm() <= gate;
    }
    invariants += ok;
  }
  const double secs = seconds_since(t0);
  return {agree == 100 && invariants == 100 && secs < 5.0,
          std::to_string(agree) + "/100 equal to oracle, " + std::to_string(invariants) + "/100 invariants, " + fmt(secs) + " s"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome end_to_end_determinism(const std::string& cli, const fs::path& scratch) {
  if (cli.empty()) return {false, "no CLI path given"};
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = scratch / ("run" + std::to_string(run));
    fs::remove_all(dir);
    const std::string seqDir = (dir / "seq").string(), estDir = (dir / "est").string();
    const std::string q = "\"";
    const std::string cmds[] = {
        q + cli + q + " synth slant --seed 17 -o " + q + seqDir + q,
        q + cli + q + " track -s " + q + seqDir + q + " -o " + q + estDir + q,
        q + cli + q + " eval --est " + q + estDir + q + " --truth " + q + seqDir + q,
    };
    for (const auto& c : cmds)
      if (std::system((c + " > /dev/null").c_str()) != 0) return {false, "command failed: " + c};
    const std::string metrics = slurp(dir / "est" / "metrics.csv");
    if (metrics.empty()) return {false, "empty metrics.csv"};
    if (run == 0) first = metrics;
    else if (metrics != first) return {false, "metrics.csv differs between runs"};
  }
  return {true, "metrics.csv byte-identical across two runs (" + std::to_string(first.size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const fs::path scratch = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "nrtrack_acceptance";
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", gradient_suite},
      {"smoothness nullspace", smoothness_nullspace},
      {"quadratic subproblem exactness", quadratic_exactness},
      {"sparse/dense solve equivalence", sparse_dense_equivalence},
      {"depth term ablation (bend)", depth_ablation},
      {"boundary term ablation (slant)", boundary_ablation},
      {"textureless rotation", textureless},
      {"self-occlusion (fold)", self_occlusion},
      {"matching rules", matching_rules},
      {"end-to-end determinism", [&] { return end_to_end_determinism(cli, scratch); }},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
