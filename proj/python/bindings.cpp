// Python bindings. Arrays cross the boundary as numpy: states and point sets are
// (n, 3) float64, depth is (rows, cols) uint16, colour (rows, cols, 3) uint8.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nrtrack/error.hpp"
#include "nrtrack/pipeline.hpp"

namespace py = pybind11;
using namespace nrtrack;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using U16 = py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Points to_points(const MeshState& s) {
  Points p(s.size(), 3);
  p.col(0) = s.x;
  p.col(1) = s.y;
  p.col(2) = s.z;
  return p;
}

MeshState to_state(const Points& p) {
  MeshState s(p.rows());
  s.x = p.col(0);
  s.y = p.col(1);
  s.z = p.col(2);
  return s;
}

template <typename T, typename Array>
Image<T> to_image(const Array& a, const char* what) {
  if (a.ndim() != 2) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a 2-D array");
  Image<T> img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.data.begin());
  return img;
}

ColorImage to_color(const U8& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw Error(ErrorCode::InvalidArgument, "color must be (rows, cols, 3)");
  ColorImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  const std::uint8_t* p = a.data();
  for (auto& px : img.data) {
    px = {p[0], p[1], p[2]};
    p += 3;
  }
  return img;
}

template <typename T>
py::array_t<T> from_image(const Image<T>& img) {
  py::array_t<T> out({img.height, img.width});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

py::array_t<std::uint8_t> from_color(const ColorImage& img) {
  py::array_t<std::uint8_t> out({img.height, img.width, 3});
  std::uint8_t* p = out.mutable_data();
  for (const auto& px : img.data) {
    *p++ = px.r;
    *p++ = px.g;
    *p++ = px.b;
  }
  return out;
}

// Colour is irrelevant to every term exposed here except detection, so allow omitting it.
RgbdFrame make_frame(const U16& depth, const std::optional<U8>& color) {
  RgbdFrame f;
  f.depth = to_image<std::uint16_t>(depth, "depth");
  f.color = color ? to_color(*color) : ColorImage(f.depth.width, f.depth.height, Rgb{});
  if (f.color.width != f.depth.width || f.color.height != f.depth.height)
    throw Error(ErrorCode::InvalidArgument, "color and depth sizes differ");
  return f;
}

io::PointPairs to_pairs(const Points& canonical, const Points& observed) {
  if (canonical.rows() != observed.rows()) throw Error(ErrorCode::CountMismatch, "point sets differ in length");
  io::PointPairs pairs;
  for (Eigen::Index i = 0; i < canonical.rows(); ++i) pairs.emplace_back(canonical.row(i).transpose(), observed.row(i).transpose());
  return pairs;
}

std::pair<Points, Points> from_pairs(const io::PointPairs& pairs) {
  Points c(pairs.size(), 3), o(pairs.size(), 3);
  for (size_t i = 0; i < pairs.size(); ++i) {
    c.row(i) = pairs[i].first.transpose();
    o.row(i) = pairs[i].second.transpose();
  }
  return {c, o};
}

py::dict to_dict(const EnergyBreakdown& e) {
  py::dict d;
  d["smoothness"] = e.smoothness;
  d["correspondence"] = e.correspondence;
  d["depth"] = e.depth;
  d["boundary"] = e.boundary;
  d["total"] = e.total;
  return d;
}

io::KeyValues to_key_values(const py::dict& config) {
  io::KeyValues kv;
  for (const auto& [k, v] : config) {
    std::string value;
    if (py::isinstance<py::bool_>(v))
      value = v.cast<bool>() ? "true" : "false";
    else if (py::isinstance<py::float_>(v))
      value = io::format_double(v.cast<double>());
    else
      value = py::str(v).cast<std::string>();
    kv[py::str(k).cast<std::string>()] = value;
  }
  return kv;
}

RunConfig make_config(const py::dict& config) {
  RunConfig c;
  c.apply(to_key_values(config));
  return c;
}

py::dict track_result(const TrackResult& r) {
  py::list states;
  for (const auto& s : r.states) states.append(to_points(s));
  py::dict d;
  d["mesh"] = r.mesh;
  d["states"] = states;
  d["correspondence_counts"] = r.correspondenceCounts;
  py::list trace;
  for (const auto& row : r.trace) {
    py::dict e = to_dict(row.energy);
    e["frame"] = row.frame;
    e["iter"] = row.iter;
    trace.append(e);
  }
  d["trace"] = trace;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Non-rigid surface tracking from RGBD sequences";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      err.attr("code") = to_string(e.code());
      PyErr_SetObject(error.ptr(), err.ptr());
    }
  });

  py::class_<CanonicalMesh>(m, "CanonicalMesh")
      .def_property_readonly("vertices", [](const CanonicalMesh& mesh) { return to_points(mesh.state()); })
      .def_property_readonly("triangles",
                             [](const CanonicalMesh& mesh) {
                               Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor> t(mesh.triangles.size(), 3);
                               for (size_t i = 0; i < mesh.triangles.size(); ++i)
                                 for (int e = 0; e < 3; ++e) t(i, e) = mesh.triangles[i].v[e];
                               return t;
                             })
      .def_property_readonly("boundary", [](const CanonicalMesh& mesh) { return mesh.boundary; })
      .def_property_readonly("degree", [](const CanonicalMesh& mesh) { return mesh.degree; })
      .def_property_readonly("spacing", [](const CanonicalMesh& mesh) { return mesh.spacing; })
      .def_property_readonly("triplets",
                             [](const CanonicalMesh& mesh) {
                               Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor> t(mesh.triplets.size(), 3);
                               for (size_t i = 0; i < mesh.triplets.size(); ++i) t.row(i) << mesh.triplets[i].i, mesh.triplets[i].j, mesh.triplets[i].k;
                               return t;
                             })
      .def("smoothness_matrix", [](const CanonicalMesh& mesh) { return mesh.smoothness; },
           "K as a scipy.sparse matrix")
      .def("__len__", &CanonicalMesh::size)
      .def("__repr__", [](const CanonicalMesh& mesh) {
        return "<CanonicalMesh " + std::to_string(mesh.size()) + " vertices, " + std::to_string(mesh.triangles.size()) + " triangles>";
      });

  m.def(
      "build_canonical_mesh",
      [](const U8& mask, const U16& depth, double spacing, std::optional<std::pair<double, double>> origin) {
        std::optional<GridOrigin> o;
        if (origin) o = GridOrigin{origin->first, origin->second};
        return build_canonical_mesh(to_image<std::uint8_t>(mask, "mask"), to_image<std::uint16_t>(depth, "depth"), spacing, o);
      },
      py::arg("mask"), py::arg("depth"), py::arg("spacing"), py::arg("origin") = py::none(),
      "Equilateral mesh over a foreground mask; origin is (col, row) of the lattice anchor.");

  m.def(
      "segment_foreground",
      [](const U16& depth, double zNear, double zFar, int maxHoleArea) {
        const Segmentation seg = segment_foreground(make_frame(depth, std::nullopt), zNear, zFar, SegmentOptions{maxHoleArea});
        Eigen::Matrix<int, Eigen::Dynamic, 2, Eigen::RowMajor> b(seg.boundary.size(), 2);
        for (size_t i = 0; i < seg.boundary.size(); ++i) b.row(i) << seg.boundary[i].col, seg.boundary[i].row;
        return py::make_tuple(from_image(seg.foreground), b);
      },
      py::arg("depth"), py::arg("z_near"), py::arg("z_far"), py::arg("max_hole_area") = 16,
      "Largest connected component inside the depth band. Returns (mask, boundary (col, row) pixels).");

  m.def(
      "sample_depth", [](const U16& depth, double x, double y) { return sample_depth(to_image<std::uint16_t>(depth, "depth"), x, y); },
      py::arg("depth"), py::arg("x"), py::arg("y"), "Bilinear depth at (x, y) over valid pixels; None if nothing valid.");

  py::class_<EnergyParams>(m, "EnergyParams")
      .def(py::init<>())
      .def_readwrite("lambda_c", &EnergyParams::lambdaC)
      .def_readwrite("lambda_d", &EnergyParams::lambdaD)
      .def_readwrite("lambda_b", &EnergyParams::lambdaB)
      .def_readwrite("alpha", &EnergyParams::alpha)
      .def_readwrite("occlusion_threshold", &EnergyParams::occlusionThreshold)
      .def("__repr__", [](const EnergyParams& p) {
        return "EnergyParams(lambda_c=" + io::format_double(p.lambdaC) + ", lambda_d=" + io::format_double(p.lambdaD) +
               ", lambda_b=" + io::format_double(p.lambdaB) + ", alpha=" + io::format_double(p.alpha) + ")";
      });

  m.def(
      "energy",
      [](const CanonicalMesh& mesh, const Points& state, const U16& depth, double zNear, double zFar, const Points& canonical,
         const Points& observed, const EnergyParams& params) {
        const MeshState s = to_state(state);
        if (s.size() != mesh.size()) throw Error(ErrorCode::CountMismatch, "state does not match the mesh");
        const RgbdFrame frame = make_frame(depth, std::nullopt);
        const Segmentation seg = segment_foreground(frame, zNear, zFar);
        const auto corr = attach_correspondences(to_pairs(canonical, observed), mesh).correspondences;
        return to_dict(psi_total(s, EnergyInputs{mesh, corr, &frame, &seg}, params));
      },
      py::arg("mesh"), py::arg("state"), py::arg("depth"), py::arg("z_near"), py::arg("z_far"), py::arg("canonical_points"),
      py::arg("observed_points"), py::arg("params") = EnergyParams{}, "Energy breakdown of one state against one frame.");

  m.def(
      "solve_frame",
      [](const CanonicalMesh& mesh, const Points& init, const U16& depth, double zNear, double zFar, const Points& canonical,
         const Points& observed, const EnergyParams& params, int maxIterations, double tol) {
        SolverConfig cfg;
        cfg.params = params;
        cfg.maxIterations = maxIterations;
        cfg.convergenceTol = tol;
        const RgbdFrame frame = make_frame(depth, std::nullopt);
        const Segmentation seg = segment_foreground(frame, zNear, zFar);
        const auto corr = attach_correspondences(to_pairs(canonical, observed), mesh).correspondences;
        const FactoredSystem system = prefactor(mesh.smoothness, params.alpha);
        const FrameSolution sol = solve_frame(to_state(init), EnergyInputs{mesh, corr, &frame, &seg}, system, cfg);
        py::list trace;
        for (const auto& e : sol.trace) trace.append(to_dict(e));
        py::dict d;
        d["state"] = to_points(sol.state);
        d["iterations"] = sol.iterations;
        d["converged"] = sol.converged;
        d["trace"] = trace;
        return d;
      },
      py::arg("mesh"), py::arg("init"), py::arg("depth"), py::arg("z_near"), py::arg("z_far"), py::arg("canonical_points"),
      py::arg("observed_points"), py::arg("params") = EnergyParams{}, py::arg("max_iterations") = 100, py::arg("tol") = 0.01,
      "Semi-implicit solve for one frame starting from init.");

  py::class_<synth::SyntheticSequence>(m, "SyntheticSequence")
      .def_property_readonly("scenario", [](const synth::SyntheticSequence& s) { return s.scenario.name; })
      .def_property_readonly("mesh", [](const synth::SyntheticSequence& s) { return s.mesh; })
      .def_property_readonly("z_band", [](const synth::SyntheticSequence& s) { return py::make_tuple(s.scenario.zNear, s.scenario.zFar); })
      .def("__len__", [](const synth::SyntheticSequence& s) { return s.frames.size(); })
      .def("depth", [](const synth::SyntheticSequence& s, size_t t) { return from_image(s.frames.at(t).depth); })
      .def("color", [](const synth::SyntheticSequence& s, size_t t) { return from_color(s.frames.at(t).color); })
      .def("truth", [](const synth::SyntheticSequence& s, size_t t) { return to_points(s.truth.at(t)); })
      .def("correspondences", [](const synth::SyntheticSequence& s, size_t t) { return from_pairs(s.correspondences.at(t)); },
           "(canonical, observed) planted point arrays for frame t")
      .def("visible_vertices", [](const synth::SyntheticSequence& s, size_t t) { return synth::visible_vertices(s.truth.at(t), s.mesh); });

  m.def(
      "generate",
      [](const std::string& scenario, std::uint64_t seed, bool noisy, std::optional<int> frames) {
        synth::Scenario sc = synth::make_scenario(scenario);
        sc.noisy = noisy;
        if (frames) sc.model.frames = *frames;
        return synth::generate(sc, seed);
      },
      py::arg("scenario"), py::arg("seed") = 1, py::arg("noisy") = true, py::arg("frames") = py::none(),
      "Synthetic sequence held in memory: translate, slant, bend, rotate, fold or textureless-rotate.");

  m.def("synth", &cmd_synth, py::arg("scenario"), py::arg("seed"), py::arg("out_dir"), "Write a synthetic sequence to disk.");

  m.def(
      "default_config", [] { return RunConfig{}.to_key_values(); }, "Every tracking option with its default, as strings.");

  m.def(
      "track",
      [](const synth::SyntheticSequence& seq, const py::dict& config) { return track_result(track(view_of(seq), make_config(config))); },
      py::arg("sequence"), py::arg("config") = py::dict(),
      "Track an in-memory sequence. config takes the keys of default_config().");
  m.def(
      "track",
      [](const fs::path& dir, const py::dict& config) {
        RunConfig c = make_config(config);
        c.sequence = dir;
        return track_result(track_sequence(c));
      },
      py::arg("sequence"), py::arg("config") = py::dict(), "Track a sequence directory.");

  m.def(
      "rmse", [](const Points& est, const Points& truth) { return rmse(to_state(est), to_state(truth)); }, py::arg("estimate"),
      py::arg("truth"));
  m.def(
      "max_error", [](const Points& est, const Points& truth) { return max_error(to_state(est), to_state(truth)); },
      py::arg("estimate"), py::arg("truth"));
  m.def(
      "evaluate",
      [](const fs::path& est, const fs::path& truth, std::optional<fs::path> out) {
        const EvalResult r = cmd_eval(est, truth, out ? *out : est / "metrics.csv");
        py::dict d;
        std::vector<double> rm, mx;
        for (const auto& f : r.frames) {
          rm.push_back(f.rmse);
          mx.push_back(f.maxError);
        }
        d["rmse"] = rm;
        d["max_error"] = mx;
        d["mean_rmse"] = r.meanRmse;
        d["mean_max_error"] = r.meanMaxError;
        return d;
      },
      py::arg("estimated_dir"), py::arg("truth_dir"), py::arg("out") = py::none(),
      "Compare est_*.obj with truth_*.obj and write metrics.csv.");
}
