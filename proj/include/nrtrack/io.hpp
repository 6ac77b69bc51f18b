#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nrtrack/energy.hpp"
#include "nrtrack/mesh.hpp"
#include "nrtrack/rgbd.hpp"

namespace nrtrack::io {

namespace fs = std::filesystem;

std::string indexed_name(const std::string& prefix, int index, const std::string& ext);

RgbdFrame load_frame(const fs::path& dir, int index);
void save_frame(const fs::path& dir, int index, const RgbdFrame& frame);

/// Line-oriented key=value text. '#' starts a comment; blank lines ignored.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(const fs::path& path);
void write_key_values(const fs::path& path, const KeyValues& kv);
KeyValues parse_key_values(const std::string& text);

struct ObjMesh {
  std::vector<Vertex3> vertices;
  std::vector<Triangle> triangles;
};

void write_obj(const fs::path& path, const MeshState& state, const std::vector<Triangle>& triangles);
ObjMesh read_obj(const fs::path& path);
MeshState to_state(const std::vector<Vertex3>& vertices);

using PointPairs = std::vector<std::pair<Vertex3, Vertex3>>;

/// Header `frame,cx,cy,cz,ox,oy,oz`.
void write_correspondences(const fs::path& path, int frame, const PointPairs& pairs);
PointPairs read_correspondences(const fs::path& path);

struct TraceRow {
  int frame;
  int iter;
  EnergyBreakdown energy;
};

/// Header `frame,iter,smooth,corr,depth,bound,total`.
void write_energy_trace(const fs::path& path, const std::vector<TraceRow>& rows);

std::string format_double(double v);

}  // namespace nrtrack::io
