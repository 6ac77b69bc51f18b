#include "nrtrack/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nrtrack/error.hpp"

namespace nrtrack::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

double parse_double(const std::string& tok, const fs::path& path) {
  double v = 0;
  const auto t = trim(tok);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) throw Error(ErrorCode::Io, "bad number '" + t + "' in " + path.string());
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string indexed_name(const std::string& prefix, int index, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", index);
  return prefix + buf + ext;
}

RgbdFrame load_frame(const fs::path& dir, int index) {
  RgbdFrame f;
  f.color = read_ppm(dir / indexed_name("frame_", index, ".ppm"));
  f.depth = read_pgm16(dir / indexed_name("frame_", index, ".pgm"));
  if (f.color.width != f.depth.width || f.color.height != f.depth.height)
    throw Error(ErrorCode::Io, "colour and depth sizes differ for frame " + std::to_string(index));
  return f;
}

void save_frame(const fs::path& dir, int index, const RgbdFrame& frame) {
  write_ppm(dir / indexed_name("frame_", index, ".ppm"), frame.color);
  write_pgm16(dir / indexed_name("frame_", index, ".pgm"), frame.depth);
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Config, "line " + std::to_string(lineNo) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const fs::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

void write_key_values(const fs::path& path, const KeyValues& kv) {
  auto out = open_out(path);
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

void write_obj(const fs::path& path, const MeshState& state, const std::vector<Triangle>& triangles) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < state.size(); ++i)
    out << "v " << format_double(state.x[i]) << ' ' << format_double(state.y[i]) << ' ' << format_double(state.z[i]) << '\n';
  for (const auto& t : triangles) out << "f " << t.v[0] + 1 << ' ' << t.v[1] + 1 << ' ' << t.v[2] + 1 << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed " + path.string());
}

ObjMesh read_obj(const fs::path& path) {
  auto in = open_in(path);
  ObjMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      std::string a, b, c;
      ss >> a >> b >> c;
      mesh.vertices.emplace_back(parse_double(a, path), parse_double(b, path), parse_double(c, path));
    } else if (tag == "f") {
      Triangle t{};
      for (int e = 0; e < 3; ++e) {
        std::string tok;
        if (!(ss >> tok)) throw Error(ErrorCode::Io, "short face line in " + path.string());
        t.v[e] = static_cast<int>(parse_double(tok.substr(0, tok.find('/')), path)) - 1;
      }
      mesh.triangles.push_back(t);
    }
  }
  return mesh;
}

MeshState to_state(const std::vector<Vertex3>& vertices) {
  MeshState s(static_cast<Eigen::Index>(vertices.size()));
  for (size_t i = 0; i < vertices.size(); ++i) s.set_vertex(static_cast<Eigen::Index>(i), vertices[i]);
  return s;
}

void write_correspondences(const fs::path& path, int frame, const PointPairs& pairs) {
  auto out = open_out(path);
  out << "frame,cx,cy,cz,ox,oy,oz\n";
  for (const auto& [c, o] : pairs) {
    out << frame << ',' << format_double(c.x()) << ',' << format_double(c.y()) << ',' << format_double(c.z()) << ','
        << format_double(o.x()) << ',' << format_double(o.y()) << ',' << format_double(o.z()) << '\n';
  }
}

PointPairs read_correspondences(const fs::path& path) {
  auto in = open_in(path);
  PointPairs pairs;
  std::string line;
  if (!std::getline(in, line) || trim(line) != "frame,cx,cy,cz,ox,oy,oz")
    throw Error(ErrorCode::Io, "missing correspondence header in " + path.string());
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 7) throw Error(ErrorCode::Io, "expected 7 fields in " + path.string());
    pairs.emplace_back(Vertex3(parse_double(f[1], path), parse_double(f[2], path), parse_double(f[3], path)),
                       Vertex3(parse_double(f[4], path), parse_double(f[5], path), parse_double(f[6], path)));
  }
  return pairs;
}

void write_energy_trace(const fs::path& path, const std::vector<TraceRow>& rows) {
  auto out = open_out(path);
  out << "frame,iter,smooth,corr,depth,bound,total\n";
  for (const auto& r : rows) {
    out << r.frame << ',' << r.iter << ',' << format_double(r.energy.smoothness) << ',' << format_double(r.energy.correspondence)
        << ',' << format_double(r.energy.depth) << ',' << format_double(r.energy.boundary) << ',' << format_double(r.energy.total)
        << '\n';
  }
}

}  // namespace nrtrack::io
