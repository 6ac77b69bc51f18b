#include "nrtrack/image.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "nrtrack/error.hpp"

namespace nrtrack {

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

struct Header {
  int width, height, maxval;
};

Header read_header(std::istream& in, const std::string& magic, const std::filesystem::path& path) {
  if (next_token(in) != magic) throw Error(ErrorCode::Io, "expected " + magic + " in " + path.string());
  try {
    Header h{std::stoi(next_token(in)), std::stoi(next_token(in)), std::stoi(next_token(in))};
    if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535) throw std::invalid_argument("range");
    return h;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Io, "malformed netpbm header in " + path.string());
  }
}

}  // namespace

DepthImage read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const Header h = read_header(in, "P5", path);
  DepthImage img(h.width, h.height);
  const bool wide = h.maxval > 255;
  for (auto& px : img.data) {
    unsigned char b[2] = {0, 0};
    in.read(reinterpret_cast<char*>(b), wide ? 2 : 1);
    px = wide ? static_cast<std::uint16_t>((b[0] << 8) | b[1]) : b[0];
  }
  if (!in) throw Error(ErrorCode::Io, "truncated PGM " + path.string());
  return img;
}

void write_pgm16(const std::filesystem::path& path, const DepthImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (auto px : img.data) {
    const char b[2] = {static_cast<char>(px >> 8), static_cast<char>(px & 0xff)};
    out.write(b, 2);
  }
  if (!out) throw Error(ErrorCode::Io, "write failed " + path.string());
}

ColorImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const Header h = read_header(in, "P6", path);
  if (h.maxval > 255) throw Error(ErrorCode::Io, "16-bit PPM not supported: " + path.string());
  ColorImage img(h.width, h.height);
  for (auto& px : img.data) {
    unsigned char b[3];
    in.read(reinterpret_cast<char*>(b), 3);
    px = {b[0], b[1], b[2]};
  }
  if (!in) throw Error(ErrorCode::Io, "truncated PPM " + path.string());
  return img;
}

void write_ppm(const std::filesystem::path& path, const ColorImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (const auto& px : img.data) {
    const char b[3] = {static_cast<char>(px.r), static_cast<char>(px.g), static_cast<char>(px.b)};
    out.write(b, 3);
  }
  if (!out) throw Error(ErrorCode::Io, "write failed " + path.string());
}

FloatImage to_grayscale(const ColorImage& img) {
  FloatImage gray(img.width, img.height);
  for (size_t i = 0; i < img.data.size(); ++i) {
    const auto& p = img.data[i];
    gray.data[i] = (0.299 * p.r + 0.587 * p.g + 0.114 * p.b) / 255.0;
  }
  return gray;
}

}  // namespace nrtrack
