#include "crossview/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "crossview/errors.hpp"

namespace crossview {

namespace {

std::uint8_t to_byte(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      break;
    }
  }
  while ((c = is.get()) != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

struct PnmHeader {
  int width;
  int height;
};

PnmHeader read_header(std::istream& is, const std::string& magic,
                      const std::string& path) {
  if (next_token(is) != magic) {
    throw DataError("bad magic in " + path);
  }
  const int w = std::stoi(next_token(is));
  const int h = std::stoi(next_token(is));
  const int maxval = std::stoi(next_token(is));
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw DataError("unsupported PNM header in " + path);
  }
  return {w, h};
}

}  // namespace

Image Image::filled(int width, int height, double r, double g, double b) {
  Image img;
  img.width = width;
  img.height = height;
  img.data.resize(static_cast<std::size_t>(width) * height * 3);
  for (int i = 0; i < width * height; ++i) {
    img.data[i * 3 + 0] = r;
    img.data[i * 3 + 1] = g;
    img.data[i * 3 + 2] = b;
  }
  return img;
}

void write_ppm(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path);
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> bytes(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    bytes[i] = to_byte(img.data[i]);
  }
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("short write: " + path);
}

Image read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  const PnmHeader h = read_header(is, "P6", path);
  Image img;
  img.width = h.width;
  img.height = h.height;
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height * 3;
  std::vector<std::uint8_t> bytes(n);
  is.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(n));
  if (!is) throw DataError("truncated PPM: " + path);
  img.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.data[i] = bytes[i] / 255.0;
  }
  return img;
}

void write_pgm(const std::string& path, const Mask& mask) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path);
  os << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(mask.data.data()),
           static_cast<std::streamsize>(mask.data.size()));
  if (!os) throw DataError("short write: " + path);
}

Mask read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  const PnmHeader h = read_header(is, "P5", path);
  Mask mask;
  mask.width = h.width;
  mask.height = h.height;
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  mask.data.resize(n);
  is.read(reinterpret_cast<char*>(mask.data.data()),
          static_cast<std::streamsize>(n));
  if (!is) throw DataError("truncated PGM: " + path);
  return mask;
}

}  // namespace crossview
