#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace crossview {

/// Interleaved RGB image with channel values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height * width * 3, row-major, RGB

  static Image filled(int width, int height, double r, double g, double b);

  double& at(int x, int y, int c) { return data[(y * width + x) * 3 + c]; }
  double at(int x, int y, int c) const { return data[(y * width + x) * 3 + c]; }
};

/// Per-pixel class indices.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // height * width, row-major

  std::uint8_t& at(int x, int y) { return data[y * width + x]; }
  std::uint8_t at(int x, int y) const { return data[y * width + x]; }
};

// Binary PPM (P6) with maxval 255; values round-trip via round(v * 255).
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// Binary PGM (P5) carrying class indices.
void write_pgm(const std::string& path, const Mask& mask);
Mask read_pgm(const std::string& path);

}  // namespace crossview
