#include "crossview/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crossview/errors.hpp"

namespace crossview {

namespace {

// Exact box-filter average of cells [i0, i1) x [j0, j1) in continuous pixel
// coordinates, with fractional edge coverage.
double box_average(const double* data, int width, int stride, int channel,
                   double x0, double x1, double y0, double y1) {
  double total = 0.0;
  const int iy0 = static_cast<int>(std::floor(y0));
  const int iy1 = static_cast<int>(std::ceil(y1));
  const int ix0 = static_cast<int>(std::floor(x0));
  const int ix1 = static_cast<int>(std::ceil(x1));
  for (int y = iy0; y < iy1; ++y) {
    const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
    if (wy <= 0) continue;
    for (int x = ix0; x < ix1; ++x) {
      const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
      if (wx <= 0) continue;
      total += wx * wy *
               data[(static_cast<std::size_t>(y) * width + x) * stride + channel];
    }
  }
  return total / ((x1 - x0) * (y1 - y0));
}

Vector featurize_impl(const double* data, int width, int height, int channels,
                      int side) {
  if (side <= 0 || side > std::min(width, height)) {
    throw DimensionError("featurize: side must be in [1, min(H, W)], got " +
                         std::to_string(side));
  }
  Vector out(static_cast<Eigen::Index>(side) * side * channels);
  const double sx = static_cast<double>(width) / side;
  const double sy = static_cast<double>(height) / side;
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        out(static_cast<Eigen::Index>(c) * side * side + i * side + j) =
            box_average(data, width, channels, c, j * sx, (j + 1) * sx,
                        i * sy, (i + 1) * sy);
      }
    }
  }
  return out;
}

}  // namespace

SoftMap one_hot(const Mask& mask, int class_count) {
  SoftMap out;
  out.width = mask.width;
  out.height = mask.height;
  out.channels = class_count;
  out.data.assign(
      static_cast<std::size_t>(mask.width) * mask.height * class_count, 0.0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const int cls = mask.at(x, y);
      if (cls >= class_count) {
        throw DataError("one_hot: mask label " + std::to_string(cls) +
                        " out of range");
      }
      out.at(x, y, cls) = 1.0;
    }
  }
  return out;
}

Mask hard_labels(const SoftMap& probs) {
  Mask out;
  out.width = probs.width;
  out.height = probs.height;
  out.data.resize(static_cast<std::size_t>(probs.width) * probs.height);
  for (int y = 0; y < probs.height; ++y) {
    for (int x = 0; x < probs.width; ++x) {
      int best = 0;
      double best_p = probs.at(x, y, 0);
      for (int c = 1; c < probs.channels; ++c) {
        if (probs.at(x, y, c) > best_p) {
          best_p = probs.at(x, y, c);
          best = c;
        }
      }
      out.at(x, y) = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

Vector featurize(const Image& image, int side) {
  return featurize_impl(image.data.data(), image.width, image.height, 3, side);
}

Vector featurize(const SoftMap& probs, int side) {
  return featurize_impl(probs.data.data(), probs.width, probs.height,
                        probs.channels, side);
}

}  // namespace crossview
