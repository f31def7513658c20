#pragma once

#include <vector>

#include "crossview/image.hpp"
#include "crossview/matrix.hpp"

namespace crossview {

/// Dense per-pixel class probabilities, interleaved like Image:
/// data[(y * width + x) * channels + c].
struct SoftMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

SoftMap one_hot(const Mask& mask, int class_count);

/// Argmax class per pixel (lowest index wins ties).
Mask hard_labels(const SoftMap& probs);

/// Area-average downsample to side x side, channel-concatenate, flatten.
/// Output layout is planar: entry [c * side^2 + p] is channel c at coarse
/// pixel p (row-major). Inputs are already in [0, 1]; block averaging keeps
/// them there. Throws DimensionError when side is not in [1, min(H, W)].
Vector featurize(const Image& image, int side);
Vector featurize(const SoftMap& probs, int side);

}  // namespace crossview
