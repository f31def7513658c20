#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crossview/scene.hpp"

namespace crossview {

struct CameraRange {
  double height_lo = 0.0;
  double height_hi = 0.0;
  double pitch_lo_deg = 0.0;
  double pitch_hi_deg = 0.0;
};

/// A scene family: everything needed to sample concrete scenes and the two
/// camera views. Ground-level (car) cameras are the source domain; elevated
/// (drone) cameras are the target domain.
struct SceneTemplate {
  std::vector<std::string> classes = {"road",  "building", "car",
                                      "tree",  "person",   "terrain"};
  std::vector<Vector3> palette;  // per class; defaults filled when empty
  double extent = 40.0;
  int width = 64;
  int height = 64;
  double focal_px = 64.0;
  double noise_sigma = 0.015;
  CameraRange car{1.5, 1.5, 0.0, 5.0};
  CameraRange drone{25.0, 35.0, 50.0, 70.0};
  // Photometric difference of the elevated view (applied to drone images
  // only, masks untouched). Identity gain/zero offset disables it.
  Vector3 target_gain{1.0, 1.0, 1.0};
  Vector3 target_offset{0.0, 0.0, 0.0};
  // Per-scene exposure jitter: each scene draws a global gain in
  // [1 - j, 1 + j], shared by both views of a paired scene. Spreads image
  // distances without touching the masks.
  double exposure_jitter = 0.0;
};

void fill_default_palette(SceneTemplate& tmpl);
SceneTemplate scene_template_from_json(const std::string& json_text);
std::string to_json(const SceneTemplate& tmpl);

/// One sampled scene with both camera views and the linear transform
/// carrying the car view's parameters to the drone view's.
struct SceneSample {
  SceneConfig scene;
  CameraPose car_pose;
  CameraPose drone_pose;
  ViewTransform transform;
};

SceneSample sample_scene(const SceneTemplate& tmpl, std::uint64_t scene_seed);

struct DatasetCounts {
  int source = 200;
  int target = 200;
  int target_test = 50;  // unused in paired mode
};

/// Writes a cross-view dataset directory:
///   source/{img,mask}/NNNN.{ppm,pgm}, target/{img,...}/..., manifest.json
/// Paired: source and target render the same scenes (same indices), both
/// labeled, with per-scene view transforms in the manifest. Unpaired:
/// domains draw from disjoint scene seeds; the target training split is
/// written without masks and a labeled target_test/ split is added.
/// `provenance_json` is embedded verbatim in the manifest when non-empty.
void make_cross_view_dataset(const SceneTemplate& tmpl,
                             const DatasetCounts& counts, bool paired,
                             std::uint64_t seed, const std::string& out_dir,
                             const std::string& provenance_json = "");

struct DomainData {
  std::vector<Image> images;
  std::vector<Mask> masks;  // empty when the split is unlabeled
};

struct DatasetInfo {
  std::vector<std::string> classes;
  std::vector<Vector3> palette;
  int width = 0;
  int height = 0;
  bool paired = false;
  std::uint64_t seed = 0;
};

DatasetInfo read_dataset_info(const std::string& dir);

/// Loads one split ("source", "target", "target_test"). Throws DataError if
/// `require_masks` is set and the split has none.
DomainData load_domain(const std::string& dir, const std::string& split,
                       bool require_masks);

}  // namespace crossview
