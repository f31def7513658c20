#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crossview/adapt_loss.hpp"
#include "crossview/dataset.hpp"
#include "crossview/featurize.hpp"
#include "crossview/matrix.hpp"
#include "crossview/prompt.hpp"

namespace crossview {

struct ModelConfig {
  int patch_radius = 2;  // 5x5x3 raw-pixel patch features by default
  double learning_rate = 2.5e-4;
  double momentum = 0.9;
  int epochs = 30;
  double init_scale = 0.05;
  int prompt_dim = 64;
  double prompt_bias_scale = 0.25;
  // Cap on each target vector's adaptation gradient 2-norm (0 disables).
  // Near-mean predictions have tiny q-norms whose inverses spike the
  // distance gradient; the cap keeps single batches from derailing SGD.
  double adapt_grad_clip = 5.0;
  // Supervised-only epochs before the geometric terms engage. The original
  // pipeline adapts a pretrained network; from-scratch training needs the
  // predictions to carry structure before per-batch subspaces mean anything.
  int adapt_warmup_epochs = 10;
  // Poly learning-rate decay power ((1 - t/T)^p); 0 keeps the rate constant.
  double lr_decay_power = 0.9;
};

/// Linear softmax over a local patch of raw pixels. View conditioning enters
/// as a fixed per-domain additive bias projected from the domain's prompt
/// embedding; it is not trained.
struct SegModel {
  int patch_radius = 2;
  int channels = 3;
  int class_count = 0;
  Matrix weights;      // C x F, F = (2r+1)^2 * channels
  Vector bias;         // C
  Matrix domain_bias;  // C x 2 (car, drone); zero when prompts are unused

  int feature_count() const {
    const int side = 2 * patch_radius + 1;
    return side * side * channels;
  }
};

/// Per-pixel class probabilities (softmax rows sum to 1). Patches are read
/// with replicate padding at the borders. Throws ShapeMismatch for images
/// smaller than the patch or with the wrong channel count.
SoftMap predict(const SegModel& model, const Image& image, Domain domain);

/// Mean pixelwise cross-entropy, -log p(true class).
double supervised_loss(const SoftMap& pred, const Mask& truth);

enum class MetricKind { kNone, kEuclidean, kGeodesic };

const char* metric_kind_name(MetricKind k);
MetricKind metric_kind_from_name(const std::string& name);

struct TrainOptions {
  AdaptConfig adapt;
  ModelConfig model;
  MetricKind metric = MetricKind::kGeodesic;
  bool use_prompt = false;
  int image_feature_side = 16;
  int seg_feature_side = 8;
  std::uint64_t seed = 1;
};

struct EpochStats {
  double supervised = 0.0;
  double geo = 0.0;
  double prompt = 0.0;
  double total = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::optional<double> final_miou;  // target-test mIoU when a test set given
  std::vector<std::optional<double>> per_class_iou;
  std::uint64_t seed = 0;
  std::string config_json;
  std::vector<std::string> warnings;
};

struct TrainResult {
  SegModel model;
  TrainReport report;
};

/// Stochastic-gradient training of the combined objective. Image and prompt
/// subspaces are precomputed once on the full source/target data; the target
/// segmentation subspace is refit from each batch's predictions, and its
/// kernel is frozen for the gradient step. Deterministic given the seed.
///
/// `source` must be labeled; `target` masks, if present, are ignored.
/// Throws RankDeficient (tagged with the offending epoch) when batch
/// predictions collapse below the clipped subspace dimension.
TrainResult train(const DomainData& source, const DomainData& target,
                  const DomainData* target_test,
                  const std::vector<std::string>& classes,
                  const TrainOptions& opts);

/// Weights go to `path` (GFKM); shape metadata, classes and the domain biases
/// go to `path + ".json"`, merged with `extra_json` when non-empty.
void save_model(const std::string& path, const SegModel& model,
                const std::vector<std::string>& classes,
                const std::string& extra_json = "");

struct LoadedModel {
  SegModel model;
  std::vector<std::string> classes;
};

LoadedModel load_model(const std::string& path);

}  // namespace crossview
