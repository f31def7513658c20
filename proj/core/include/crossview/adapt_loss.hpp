#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossview/gfk.hpp"
#include "crossview/matrix.hpp"

namespace crossview {

enum class Pairing {
  kAllPairs,  // full bipartite average over the batch
  kDiagonal,  // index-matched pairs up to min(B_s, B_t)
};

/// All adaptation hyperparameters in one place.
struct AdaptConfig {
  double alpha = 1.5;    // image <-> segmentation scale
  double gamma = 1.0;    // prompt <-> segmentation scale
  double lambda_i = 1.0;
  double lambda_p = 0.5;
  int subspace_dim = kDefaultSubspaceDim;
  int batch_size = 16;
  Pairing pairing = Pairing::kAllPairs;
  double small_angle_eps = 1e-4;
  std::uint64_t seed = 0;
};

void validate(const AdaptConfig& cfg);
std::string to_json(const AdaptConfig& cfg);
AdaptConfig adapt_config_from_json(const std::string& json_text);

/// One optimization step's worth of unpaired source/target data. Feature and
/// segmentation vectors are stored one per row. Segmentation vectors use the
/// planar layout produced by featurize: entry [c * seg_blocks + p] is class
/// c's probability at coarse pixel p.
struct CrossViewBatch {
  Matrix x_source;  // B_s x D_x
  Matrix x_target;  // B_t x D_x
  Matrix y_source;  // B_s x D_y
  Matrix y_target;  // B_t x D_y
  Vector prompt_source;  // may be empty when the prompt term is unused
  Vector prompt_target;
  Eigen::Index seg_blocks = 0;
  Eigen::Index seg_classes = 0;
};

/// Checks batch sizes (>= 2 each), matching widths, and that every
/// segmentation vector is a concatenation of per-pixel class distributions
/// (entries >= 0, each pixel block sums to 1 within 1e-6).
void validate(const CrossViewBatch& batch);

/// Mean over the pairing set of (D_x(x_s, x_t) - alpha * D_y(y_s, y_t))^2.
double cross_view_geo_loss(const ViewMetric& metric_x,
                           const ViewMetric& metric_y,
                           const CrossViewBatch& batch, double alpha,
                           Pairing pairing = Pairing::kAllPairs);

/// Mean over the pairing set of (D_p(f_s, f_t) - gamma * D_y(y_s, y_t))^2.
double prompt_corr_loss(const ViewMetric& metric_p,
                        const ViewMetric& metric_y,
                        const CrossViewBatch& batch, double gamma,
                        Pairing pairing = Pairing::kAllPairs);

/// sup + lambda_I * geo + lambda_P * prompt.
double total_objective(double sup_loss, double geo_loss, double prompt_loss,
                       const AdaptConfig& cfg);

/// Analytic gradient of lambda_I * geo_loss + lambda_P * prompt_loss with
/// respect to each target prediction vector, under the frozen-kernel
/// contract: all subspaces, Q matrices and centering means are constants of
/// the current step. metric_p may be null when lambda_p is zero.
std::vector<Vector> grad_wrt_target_preds(const ViewMetric& metric_x,
                                          const ViewMetric& metric_y,
                                          const ViewMetric* metric_p,
                                          const CrossViewBatch& batch,
                                          const AdaptConfig& cfg);

}  // namespace crossview
