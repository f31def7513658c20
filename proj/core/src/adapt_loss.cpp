#include "crossview/adapt_loss.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "crossview/errors.hpp"

namespace crossview {

namespace {

using nlohmann::json;

const char* pairing_name(Pairing p) {
  return p == Pairing::kAllPairs ? "all_pairs" : "diagonal";
}

Pairing pairing_from_name(const std::string& name) {
  if (name == "all_pairs") return Pairing::kAllPairs;
  if (name == "diagonal") return Pairing::kDiagonal;
  throw DataError("unknown pairing: " + name);
}

void check_seg_rows(const Matrix& y, Eigen::Index blocks, Eigen::Index classes,
                    const char* what) {
  if (y.cols() != blocks * classes) {
    throw ShapeMismatch(std::string(what) +
                        ": segmentation width != blocks * classes");
  }
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    for (Eigen::Index p = 0; p < blocks; ++p) {
      double sum = 0.0;
      for (Eigen::Index c = 0; c < classes; ++c) {
        const double v = y(r, c * blocks + p);
        if (v < 0.0) {
          throw DataError(std::string(what) + ": negative probability");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw DataError(std::string(what) + ": pixel block sums to " +
                        std::to_string(sum));
      }
    }
  }
}

// Applies fn(i, j) over the configured pairing set; returns its cardinality.
template <typename Fn>
std::size_t for_each_pair(Eigen::Index bs, Eigen::Index bt, Pairing pairing,
                          Fn&& fn) {
  if (pairing == Pairing::kAllPairs) {
    for (Eigen::Index i = 0; i < bs; ++i) {
      for (Eigen::Index j = 0; j < bt; ++j) fn(i, j);
    }
    return static_cast<std::size_t>(bs) * static_cast<std::size_t>(bt);
  }
  const Eigen::Index n = std::min(bs, bt);
  for (Eigen::Index i = 0; i < n; ++i) fn(i, i);
  return static_cast<std::size_t>(n);
}

// Per-row centered vectors, Q products, and q-norms for one metric over a
// batch. Shares its primitive expressions with ViewMetric::distance, so the
// two paths agree bitwise.
struct BatchCache {
  std::vector<Vector> centered_s, centered_t;
  std::vector<Vector> q_s, q_t;
  std::vector<double> norm_s, norm_t;

  BatchCache(const ViewMetric& metric, const Matrix& rows_s,
             const Matrix& rows_t) {
    const auto fill = [&](const Matrix& rows, const Vector& mean,
                          std::vector<Vector>& centered,
                          std::vector<Vector>& q, std::vector<double>& norm) {
      centered.reserve(rows.rows());
      q.reserve(rows.rows());
      norm.reserve(rows.rows());
      for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        Vector c = rows.row(i).transpose() - mean;
        Vector qc = metric.apply_q(c);
        norm.push_back(std::sqrt(std::max(0.0, c.dot(qc))));
        centered.push_back(std::move(c));
        q.push_back(std::move(qc));
      }
    };
    fill(rows_s, metric.mean_source(), centered_s, q_s, norm_s);
    fill(rows_t, metric.mean_target(), centered_t, q_t, norm_t);
  }

  double distance(Eigen::Index i, Eigen::Index j) const {
    return ViewMetric::distance_from_parts(centered_s[i], q_t[j], norm_s[i],
                                           norm_t[j]);
  }

  Vector grad_b(Eigen::Index i, Eigen::Index j) const {
    return ViewMetric::grad_b_from_parts(q_s[i], q_t[j],
                                         centered_s[i].dot(q_t[j]), norm_s[i],
                                         norm_t[j]);
  }
};

}  // namespace

void validate(const AdaptConfig& cfg) {
  if (!(cfg.alpha > 0.0)) throw DataError("adapt config: alpha must be > 0");
  if (!(cfg.gamma > 0.0)) throw DataError("adapt config: gamma must be > 0");
  if (cfg.lambda_i < 0.0 || cfg.lambda_p < 0.0) {
    throw DataError("adapt config: lambda weights must be >= 0");
  }
  if (cfg.subspace_dim < 1) {
    throw DataError("adapt config: subspace_dim must be >= 1");
  }
  if (cfg.batch_size < 2) {
    throw DataError("adapt config: batch_size must be >= 2 (per-batch PCA)");
  }
}

std::string to_json(const AdaptConfig& cfg) {
  json j{{"alpha", cfg.alpha},
         {"gamma", cfg.gamma},
         {"lambda_i", cfg.lambda_i},
         {"lambda_p", cfg.lambda_p},
         {"subspace_dim", cfg.subspace_dim},
         {"batch_size", cfg.batch_size},
         {"pairing", pairing_name(cfg.pairing)},
         {"small_angle_eps", cfg.small_angle_eps},
         {"seed", cfg.seed}};
  return j.dump();
}

AdaptConfig adapt_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("adapt config: ") + e.what());
  }
  AdaptConfig cfg;
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.lambda_i = j.value("lambda_i", cfg.lambda_i);
  cfg.lambda_p = j.value("lambda_p", cfg.lambda_p);
  cfg.subspace_dim = j.value("subspace_dim", cfg.subspace_dim);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  if (j.contains("pairing")) {
    cfg.pairing = pairing_from_name(j["pairing"].get<std::string>());
  }
  cfg.small_angle_eps = j.value("small_angle_eps", cfg.small_angle_eps);
  cfg.seed = j.value("seed", cfg.seed);
  validate(cfg);
  return cfg;
}

void validate(const CrossViewBatch& batch) {
  if (batch.x_source.rows() < 2 || batch.x_target.rows() < 2) {
    throw DataError("batch: need at least 2 samples per domain");
  }
  if (batch.x_source.rows() != batch.y_source.rows() ||
      batch.x_target.rows() != batch.y_target.rows()) {
    throw ShapeMismatch("batch: feature/segmentation row counts differ");
  }
  if (batch.x_source.cols() != batch.x_target.cols()) {
    throw ShapeMismatch("batch: feature widths differ across domains");
  }
  if (batch.y_source.cols() != batch.y_target.cols()) {
    throw ShapeMismatch("batch: segmentation widths differ across domains");
  }
  if (batch.seg_blocks <= 0 || batch.seg_classes <= 0) {
    throw ShapeMismatch("batch: segmentation layout unset");
  }
  check_seg_rows(batch.y_source, batch.seg_blocks, batch.seg_classes,
                 "batch y_source");
  check_seg_rows(batch.y_target, batch.seg_blocks, batch.seg_classes,
                 "batch y_target");
}

double cross_view_geo_loss(const ViewMetric& metric_x,
                           const ViewMetric& metric_y,
                           const CrossViewBatch& batch, double alpha,
                           Pairing pairing) {
  const BatchCache cx(metric_x, batch.x_source, batch.x_target);
  const BatchCache cy(metric_y, batch.y_source, batch.y_target);
  double sum = 0.0;
  const std::size_t n = for_each_pair(
      batch.x_source.rows(), batch.x_target.rows(), pairing,
      [&](Eigen::Index i, Eigen::Index j) {
        const double r = cx.distance(i, j) - alpha * cy.distance(i, j);
        sum += r * r;
      });
  return sum / static_cast<double>(n);
}

double prompt_corr_loss(const ViewMetric& metric_p,
                        const ViewMetric& metric_y,
                        const CrossViewBatch& batch, double gamma,
                        Pairing pairing) {
  if (batch.prompt_source.size() == 0 || batch.prompt_target.size() == 0) {
    throw DataError("prompt_corr_loss: batch has no prompt embeddings");
  }
  const double dp =
      metric_p.distance(batch.prompt_source, batch.prompt_target);
  const BatchCache cy(metric_y, batch.y_source, batch.y_target);
  double sum = 0.0;
  const std::size_t n = for_each_pair(
      batch.y_source.rows(), batch.y_target.rows(), pairing,
      [&](Eigen::Index i, Eigen::Index j) {
        const double r = dp - gamma * cy.distance(i, j);
        sum += r * r;
      });
  return sum / static_cast<double>(n);
}

double total_objective(double sup_loss, double geo_loss, double prompt_loss,
                       const AdaptConfig& cfg) {
  return sup_loss + cfg.lambda_i * geo_loss + cfg.lambda_p * prompt_loss;
}

std::vector<Vector> grad_wrt_target_preds(const ViewMetric& metric_x,
                                          const ViewMetric& metric_y,
                                          const ViewMetric* metric_p,
                                          const CrossViewBatch& batch,
                                          const AdaptConfig& cfg) {
  const Eigen::Index bs = batch.y_source.rows();
  const Eigen::Index bt = batch.y_target.rows();
  const Eigen::Index dy = batch.y_target.cols();
  std::vector<Vector> grads(static_cast<std::size_t>(bt), Vector::Zero(dy));
  if (cfg.lambda_i == 0.0 && cfg.lambda_p == 0.0) {
    return grads;
  }

  double dp = 0.0;
  const bool use_prompt = cfg.lambda_p > 0.0;
  if (use_prompt) {
    if (metric_p == nullptr) {
      throw DataError(
          "grad_wrt_target_preds: lambda_p > 0 but no prompt metric");
    }
    dp = metric_p->distance(batch.prompt_source, batch.prompt_target);
  }

  const BatchCache cy(metric_y, batch.y_source, batch.y_target);
  std::optional<BatchCache> cx;
  if (cfg.lambda_i > 0.0) {
    cx.emplace(metric_x, batch.x_source, batch.x_target);
  }

  double pair_count = static_cast<double>(
      cfg.pairing == Pairing::kAllPairs
          ? static_cast<std::size_t>(bs) * static_cast<std::size_t>(bt)
          : static_cast<std::size_t>(std::min(bs, bt)));

  for_each_pair(bs, bt, cfg.pairing, [&](Eigen::Index i, Eigen::Index j) {
    const double dyv = cy.distance(i, j);
    double coef = 0.0;
    if (cfg.lambda_i > 0.0) {
      coef += cfg.lambda_i * (cx->distance(i, j) - cfg.alpha * dyv) *
              (-cfg.alpha);
    }
    if (use_prompt) {
      coef += cfg.lambda_p * (dp - cfg.gamma * dyv) * (-cfg.gamma);
    }
    if (coef != 0.0) {
      grads[static_cast<std::size_t>(j)] +=
          (2.0 / pair_count) * coef * cy.grad_b(i, j);
    }
  });
  return grads;
}

}  // namespace crossview
