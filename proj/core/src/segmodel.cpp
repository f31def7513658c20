#include "crossview/segmodel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <numeric>
#include <string>

#include "crossview/errors.hpp"
#include "crossview/eval.hpp"
#include "crossview/gfk.hpp"
#include "crossview/parallel.hpp"
#include "crossview/rng.hpp"

namespace crossview {

namespace {

using nlohmann::json;

// All subspaces are PCA-centered (the centered geodesic metric carries the
// strongest cross-view signal). Stability against near-mean vectors, whose
// inverse q-norms amplify distance gradients, is handled by clipping the
// per-vector adaptation gradient in the update step instead.
constexpr bool kCenterSegSubspaces = true;

// Raw-pixel patch features with replicate padding, one row per pixel.
Matrix patch_features(const Image& img, int radius) {
  const int side = 2 * radius + 1;
  const int f = side * side * 3;
  Matrix feats(static_cast<Eigen::Index>(img.width) * img.height, f);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Eigen::Index row = static_cast<Eigen::Index>(y) * img.width + x;
      Eigen::Index col = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = std::clamp(y + dy, 0, img.height - 1);
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = std::clamp(x + dx, 0, img.width - 1);
          for (int c = 0; c < 3; ++c) {
            feats(row, col++) = img.at(xx, yy, c);
          }
        }
      }
    }
  }
  return feats;
}

void softmax_rows(Matrix& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    logits.row(r) = (logits.row(r).array() - m).exp();
    logits.row(r) /= logits.row(r).sum();
  }
}

// Forward pass returning per-pixel probabilities (and optionally the patch
// features for the backward pass).
Matrix forward(const SegModel& model, const Image& img, Domain domain,
               Matrix* feats_out) {
  if (img.width < 2 * model.patch_radius + 1 ||
      img.height < 2 * model.patch_radius + 1) {
    throw ShapeMismatch("predict: image smaller than the patch");
  }
  Matrix feats = patch_features(img, model.patch_radius);
  Matrix logits = feats * model.weights.transpose();
  logits.rowwise() += model.bias.transpose();
  if (model.domain_bias.size() > 0) {
    logits.rowwise() +=
        model.domain_bias.col(domain == Domain::kCar ? 0 : 1).transpose();
  }
  softmax_rows(logits);
  if (feats_out) *feats_out = std::move(feats);
  return logits;
}

SoftMap probs_to_map(const Matrix& probs, int width, int height) {
  SoftMap map;
  map.width = width;
  map.height = height;
  map.channels = static_cast<int>(probs.cols());
  map.data.resize(probs.size());
  for (Eigen::Index px = 0; px < probs.rows(); ++px) {
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      map.data[static_cast<std::size_t>(px) * probs.cols() + c] = probs(px, c);
    }
  }
  return map;
}

// Adjoint of featurize() for block-aligned maps: spreads the gradient of a
// planar seg vector back over the per-pixel probability map.
Matrix seg_vector_grad_to_map(const Vector& g, int width, int height,
                              int classes, int side) {
  const int bw = width / side;
  const int bh = height / side;
  const double inv_area = 1.0 / (bw * bh);
  Matrix d(static_cast<Eigen::Index>(width) * height, classes);
  for (int y = 0; y < height; ++y) {
    const int bi = y / bh;
    for (int x = 0; x < width; ++x) {
      const int bj = x / bw;
      const Eigen::Index px = static_cast<Eigen::Index>(y) * width + x;
      const int block = bi * side + bj;
      for (int c = 0; c < classes; ++c) {
        d(px, c) = g(static_cast<Eigen::Index>(c) * side * side + block) *
                   inv_area;
      }
    }
  }
  return d;
}

// dL/dlogits from dL/dprobs through the softmax rows.
Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs) {
  Matrix dlogits(probs.rows(), probs.cols());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double dot = probs.row(r).dot(dprobs.row(r));
    dlogits.row(r) =
        probs.row(r).cwiseProduct(dprobs.row(r) -
                                  Eigen::RowVectorXd::Constant(probs.cols(), dot));
  }
  return dlogits;
}

int clipped_subspace_dim(int requested, Eigen::Index samples,
                         Eigen::Index ambient) {
  const auto cap = std::min<Eigen::Index>(samples - 1, ambient / 2);
  return static_cast<int>(std::min<Eigen::Index>(requested, cap));
}

struct PromptSetup {
  Vector f_source;  // car-view full-class prompt embedding
  Vector f_target;  // drone-view
  std::unique_ptr<ViewMetric> metric;
};

}  // namespace

SoftMap predict(const SegModel& model, const Image& image, Domain domain) {
  if (model.class_count <= 0 || model.weights.rows() != model.class_count ||
      model.weights.cols() != model.feature_count()) {
    throw ShapeMismatch("predict: model weights have unexpected shape");
  }
  const Matrix probs = forward(model, image, domain, nullptr);
  return probs_to_map(probs, image.width, image.height);
}

double supervised_loss(const SoftMap& pred, const Mask& truth) {
  if (pred.width != truth.width || pred.height != truth.height) {
    throw ShapeMismatch("supervised_loss: prediction/truth sizes differ");
  }
  double sum = 0.0;
  for (int y = 0; y < pred.height; ++y) {
    for (int x = 0; x < pred.width; ++x) {
      const int cls = truth.at(x, y);
      if (cls >= pred.channels) {
        throw DataError("supervised_loss: label out of range");
      }
      sum += -std::log(std::max(pred.at(x, y, cls), 1e-300));
    }
  }
  return sum / (static_cast<double>(pred.width) * pred.height);
}

const char* metric_kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::kNone:
      return "none";
    case MetricKind::kEuclidean:
      return "euclidean";
    case MetricKind::kGeodesic:
      return "geodesic";
  }
  return "geodesic";
}

MetricKind metric_kind_from_name(const std::string& name) {
  if (name == "none") return MetricKind::kNone;
  if (name == "euclidean") return MetricKind::kEuclidean;
  if (name == "geodesic") return MetricKind::kGeodesic;
  throw DataError("unknown metric kind: " + name);
}

TrainResult train(const DomainData& source, const DomainData& target,
                  const DomainData* target_test,
                  const std::vector<std::string>& classes,
                  const TrainOptions& opts) {
  validate(opts.adapt);
  if (classes.empty()) throw DataError("train: no classes");
  if (source.images.empty() || target.images.empty()) {
    throw DataError("train: empty dataset");
  }
  if (source.masks.size() != source.images.size()) {
    throw DataError("train: source split must be fully labeled");
  }
  const int width = source.images[0].width;
  const int height = source.images[0].height;
  const int class_count = static_cast<int>(classes.size());
  const int seg_side = opts.seg_feature_side;
  if (width % seg_side != 0 || height % seg_side != 0) {
    throw DataError("train: resolution must be divisible by seg_feature_side");
  }

  const Eigen::Index n_s = static_cast<Eigen::Index>(source.images.size());
  const Eigen::Index n_t = static_cast<Eigen::Index>(target.images.size());
  const int batch = static_cast<int>(std::min<Eigen::Index>(
      {static_cast<Eigen::Index>(opts.adapt.batch_size), n_s, n_t}));
  if (batch < 2) throw DataError("train: batch size below 2");

  TrainReport report;
  report.seed = opts.seed;

  const bool adapt_on = opts.metric != MetricKind::kNone &&
                        (opts.adapt.lambda_i > 0.0 || opts.adapt.lambda_p > 0.0);
  const bool geo_on = adapt_on && opts.adapt.lambda_i > 0.0;
  const bool prompt_on = adapt_on && opts.use_prompt && opts.adapt.lambda_p > 0.0;

  // Featurized views of the full data: image vectors for D_x, ground-truth
  // segmentation vectors for the source side of D_y.
  const Eigen::Index dy =
      static_cast<Eigen::Index>(seg_side) * seg_side * class_count;
  Matrix x_s, x_t, y_s;
  if (adapt_on) {
    x_s.resize(n_s, static_cast<Eigen::Index>(opts.image_feature_side) *
                        opts.image_feature_side * 3);
    x_t.resize(n_t, x_s.cols());
    y_s.resize(n_s, dy);
    parallel_for(static_cast<std::size_t>(n_s), [&](std::size_t i) {
      x_s.row(static_cast<Eigen::Index>(i)) =
          featurize(source.images[i], opts.image_feature_side).transpose();
      y_s.row(static_cast<Eigen::Index>(i)) =
          featurize(one_hot(source.masks[i], class_count), seg_side).transpose();
    });
    parallel_for(static_cast<std::size_t>(n_t), [&](std::size_t i) {
      x_t.row(static_cast<Eigen::Index>(i)) =
          featurize(target.images[i], opts.image_feature_side).transpose();
    });
  }

  // Precomputed metrics. The image kernel is fixed for the whole run; the
  // segmentation kernel is rebuilt per batch against the fixed source
  // subspace (its complement is computed once here).
  std::unique_ptr<ViewMetric> metric_x;
  std::optional<Subspace> seg_source_subspace;
  Matrix seg_source_complement;
  std::unique_ptr<EuclideanMetric> metric_y_euclidean;
  int n_seg = 0;
  if (geo_on) {
    if (opts.metric == MetricKind::kGeodesic) {
      const int n_img = clipped_subspace_dim(
          opts.adapt.subspace_dim, std::min(n_s, n_t), x_s.cols());
      if (n_img < opts.adapt.subspace_dim) {
        report.warnings.push_back("image subspace dim clipped to " +
                                  std::to_string(n_img));
      }
      if (n_img < 1) throw RankDeficient("train: image subspace dim < 1");
      const Subspace ps = fit_subspace(x_s, n_img);
      const Subspace pt = fit_subspace(x_t, n_img);
      metric_x = std::make_unique<GeodesicFlowKernel>(GeodesicFlowKernel::build(
          ps, pt, opts.adapt.small_angle_eps));
    } else {
      metric_x = std::make_unique<EuclideanMetric>(x_s.cols());
    }
  }
  if (adapt_on) {
    n_seg = clipped_subspace_dim(opts.adapt.subspace_dim, batch, dy);
    if (n_seg < opts.adapt.subspace_dim) {
      report.warnings.push_back("segmentation subspace dim clipped to " +
                                std::to_string(n_seg));
    }
    if (opts.metric == MetricKind::kGeodesic) {
      if (n_seg < 1) throw RankDeficient("train: seg subspace dim < 1");
      seg_source_subspace = fit_subspace(y_s, n_seg, kCenterSegSubspaces);
      seg_source_complement = orthogonal_complement(*seg_source_subspace);
    } else {
      metric_y_euclidean = std::make_unique<EuclideanMetric>(dy);
    }
  }

  // View-condition prompts: fixed embeddings, fixed per-domain bias.
  PromptSetup prompts;
  Matrix domain_bias;
  if (opts.use_prompt) {
    PromptSpec spec_s{classes, Domain::kCar, {}};
    PromptSpec spec_t{classes, Domain::kDrone, {}};
    spec_s.template_text = spec_t.template_text =
        PromptSpec{}.template_text;
    prompts.f_source = embed_prompt(build_prompt(spec_s), opts.model.prompt_dim);
    prompts.f_target = embed_prompt(build_prompt(spec_t), opts.model.prompt_dim);

    Rng proj_rng(Rng::derive(opts.seed, 0x70726f6a));
    Matrix proj(class_count, opts.model.prompt_dim);
    const double scale =
        opts.model.prompt_bias_scale / std::sqrt(opts.model.prompt_dim);
    for (Eigen::Index r = 0; r < proj.rows(); ++r) {
      for (Eigen::Index c = 0; c < proj.cols(); ++c) {
        proj(r, c) = proj_rng.normal() * scale;
      }
    }
    domain_bias.resize(class_count, 2);
    domain_bias.col(0) = proj * prompts.f_source;
    domain_bias.col(1) = proj * prompts.f_target;

    if (prompt_on) {
      if (opts.metric == MetricKind::kGeodesic) {
        const Matrix emb_s = prompt_embedding_matrix(classes, Domain::kCar,
                                                     opts.model.prompt_dim);
        const Matrix emb_t = prompt_embedding_matrix(classes, Domain::kDrone,
                                                     opts.model.prompt_dim);
        // Hashed prompt embeddings have low structural rank (shared token
        // vectors), so clip by the measured rank as well.
        const int rank =
            std::min(sample_rank(emb_s), sample_rank(emb_t));
        const int n_p = std::min(
            clipped_subspace_dim(opts.adapt.subspace_dim, emb_s.rows(),
                                 emb_s.cols()),
            rank);
        if (n_p < 1) throw RankDeficient("train: prompt subspace dim < 1");
        if (n_p < opts.adapt.subspace_dim) {
          report.warnings.push_back("prompt subspace dim clipped to " +
                                    std::to_string(n_p));
        }
        prompts.metric = std::make_unique<GeodesicFlowKernel>(
            GeodesicFlowKernel::build(
                fit_subspace(emb_s, n_p, kCenterSegSubspaces),
                fit_subspace(emb_t, n_p, kCenterSegSubspaces),
                opts.adapt.small_angle_eps));
      } else {
        prompts.metric =
            std::make_unique<EuclideanMetric>(opts.model.prompt_dim);
      }
    }
  }

  // Model init.
  SegModel model;
  model.patch_radius = opts.model.patch_radius;
  model.class_count = class_count;
  Rng init_rng(Rng::derive(opts.seed, 0x696e6974));
  model.weights.resize(class_count, model.feature_count());
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c) {
      model.weights(r, c) = init_rng.normal() * opts.model.init_scale;
    }
  }
  model.bias = Vector::Zero(class_count);
  model.domain_bias = domain_bias;

  Matrix vel_w = Matrix::Zero(model.weights.rows(), model.weights.cols());
  Vector vel_b = Vector::Zero(class_count);

  Rng order_rng(Rng::derive(opts.seed, 0x6f726465));
  std::vector<Eigen::Index> src_order(static_cast<std::size_t>(n_s));
  std::iota(src_order.begin(), src_order.end(), 0);
  std::vector<Eigen::Index> tgt_pool(static_cast<std::size_t>(n_t));
  std::iota(tgt_pool.begin(), tgt_pool.end(), 0);

  const int steps = std::max<int>(1, static_cast<int>(n_s) / batch);
  const Eigen::Index blocks = static_cast<Eigen::Index>(seg_side) * seg_side;

  for (int epoch = 0; epoch < opts.model.epochs; ++epoch) {
    // Fisher-Yates with the deterministic stream.
    for (std::size_t i = src_order.size(); i > 1; --i) {
      std::swap(src_order[i - 1], src_order[order_rng.below(i)]);
    }

    EpochStats stats;
    for (int step = 0; step < steps; ++step) {
      std::vector<Eigen::Index> sidx(
          src_order.begin() + static_cast<std::ptrdiff_t>(step) * batch,
          src_order.begin() + static_cast<std::ptrdiff_t>(step + 1) * batch);
      // Target batch drawn without replacement: duplicate rows would sink
      // the per-batch PCA below batch - 1.
      for (int k = 0; k < batch; ++k) {
        const std::size_t pick =
            k + static_cast<std::size_t>(
                    order_rng.below(static_cast<std::uint64_t>(n_t - k)));
        std::swap(tgt_pool[static_cast<std::size_t>(k)], tgt_pool[pick]);
      }
      std::vector<Eigen::Index> tidx(tgt_pool.begin(), tgt_pool.begin() + batch);

      Matrix grad_w = Matrix::Zero(model.weights.rows(), model.weights.cols());
      Vector grad_b = Vector::Zero(class_count);

      // Supervised term on the source batch.
      double sup = 0.0;
      {
        std::vector<Matrix> feats(sidx.size()), dlogits(sidx.size());
        std::vector<double> losses(sidx.size());
        parallel_for(sidx.size(), [&](std::size_t k) {
          const Eigen::Index i = sidx[k];
          Matrix f;
          Matrix probs = forward(model, source.images[i], Domain::kCar, &f);
          const Mask& truth = source.masks[i];
          const double inv_px = 1.0 / static_cast<double>(probs.rows());
          double loss = 0.0;
          Matrix dl = probs;
          for (Eigen::Index px = 0; px < probs.rows(); ++px) {
            const int cls = truth.data[static_cast<std::size_t>(px)];
            loss += -std::log(std::max(probs(px, cls), 1e-300));
            dl(px, cls) -= 1.0;
          }
          losses[k] = loss * inv_px;
          dlogits[k] = dl * (inv_px / static_cast<double>(sidx.size()));
          feats[k] = std::move(f);
        });
        for (std::size_t k = 0; k < sidx.size(); ++k) {
          sup += losses[k] / static_cast<double>(sidx.size());
          grad_w.noalias() += dlogits[k].transpose() * feats[k];
          grad_b += dlogits[k].colwise().sum().transpose();
        }
      }

      double geo = 0.0;
      double prompt = 0.0;
      if (adapt_on && epoch >= opts.model.adapt_warmup_epochs) {
        // Target predictions and their featurized segmentation vectors.
        std::vector<Matrix> t_feats(tidx.size()), t_probs(tidx.size());
        Matrix y_t(batch, dy);
        parallel_for(tidx.size(), [&](std::size_t k) {
          Matrix f;
          Matrix probs =
              forward(model, target.images[tidx[k]], Domain::kDrone, &f);
          y_t.row(static_cast<Eigen::Index>(k)) =
              featurize(probs_to_map(probs, width, height), seg_side)
                  .transpose();
          t_probs[k] = std::move(probs);
          t_feats[k] = std::move(f);
        });

        // Per-batch target segmentation subspace; kernel frozen for the step.
        std::unique_ptr<ViewMetric> metric_y_owned;
        const ViewMetric* metric_y = metric_y_euclidean.get();
        if (opts.metric == MetricKind::kGeodesic) {
          try {
            const Subspace batch_sub =
                fit_subspace(y_t, n_seg, kCenterSegSubspaces);
            metric_y_owned = std::make_unique<GeodesicFlowKernel>(
                GeodesicFlowKernel::build(*seg_source_subspace, batch_sub,
                                          opts.adapt.small_angle_eps,
                                          &seg_source_complement));
          } catch (const RankDeficient& e) {
            throw RankDeficient("epoch " + std::to_string(epoch) +
                                ": target predictions rank-deficient: " +
                                e.what());
          }
          metric_y = metric_y_owned.get();
        }

        CrossViewBatch cvb;
        cvb.x_source.resize(batch, x_s.cols());
        cvb.x_target.resize(batch, x_t.cols());
        cvb.y_source.resize(batch, dy);
        for (int k = 0; k < batch; ++k) {
          cvb.x_source.row(k) = x_s.row(sidx[static_cast<std::size_t>(k)]);
          cvb.x_target.row(k) = x_t.row(tidx[static_cast<std::size_t>(k)]);
          cvb.y_source.row(k) = y_s.row(sidx[static_cast<std::size_t>(k)]);
        }
        cvb.y_target = y_t;
        cvb.seg_blocks = blocks;
        cvb.seg_classes = class_count;
        if (prompt_on) {
          cvb.prompt_source = prompts.f_source;
          cvb.prompt_target = prompts.f_target;
        }

        AdaptConfig step_cfg = opts.adapt;
        if (!geo_on) step_cfg.lambda_i = 0.0;
        if (!prompt_on) step_cfg.lambda_p = 0.0;

        if (geo_on) {
          geo = cross_view_geo_loss(*metric_x, *metric_y, cvb, step_cfg.alpha,
                                    step_cfg.pairing);
        }
        if (prompt_on) {
          prompt = prompt_corr_loss(*prompts.metric, *metric_y, cvb,
                                    step_cfg.gamma, step_cfg.pairing);
        }

        std::vector<Vector> y_grads = grad_wrt_target_preds(
            geo_on ? *metric_x : *metric_y, *metric_y,
            prompt_on ? prompts.metric.get() : nullptr, cvb, step_cfg);
        if (opts.model.adapt_grad_clip > 0.0) {
          for (Vector& g : y_grads) {
            const double norm = g.norm();
            if (norm > opts.model.adapt_grad_clip) {
              g *= opts.model.adapt_grad_clip / norm;
            }
          }
        }

        std::vector<Matrix> t_dlogits(tidx.size());
        parallel_for(tidx.size(), [&](std::size_t k) {
          const Matrix dprobs = seg_vector_grad_to_map(
              y_grads[k], width, height, class_count, seg_side);
          t_dlogits[k] = softmax_backward(t_probs[k], dprobs);
        });
        for (std::size_t k = 0; k < tidx.size(); ++k) {
          grad_w.noalias() += t_dlogits[k].transpose() * t_feats[k];
          grad_b += t_dlogits[k].colwise().sum().transpose();
        }
      }

      double lr = opts.model.learning_rate;
      if (opts.model.lr_decay_power > 0.0) {
        const double progress =
            static_cast<double>(epoch * steps + step) /
            static_cast<double>(opts.model.epochs * steps);
        lr *= std::pow(1.0 - progress, opts.model.lr_decay_power);
      }
      vel_w = opts.model.momentum * vel_w + grad_w;
      vel_b = opts.model.momentum * vel_b + grad_b;
      model.weights -= lr * vel_w;
      model.bias -= lr * vel_b;

      stats.supervised += sup;
      stats.geo += geo;
      stats.prompt += prompt;
      stats.total += total_objective(sup, geo, prompt, opts.adapt);
    }
    const double inv_steps = 1.0 / steps;
    stats.supervised *= inv_steps;
    stats.geo *= inv_steps;
    stats.prompt *= inv_steps;
    stats.total *= inv_steps;
    report.epochs.push_back(stats);

    // Diagnostic only: per-epoch target-test mIoU when CROSSVIEW_TRACE is set.
    if (target_test && !target_test->images.empty() &&
        std::getenv("CROSSVIEW_TRACE")) {
      ConfusionMatrix conf(class_count);
      for (std::size_t i = 0; i < target_test->images.size(); ++i) {
        conf.accumulate(
            target_test->masks[i],
            hard_labels(predict(model, target_test->images[i], Domain::kDrone)));
      }
      std::fprintf(stderr, "trace epoch %d miou %.4f sup %.4f geo %.4f\n",
                   epoch, miou(conf).miou, stats.supervised, stats.geo);
    }
  }

  if (target_test && !target_test->images.empty()) {
    if (target_test->masks.size() != target_test->images.size()) {
      throw DataError("train: target test split must be labeled");
    }
    std::vector<ConfusionMatrix> partial(
        target_test->images.size(), ConfusionMatrix(class_count));
    parallel_for(target_test->images.size(), [&](std::size_t i) {
      const SoftMap probs = predict(model, target_test->images[i], Domain::kDrone);
      partial[i].accumulate(target_test->masks[i], hard_labels(probs));
    });
    ConfusionMatrix conf(class_count);
    for (const auto& p : partial) conf.merge(p);
    const MiouResult m = miou(conf);
    report.final_miou = m.miou;
    report.per_class_iou = m.per_class;
  }

  return TrainResult{std::move(model), std::move(report)};
}

void save_model(const std::string& path, const SegModel& model,
                const std::vector<std::string>& classes,
                const std::string& extra_json) {
  // One GFKM matrix: [W | b | bias_car | bias_drone].
  const bool has_domain_bias = model.domain_bias.size() > 0;
  Matrix packed(model.class_count,
                model.feature_count() + 1 + (has_domain_bias ? 2 : 0));
  packed.leftCols(model.feature_count()) = model.weights;
  packed.col(model.feature_count()) = model.bias;
  if (has_domain_bias) {
    packed.col(model.feature_count() + 1) = model.domain_bias.col(0);
    packed.col(model.feature_count() + 2) = model.domain_bias.col(1);
  }
  write_gfkm_atomic(path, packed);

  json j{{"kind", "segmodel"},
         {"patch_radius", model.patch_radius},
         {"channels", model.channels},
         {"class_count", model.class_count},
         {"classes", classes},
         {"has_domain_bias", has_domain_bias}};
  if (!extra_json.empty()) {
    j.update(json::parse(extra_json));
  }
  const std::string sidecar = path + ".json";
  const std::string tmp = sidecar + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + tmp);
    os << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, sidecar);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream is(path + ".json");
  if (!is) throw DataError("missing model sidecar: " + path + ".json");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError("bad model sidecar: " + std::string(e.what()));
  }
  LoadedModel out;
  out.model.patch_radius = j.at("patch_radius").get<int>();
  out.model.channels = j.at("channels").get<int>();
  out.model.class_count = j.at("class_count").get<int>();
  out.classes = j.at("classes").get<std::vector<std::string>>();
  const bool has_domain_bias = j.at("has_domain_bias").get<bool>();

  const Matrix packed = read_gfkm(path);
  const int f = out.model.feature_count();
  if (packed.rows() != out.model.class_count ||
      packed.cols() != f + 1 + (has_domain_bias ? 2 : 0)) {
    throw DataError("model weights shape mismatch: " + path);
  }
  out.model.weights = packed.leftCols(f);
  out.model.bias = packed.col(f);
  if (has_domain_bias) {
    out.model.domain_bias.resize(out.model.class_count, 2);
    out.model.domain_bias.col(0) = packed.col(f + 1);
    out.model.domain_bias.col(1) = packed.col(f + 2);
  }
  return out;
}

}  // namespace crossview
