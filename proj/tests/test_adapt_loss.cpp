#include <doctest.h>

#include <cmath>

#include "crossview/adapt_loss.hpp"
#include "crossview/errors.hpp"
#include "test_helpers.hpp"

using namespace crossview;

namespace {

// Random batch whose y rows are valid per-pixel class distributions.
CrossViewBatch random_batch(Rng& rng, Eigen::Index bs, Eigen::Index bt,
                            Eigen::Index dx, Eigen::Index blocks,
                            Eigen::Index classes) {
  CrossViewBatch b;
  b.x_source = testing::random_matrix(rng, bs, dx);
  b.x_target = testing::random_matrix(rng, bt, dx);
  b.seg_blocks = blocks;
  b.seg_classes = classes;
  auto soft_rows = [&](Eigen::Index rows) {
    Matrix y(rows, blocks * classes);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index p = 0; p < blocks; ++p) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < classes; ++c) {
          const double v = std::exp(rng.normal());
          y(r, c * blocks + p) = v;
          sum += v;
        }
        for (Eigen::Index c = 0; c < classes; ++c) y(r, c * blocks + p) /= sum;
      }
    }
    return y;
  };
  b.y_source = soft_rows(bs);
  b.y_target = soft_rows(bt);
  b.prompt_source = testing::random_matrix(rng, 12, 1);
  b.prompt_target = testing::random_matrix(rng, 12, 1);
  b.prompt_source.normalize();
  b.prompt_target.normalize();
  return b;
}

struct Metrics {
  GeodesicFlowKernel x;
  GeodesicFlowKernel y;
  GeodesicFlowKernel p;
};

Metrics random_metrics(Rng& rng, Eigen::Index dx, Eigen::Index dy) {
  return Metrics{
      GeodesicFlowKernel::build(testing::random_subspace(rng, dx, dx / 4),
                                testing::random_subspace(rng, dx, dx / 4)),
      GeodesicFlowKernel::build(testing::random_subspace(rng, dy, dy / 4),
                                testing::random_subspace(rng, dy, dy / 4)),
      GeodesicFlowKernel::build(testing::random_subspace(rng, 12, 3),
                                testing::random_subspace(rng, 12, 3)),
  };
}

}  // namespace

TEST_CASE("identical pairs give zero geometric loss") {
  Rng rng(41);
  const Eigen::Index dx = 16, blocks = 4, classes = 3;
  CrossViewBatch b = random_batch(rng, 3, 3, dx, blocks, classes);
  b.x_target = b.x_source;
  b.y_target = b.y_source;
  const Metrics m = random_metrics(rng, dx, blocks * classes);
  // Diagonal pairing: each pair has x_s = x_t and y_s = y_t.
  CHECK(cross_view_geo_loss(m.x, m.y, b, 1.5, Pairing::kDiagonal) <= 1e-18);
}

TEST_CASE("geometric loss matches a hand-averaged residual table") {
  Rng rng(42);
  const Eigen::Index dx = 16, blocks = 4, classes = 3;
  const CrossViewBatch b = random_batch(rng, 2, 2, dx, blocks, classes);
  const Metrics m = random_metrics(rng, dx, blocks * classes);
  const double alpha = 1.5;

  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double dxv = m.x.distance(b.x_source.row(i), b.x_target.row(j));
      const double dyv = m.y.distance(b.y_source.row(i), b.y_target.row(j));
      expected += (dxv - alpha * dyv) * (dxv - alpha * dyv);
    }
  }
  expected /= 4.0;
  CHECK(cross_view_geo_loss(m.x, m.y, b, alpha) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("prompt loss: direct substitution and zero case") {
  Rng rng(43);
  const Eigen::Index dx = 16, blocks = 4, classes = 3;
  CrossViewBatch b = random_batch(rng, 2, 2, dx, blocks, classes);
  const Metrics m = random_metrics(rng, dx, blocks * classes);

  const double dp = m.p.distance(b.prompt_source, b.prompt_target);
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double dyv = m.y.distance(b.y_source.row(i), b.y_target.row(j));
      expected += (dp - 1.0 * dyv) * (dp - 1.0 * dyv);
    }
  }
  expected /= 4.0;
  CHECK(prompt_corr_loss(m.p, m.y, b, 1.0) ==
        doctest::Approx(expected).epsilon(1e-12));

  // identical prompts and identical segmentations -> 0
  CrossViewBatch same = b;
  same.prompt_target = same.prompt_source;
  same.y_target = same.y_source;
  CHECK(prompt_corr_loss(m.p, m.y, same, 1.0, Pairing::kDiagonal) <= 1e-18);
}

TEST_CASE("total objective is the weighted sum") {
  AdaptConfig cfg;  // lambda_i = 1.0, lambda_p = 0.5 defaults
  CHECK(total_objective(0.7, 0.2, 0.1, cfg) == doctest::Approx(0.95));
  cfg.lambda_i = 0.0;
  cfg.lambda_p = 0.0;
  CHECK(total_objective(0.7, 0.2, 0.1, cfg) == doctest::Approx(0.7));
}

TEST_CASE("pairing cardinalities and permutation invariance") {
  Rng rng(44);
  const Eigen::Index dx = 16, blocks = 4, classes = 3;
  CrossViewBatch b = random_batch(rng, 5, 3, dx, blocks, classes);
  const Metrics m = random_metrics(rng, dx, blocks * classes);

  // AllPairs averages over B_s * B_t terms; Diagonal over min(B_s, B_t):
  // verify by scaling sums reconstructed from per-pair residuals.
  double all_sum = 0.0;
  double diag_sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double dxv = m.x.distance(b.x_source.row(i), b.x_target.row(j));
      const double dyv = m.y.distance(b.y_source.row(i), b.y_target.row(j));
      const double r2 = (dxv - 1.5 * dyv) * (dxv - 1.5 * dyv);
      all_sum += r2;
      if (i == j) diag_sum += r2;
    }
  }
  CHECK(cross_view_geo_loss(m.x, m.y, b, 1.5) ==
        doctest::Approx(all_sum / 15.0).epsilon(1e-12));
  CHECK(cross_view_geo_loss(m.x, m.y, b, 1.5, Pairing::kDiagonal) ==
        doctest::Approx(diag_sum / 3.0).epsilon(1e-12));

  // shuffling batch order leaves the AllPairs loss unchanged
  CrossViewBatch shuffled = b;
  shuffled.x_source = b.x_source.colwise().reverse().eval();
  shuffled.y_source = b.y_source.colwise().reverse().eval();
  CHECK(std::abs(cross_view_geo_loss(m.x, m.y, shuffled, 1.5) -
                 cross_view_geo_loss(m.x, m.y, b, 1.5)) <= 1e-12);
}

TEST_CASE("batch validation catches malformed segmentation rows") {
  Rng rng(45);
  CrossViewBatch b = random_batch(rng, 3, 3, 8, 4, 3);
  CHECK_NOTHROW(validate(b));
  b.y_target(0, 0) += 0.5;  // block no longer sums to 1
  CHECK_THROWS_AS(validate(b), DataError);
  b = random_batch(rng, 1, 3, 8, 4, 3);
  CHECK_THROWS_AS(validate(b), DataError);  // B_s < 2
}

TEST_CASE("gradients vanish when weights vanish or residuals vanish") {
  Rng rng(46);
  const Eigen::Index dx = 16, blocks = 4, classes = 3;
  CrossViewBatch b = random_batch(rng, 3, 3, dx, blocks, classes);
  const Metrics m = random_metrics(rng, dx, blocks * classes);

  AdaptConfig cfg;
  cfg.lambda_i = 0.0;
  cfg.lambda_p = 0.0;
  for (const auto& g : grad_wrt_target_preds(m.x, m.y, &m.p, b, cfg)) {
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
  }

  // residuals vanish: x_t = x_s, y_t = y_s pairwise with alpha chosen so
  // D_x = alpha D_y = 0 on the diagonal
  CrossViewBatch same = b;
  same.x_target = same.x_source;
  same.y_target = same.y_source;
  cfg.lambda_i = 1.0;
  cfg.lambda_p = 0.0;
  cfg.pairing = Pairing::kDiagonal;
  for (const auto& g : grad_wrt_target_preds(m.x, m.y, nullptr, same, cfg)) {
    CHECK(g.cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(47);
  const Eigen::Index dx = 16, blocks = 4, classes = 3;
  const Eigen::Index dy = blocks * classes;
  const double h = 1e-5;

  for (int trial = 0; trial < 10; ++trial) {
    CrossViewBatch b = random_batch(rng, 4, 3, dx, blocks, classes);
    const Metrics m = random_metrics(rng, dx, dy);
    AdaptConfig cfg;
    cfg.alpha = 1.5;
    cfg.gamma = 1.0;
    cfg.lambda_i = 1.0;
    cfg.lambda_p = 0.5;
    cfg.pairing = trial % 2 == 0 ? Pairing::kAllPairs : Pairing::kDiagonal;

    const auto loss = [&](const CrossViewBatch& batch) {
      return cfg.lambda_i *
                 cross_view_geo_loss(m.x, m.y, batch, cfg.alpha, cfg.pairing) +
             cfg.lambda_p *
                 prompt_corr_loss(m.p, m.y, batch, cfg.gamma, cfg.pairing);
    };

    const auto grads = grad_wrt_target_preds(m.x, m.y, &m.p, b, cfg);
    double max_rel = 0.0;
    for (Eigen::Index j = 0; j < b.y_target.rows(); ++j) {
      for (Eigen::Index c = 0; c < dy; ++c) {
        CrossViewBatch plus = b;
        CrossViewBatch minus = b;
        plus.y_target(j, c) += h;
        minus.y_target(j, c) -= h;
        const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
        const double an = grads[static_cast<std::size_t>(j)](c);
        const double rel =
            std::abs(an - fd) / std::max(std::abs(an) + std::abs(fd), 1e-6);
        max_rel = std::max(max_rel, rel);
      }
    }
    CHECK(max_rel <= 1e-4);
  }
}

TEST_CASE("upper-bound inequality holds with the 2(1+alpha) constant") {
  Rng rng(48);
  const Eigen::Index dx = 16, blocks = 4, classes = 3;
  const Metrics m = random_metrics(rng, dx, blocks * classes);
  const double alpha = 1.5;
  const double constant = 2.0 * (1.0 + alpha);
  CHECK(constant == doctest::Approx(5.0));

  auto draw = [&](Eigen::Index d) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    return v;
  };
  for (int trial = 0; trial < 500; ++trial) {
    const Vector xs = draw(dx), xbar = draw(dx), xt = draw(dx);
    const Vector ys = draw(blocks * classes), ybar = draw(blocks * classes),
                 yt = draw(blocks * classes);
    const double lhs =
        m.x.distance(xs, xbar) - alpha * m.y.distance(ys, ybar);
    const double rhs =
        m.x.distance(xs, xt) - alpha * m.y.distance(ys, yt) + constant;
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("adapt config serialization round-trips and validates") {
  AdaptConfig cfg;
  cfg.alpha = 2.0;
  cfg.batch_size = 8;
  cfg.pairing = Pairing::kDiagonal;
  cfg.seed = 99;
  const AdaptConfig back = adapt_config_from_json(to_json(cfg));
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.pairing == cfg.pairing);
  CHECK(back.seed == cfg.seed);

  CHECK_THROWS_AS(adapt_config_from_json("{\"alpha\": -1}"), DataError);
  CHECK_THROWS_AS(adapt_config_from_json("{\"batch_size\": 1}"), DataError);
  CHECK_THROWS_AS(adapt_config_from_json("not json"), DataError);
}
