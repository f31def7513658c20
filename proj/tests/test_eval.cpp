#include <doctest.h>

#include <cmath>

#include "crossview/errors.hpp"
#include "crossview/eval.hpp"
#include "test_helpers.hpp"

using namespace crossview;

TEST_CASE("miou: perfect prediction scores 1 for every class") {
  ConfusionMatrix conf(3);
  conf.add(0, 0, 100);
  conf.add(1, 1, 40);
  conf.add(2, 2, 5);
  const MiouResult m = miou(conf);
  CHECK(m.miou == doctest::Approx(1.0));
  for (const auto& iou : m.per_class) {
    REQUIRE(iou.has_value());
    CHECK(*iou == doctest::Approx(1.0));
  }
}

TEST_CASE("miou: hand-computed example gives exactly 0.375") {
  // classes 0 and 1 have intersections 50/25 over unions 100/100; the
  // spillover class 2 lands on IoU 75/200 = 0.375 as well, so the global
  // mean is exactly 0.375 (all values dyadic, no rounding).
  ConfusionMatrix conf(3);
  conf.add(0, 0, 50);
  conf.add(0, 2, 50);
  conf.add(1, 1, 25);
  conf.add(1, 2, 50);
  conf.add(2, 1, 25);
  conf.add(2, 2, 75);
  const MiouResult m = miou(conf);
  CHECK(m.per_class[0].value() == 0.5);   // 50 / 100
  CHECK(m.per_class[1].value() == 0.25);  // 25 / 100
  CHECK(m.per_class[2].value() == 0.375);
  CHECK(m.miou == 0.375);
}

TEST_CASE("miou: zero-union classes are excluded, not scored") {
  ConfusionMatrix conf(3);
  conf.add(0, 0, 10);
  conf.add(1, 1, 10);
  // class 2 never appears in truth or prediction
  const MiouResult m = miou(conf);
  CHECK(!m.per_class[2].has_value());
  CHECK(m.miou == doctest::Approx(1.0));

  ConfusionMatrix empty(2);
  CHECK_THROWS_AS(miou(empty), EmptyEvaluation);
}

TEST_CASE("miou is invariant under consistent class relabeling") {
  ConfusionMatrix conf(3);
  conf.add(0, 0, 10);
  conf.add(0, 1, 5);
  conf.add(1, 1, 20);
  conf.add(2, 0, 3);
  conf.add(2, 2, 7);
  // swap labels 0 and 2 everywhere
  ConfusionMatrix swapped(3);
  swapped.add(2, 2, 10);
  swapped.add(2, 1, 5);
  swapped.add(1, 1, 20);
  swapped.add(0, 2, 3);
  swapped.add(0, 0, 7);
  CHECK(miou(conf).miou == doctest::Approx(miou(swapped).miou).epsilon(1e-12));
}

TEST_CASE("confusion accumulation and merge agree with direct counting") {
  Mask truth{2, 2, {0, 1, 1, 0}};
  Mask pred{2, 2, {0, 1, 0, 1}};
  ConfusionMatrix a(2);
  a.accumulate(truth, pred);
  CHECK(a.at(0, 0) == 1);
  CHECK(a.at(1, 1) == 1);
  CHECK(a.at(1, 0) == 1);
  CHECK(a.at(0, 1) == 1);
  ConfusionMatrix b(2);
  b.accumulate(truth, pred);
  b.merge(a);
  CHECK(b.total() == 8);
}

TEST_CASE("linear hypothesis: identical spaces give slope 1, r 1") {
  Rng rng(61);
  const Subspace ps = testing::random_subspace(rng, 24, 6);
  const Subspace pt = testing::random_subspace(rng, 24, 6);
  const auto k = GeodesicFlowKernel::build(ps, pt);
  const Matrix xs = testing::random_matrix(rng, 40, 24);
  const Matrix xt = testing::random_matrix(rng, 40, 24);
  // segmentation vectors are copies of the feature vectors
  const HypothesisResult h =
      validate_linear_hypothesis(k, k, xs, xt, xs, xt, 200, 5);
  CHECK(!h.degenerate);
  CHECK(h.alpha_hat == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(h.pearson_r == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(h.samples == 200);
  CHECK(h.scatter.size() == 200);
}

TEST_CASE("linear hypothesis: degenerate transform is flagged") {
  Rng rng(62);
  const Subspace p = testing::random_subspace(rng, 16, 4);
  const auto k = GeodesicFlowKernel::build(p, p);
  // every sample identical: all distances are zero
  Matrix rows(10, 16);
  Vector v = testing::random_matrix(rng, 16, 1);
  for (int i = 0; i < 10; ++i) rows.row(i) = v.transpose();
  const HypothesisResult h =
      validate_linear_hypothesis(k, k, rows, rows, rows, rows, 64, 1);
  CHECK(h.degenerate);
}

TEST_CASE("linear hypothesis rejects tiny samples") {
  Rng rng(63);
  const Subspace p = testing::random_subspace(rng, 16, 4);
  const auto k = GeodesicFlowKernel::build(p, p);
  const Matrix rows = testing::random_matrix(rng, 10, 16);
  CHECK_THROWS_AS(validate_linear_hypothesis(k, k, rows, rows, rows, rows, 29, 1),
                  InsufficientPairs);
}

TEST_CASE("upper bound: equality margin at the degenerate tuple") {
  Rng rng(64);
  const Subspace ps = testing::random_subspace(rng, 16, 4);
  const Subspace pt = testing::random_subspace(rng, 16, 4);
  const auto k = GeodesicFlowKernel::build(ps, pt);
  const double alpha = 1.5;

  // x_bar_t = x_t and y_bar_t = y_t: lhs = rhs - 2(1+alpha) exactly
  BoundTuple t;
  t.x_s = testing::random_matrix(rng, 16, 1);
  t.x_t = testing::random_matrix(rng, 16, 1);
  t.x_bar_t = t.x_t;
  t.y_s = testing::random_matrix(rng, 16, 1);
  t.y_t = testing::random_matrix(rng, 16, 1);
  t.y_bar_t = t.y_t;
  const BoundReport r = check_upper_bound(k, k, {t}, alpha);
  CHECK(r.n_checked == 1);
  CHECK(r.rows[0].rhs - r.rows[0].lhs ==
        doctest::Approx(2.0 * (1.0 + alpha)).epsilon(1e-12));
  CHECK(r.max_violation <= -2.0 * (1.0 + alpha) + 1e-9);
}

TEST_CASE("upper bound: no violations over random tuples") {
  Rng rng(65);
  const Subspace ps = testing::random_subspace(rng, 32, 8);
  const Subspace pt = testing::random_subspace(rng, 32, 8);
  const auto kx = GeodesicFlowKernel::build(ps, pt);
  const Subspace qs = testing::random_subspace(rng, 20, 5);
  const Subspace qt = testing::random_subspace(rng, 20, 5);
  const auto ky = GeodesicFlowKernel::build(qs, qt);

  std::vector<BoundTuple> tuples;
  for (int i = 0; i < 2000; ++i) {
    BoundTuple t;
    t.x_s = testing::random_matrix(rng, 32, 1);
    t.x_bar_t = testing::random_matrix(rng, 32, 1);
    t.x_t = testing::random_matrix(rng, 32, 1);
    t.y_s = testing::random_matrix(rng, 20, 1);
    t.y_bar_t = testing::random_matrix(rng, 20, 1);
    t.y_t = testing::random_matrix(rng, 20, 1);
    tuples.push_back(std::move(t));
  }
  const BoundReport r = check_upper_bound(kx, ky, tuples, 1.5);
  CHECK(r.n_checked == 2000);
  CHECK(r.max_violation <= 1e-9);
}

TEST_CASE("triangle probe: collinear in-span vectors never violate") {
  Rng rng(66);
  const Subspace p = testing::random_subspace(rng, 12, 3);
  const auto k = GeodesicFlowKernel::build(p, p);
  // 1-D cosine geometry: distances from collinear positive multiples are 0
  Vector base = p.basis.col(0);
  const double d_ab = k.distance(base, Vector(2.0 * base));
  const double d_bc = k.distance(Vector(2.0 * base), Vector(0.5 * base));
  const double d_ac = k.distance(base, Vector(0.5 * base));
  CHECK(d_ac <= d_ab + d_bc + 1e-12);

  const TriangleReport r = triangle_probe(k, 2000, 3);
  CHECK(r.n_triples == 2000);
  CHECK(r.violation_rate >= 0.0);
  CHECK(r.violation_rate <= 1.0);
  CHECK_THROWS_AS(triangle_probe(k, 0, 3), DomainError);
}
