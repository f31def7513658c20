#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "crossview/errors.hpp"
#include "crossview/gfk.hpp"
#include "test_helpers.hpp"

using namespace crossview;
using testing::max_abs;

namespace {

Subspace axis_subspace(Eigen::Index d, std::initializer_list<int> axes) {
  Subspace s;
  s.basis = Matrix::Zero(d, static_cast<Eigen::Index>(axes.size()));
  Eigen::Index col = 0;
  for (int a : axes) s.basis(a, col++) = 1.0;
  s.mean = Vector::Zero(d);
  return s;
}

}  // namespace

TEST_CASE("identical subspaces: Q reduces to twice the projector") {
  Rng rng(21);
  const Subspace p = testing::random_subspace(rng, 16, 4);
  const auto k = GeodesicFlowKernel::build(p, p);
  CHECK(max_abs(k.q() - 2.0 * p.basis * p.basis.transpose()) <= 1e-8);
  CHECK(k.omegas().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("orthogonal subspaces hit the analytic lambda values") {
  const Subspace ps = axis_subspace(4, {0, 1});
  const Subspace pt = axis_subspace(4, {2, 3});
  const auto k = GeodesicFlowKernel::build(ps, pt);
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(std::abs(k.omegas()(i) - std::numbers::pi / 2) < 1e-12);
    CHECK(std::abs(k.lambda1()(i) - 1.0) < 1e-12);
    CHECK(std::abs(k.lambda2()(i) + 2.0 / std::numbers::pi) < 1e-12);
    CHECK(std::abs(k.lambda3()(i) - 1.0) < 1e-12);
  }
}

TEST_CASE("lambda limits at omega = 0") {
  Rng rng(22);
  const Subspace p = testing::random_subspace(rng, 12, 3);
  const auto k = GeodesicFlowKernel::build(p, p);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(std::abs(k.lambda1()(i) - 2.0) < 1e-12);
    CHECK(std::abs(k.lambda2()(i)) < 1e-12);
    CHECK(std::abs(k.lambda3()(i)) < 1e-12);
  }
}

TEST_CASE("closed form matches Simpson quadrature on random pairs") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = static_cast<Eigen::Index>(8 + rng.below(9));
    const auto n = static_cast<Eigen::Index>(1 + rng.below(4));
    const Subspace ps = testing::random_subspace(rng, d, n);
    const Subspace pt = testing::random_subspace(rng, d, n);
    const auto k = GeodesicFlowKernel::build(ps, pt);
    const Matrix qq = quadrature_q(ps, pt, 2001);
    CHECK(max_abs(k.q() - qq) <= 1e-8);
  }
}

TEST_CASE("quadrature convergence toward the closed form is monotone") {
  Rng rng(24);
  const Subspace ps = testing::random_subspace(rng, 16, 4);
  const Subspace pt = testing::random_subspace(rng, 16, 4);
  const auto k = GeodesicFlowKernel::build(ps, pt);
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {11, 101, 1001, 2001}) {
    const double err = max_abs(k.q() - quadrature_q(ps, pt, n));
    CHECK(err <= prev + 1e-15);
    prev = err;
  }
  // identical subspaces: constant integrand, any odd grid is exact
  const Subspace p = testing::random_subspace(rng, 16, 4);
  CHECK(max_abs(quadrature_q(p, p, 3) - 2.0 * p.basis * p.basis.transpose()) <=
        1e-10);
  CHECK(max_abs(quadrature_q(p, p, 101) - 2.0 * p.basis * p.basis.transpose()) <=
        1e-10);
  CHECK_THROWS_AS(quadrature_q(ps, pt, 4), DomainError);
  CHECK_THROWS_AS(quadrature_q(ps, pt, 1), DomainError);
}

TEST_CASE("kernel invariants: symmetry, PSD, lambda ranges") {
  Rng rng(25);
  for (int trial = 0; trial < 8; ++trial) {
    const Subspace ps = testing::random_subspace(rng, 24, 6);
    const Subspace pt = testing::random_subspace(rng, 24, 6);
    const auto k = GeodesicFlowKernel::build(ps, pt);
    CHECK(max_abs(k.q() - k.q().transpose()) <= 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(k.q());
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
    for (Eigen::Index i = 0; i < k.subspace_dim(); ++i) {
      CHECK(k.lambda1()(i) >= 1.0 - 1e-12);
      CHECK(k.lambda1()(i) <= 2.0 + 1e-12);
      CHECK(k.lambda3()(i) >= -1e-12);
      CHECK(k.lambda3()(i) <= 1.0 + 1e-12);
      CHECK(k.lambda2()(i) <= 1e-12);
      // min of (cos 2w - 1)/2w over [0, pi/2], attained at tan w = 2w
      CHECK(k.lambda2()(i) >= -0.7246113537767085 - 1e-12);
    }
  }
}

TEST_CASE("flow endpoints span the source and target subspaces") {
  Rng rng(26);
  const Subspace ps = testing::random_subspace(rng, 20, 5);
  const Subspace pt = testing::random_subspace(rng, 20, 5);
  const auto k = GeodesicFlowKernel::build(ps, pt);

  const Matrix pi0 = k.flow_subspace(0.0);
  const Matrix pi1 = k.flow_subspace(1.0);
  CHECK(max_abs(pi0 * pi0.transpose() - ps.basis * ps.basis.transpose()) <=
        1e-8);
  CHECK(max_abs(pi1 * pi1.transpose() - pt.basis * pt.basis.transpose()) <=
        1e-8);

  const Matrix mid = k.flow_subspace(0.5);
  CHECK(max_abs(mid.transpose() * mid - Matrix::Identity(5, 5)) <= 1e-9);

  CHECK_THROWS_AS(k.flow_subspace(-0.1), DomainError);
  CHECK_THROWS_AS(k.flow_subspace(1.1), DomainError);
}

TEST_CASE("gfk inner product matches quadrature and is PSD on the diagonal") {
  Rng rng(27);
  const Subspace ps = testing::random_subspace(rng, 16, 4);
  const Subspace pt = testing::random_subspace(rng, 16, 4);
  const auto k = GeodesicFlowKernel::build(ps, pt);
  const Matrix qq = quadrature_q(ps, pt, 2001);
  for (int trial = 0; trial < 20; ++trial) {
    Vector a(16), b(16);
    for (int i = 0; i < 16; ++i) {
      a(i) = rng.normal();
      b(i) = rng.normal();
    }
    CHECK(std::abs(k.inner(a, b) - a.dot(qq * b)) <= 1e-8);
    CHECK(k.inner(a, a) >= -1e-12);
    // bilinear symmetry (zero means)
    CHECK(k.inner(a, b) == doctest::Approx(k.inner(b, a)).epsilon(1e-10));
  }
}

TEST_CASE("identical subspaces reduce the inner product to 2 x'y in-span") {
  Rng rng(28);
  const Subspace p = testing::random_subspace(rng, 12, 3);
  const auto k = GeodesicFlowKernel::build(p, p);
  for (int trial = 0; trial < 10; ++trial) {
    Vector cx(3), cy(3);
    for (int i = 0; i < 3; ++i) {
      cx(i) = rng.normal();
      cy(i) = rng.normal();
    }
    const Vector x = p.basis * cx;
    const Vector y = p.basis * cy;
    CHECK(std::abs(k.inner(x, y) - 2.0 * x.dot(y)) <= 1e-8);
  }
}

TEST_CASE("distance properties: self-distance, antipodal, range, symmetry") {
  Rng rng(29);
  const Subspace p = testing::random_subspace(rng, 12, 3);
  const auto k_same = GeodesicFlowKernel::build(p, p);
  Vector coeff(3);
  coeff << 1.0, -0.5, 2.0;
  const Vector x = p.basis * coeff;
  CHECK(std::abs(k_same.distance(x, x)) <= 1e-9);
  CHECK(std::abs(k_same.distance(x, Vector(-x)) - 2.0) <= 1e-9);

  const Subspace ps = testing::random_subspace(rng, 20, 5);
  const Subspace pt = testing::random_subspace(rng, 20, 5);
  const auto k = GeodesicFlowKernel::build(ps, pt);
  const Matrix qq = quadrature_q(ps, pt, 2001);
  for (int trial = 0; trial < 50; ++trial) {
    Vector a(20), b(20);
    for (int i = 0; i < 20; ++i) {
      a(i) = rng.normal();
      b(i) = rng.normal();
    }
    const double d = k.distance(a, b);
    CHECK(d >= -1e-12);
    CHECK(d <= 2.0 + 1e-12);
    CHECK(d == doctest::Approx(k.distance(b, a)).epsilon(1e-10));
    // quadrature oracle for the full distance
    const double dq = 1.0 - a.dot(qq * b) / (std::sqrt(a.dot(qq * a)) *
                                             std::sqrt(b.dot(qq * b)));
    CHECK(std::abs(d - dq) <= 1e-7);
    // scale invariance (centering disabled: zero means)
    CHECK(std::abs(k.distance(Vector(3.0 * a), Vector(0.25 * b)) - d) <= 1e-9);
  }
}

TEST_CASE("null-space vectors raise DegenerateVector") {
  const Subspace ps = axis_subspace(4, {0});
  const Subspace pt = axis_subspace(4, {1});
  const auto k = GeodesicFlowKernel::build(ps, pt);
  // e3 is orthogonal to span(Ps) + span(Pt), hence in Q's null space
  Vector dead = Vector::Zero(4);
  dead(3) = 1.0;
  Vector alive = Vector::Zero(4);
  alive(0) = 1.0;
  CHECK_THROWS_AS(k.distance(alive, dead), DegenerateVector);
  CHECK_THROWS_AS(k.distance(dead, alive), DegenerateVector);
}

TEST_CASE("dimension mismatches are rejected") {
  Rng rng(30);
  const Subspace ps = testing::random_subspace(rng, 16, 4);
  const Subspace pt = testing::random_subspace(rng, 16, 4);
  const auto k = GeodesicFlowKernel::build(ps, pt);
  Vector wrong = Vector::Ones(7);
  Vector right = Vector::Ones(16);
  CHECK_THROWS_AS(k.distance(wrong, right), DimensionMismatch);
  CHECK_THROWS_AS(k.inner(right, wrong), DimensionMismatch);
}

TEST_CASE("euclidean metric is one minus cosine with the same contract") {
  Rng rng(31);
  const EuclideanMetric m(8);
  for (int trial = 0; trial < 20; ++trial) {
    Vector a(8), b(8);
    for (int i = 0; i < 8; ++i) {
      a(i) = rng.normal();
      b(i) = rng.normal();
    }
    const double expected = 1.0 - a.dot(b) / (a.norm() * b.norm());
    CHECK(m.distance(a, b) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK_THROWS_AS(m.distance(Vector::Zero(8), Vector::Ones(8)),
                  DegenerateVector);
}
