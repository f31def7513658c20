#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>

#include "crossview/errors.hpp"
#include "crossview/subspace.hpp"
#include "test_helpers.hpp"

using namespace crossview;
using testing::max_abs;

TEST_CASE("fit_subspace recovers one-dimensional data with its mean") {
  Matrix samples(3, 3);
  samples << 1, 0, 0, 2, 0, 0, 3, 0, 0;
  const Subspace s = fit_subspace(samples, 1);
  CHECK(s.basis(0, 0) == doctest::Approx(1.0));  // sign convention
  CHECK(std::abs(s.basis(1, 0)) < 1e-12);
  CHECK(std::abs(s.basis(2, 0)) < 1e-12);
  CHECK(s.mean(0) == doctest::Approx(2.0));
}

TEST_CASE("fit_subspace rejects rank-deficient and bad-dimension requests") {
  Matrix flat(2, 3);
  flat << 1, 0, 0, 2, 0, 0;  // centered rank is 1
  CHECK_THROWS_AS(fit_subspace(flat, 2), RankDeficient);

  Matrix ok(4, 3);
  ok << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1;
  CHECK_THROWS_AS(fit_subspace(ok, 3), DimensionError);  // N >= D
  CHECK_THROWS_AS(fit_subspace(ok, 0), DimensionError);
  Matrix single(1, 3);
  single << 1, 2, 3;
  CHECK_THROWS_AS(fit_subspace(single, 1, true), DimensionError);
}

TEST_CASE("fitted bases are orthonormal and deterministic") {
  Rng rng(5);
  const Matrix samples = testing::random_matrix(rng, 40, 12);
  const Subspace a = fit_subspace(samples, 5);
  const Subspace b = fit_subspace(samples, 5);
  CHECK(max_abs(a.basis.transpose() * a.basis - Matrix::Identity(5, 5)) <=
        1e-10);
  CHECK(max_abs(a.basis - b.basis) == 0.0);
}

TEST_CASE("fit_subspace is scale-invariant when centering") {
  Rng rng(6);
  const Matrix samples = testing::random_matrix(rng, 30, 8);
  const Subspace base = fit_subspace(samples, 3);
  const Subspace scaled = fit_subspace(Matrix(17.5 * samples), 3);
  CHECK(max_abs(base.basis - scaled.basis) < 1e-9);
}

TEST_CASE("orthogonal_complement completes an axis-aligned basis") {
  Subspace p;
  p.basis = Matrix::Zero(3, 1);
  p.basis(0, 0) = 1.0;
  p.mean = Vector::Zero(3);
  const Matrix r = orthogonal_complement(p);
  CHECK(r.rows() == 3);
  CHECK(r.cols() == 2);
  // spans {e2, e3}: the e1 components vanish
  CHECK(std::abs(r(0, 0)) < 1e-12);
  CHECK(std::abs(r(0, 1)) < 1e-12);
}

TEST_CASE("complement properties on random bases") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Subspace p = testing::random_subspace(rng, 32, 8);
    const Matrix r = orthogonal_complement(p);
    CHECK(max_abs(r.transpose() * p.basis) <= 1e-10);
    CHECK(max_abs(r.transpose() * r - Matrix::Identity(24, 24)) <= 1e-10);
    // [P R] is a full orthogonal matrix
    Matrix full(32, 32);
    full << p.basis, r;
    CHECK(max_abs(full.transpose() * full - Matrix::Identity(32, 32)) <=
          1e-10);
  }
}

TEST_CASE("planar rotation gives the exact principal angle") {
  const double theta = std::numbers::pi / 6;
  Subspace ps, pt;
  ps.basis = Matrix::Zero(4, 1);
  ps.basis(0, 0) = 1.0;
  ps.mean = Vector::Zero(4);
  pt.basis = Matrix::Zero(4, 1);
  pt.basis(0, 0) = std::cos(theta);
  pt.basis(1, 0) = std::sin(theta);
  pt.mean = Vector::Zero(4);
  const PrincipalAngles pa = principal_angles(ps, pt);
  CHECK(pa.omegas.size() == 1);
  CHECK(std::abs(pa.omegas(0) - theta) < 1e-12);
}

TEST_CASE("identical subspaces give all-zero angles") {
  Rng rng(8);
  const Subspace p = testing::random_subspace(rng, 20, 6);
  const PrincipalAngles pa = principal_angles(p, p);
  CHECK(pa.omegas.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("angles match an independent SVD oracle on random pairs") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Subspace ps = testing::random_subspace(rng, 32, 8);
    const Subspace pt = testing::random_subspace(rng, 32, 8);
    const PrincipalAngles pa = principal_angles(ps, pt);

    // Oracle: arccos of the singular values of Ps'Pt, computed directly.
    Eigen::JacobiSVD<Matrix> svd(ps.basis.transpose() * pt.basis);
    for (Eigen::Index i = 0; i < 8; ++i) {
      const double expected =
          std::acos(std::clamp(svd.singularValues()(i), 0.0, 1.0));
      CHECK(std::abs(pa.omegas(i) - expected) < 1e-9);
    }
    // ascending in [0, pi/2]
    for (Eigen::Index i = 0; i < 8; ++i) {
      CHECK(pa.omegas(i) >= 0.0);
      CHECK(pa.omegas(i) <= std::numbers::pi / 2 + 1e-12);
      if (i > 0) CHECK(pa.omegas(i) + 1e-12 >= pa.omegas(i - 1));
    }
  }
}

TEST_CASE("angle output is symmetric between the two subspaces") {
  Rng rng(10);
  const Subspace ps = testing::random_subspace(rng, 24, 6);
  const Subspace pt = testing::random_subspace(rng, 24, 6);
  const Vector a = principal_angles(ps, pt).omegas;
  const Vector b = principal_angles(pt, ps).omegas;
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("factorization invariants: U1/V orthogonal, U2 reconstruction") {
  Rng rng(12);
  for (int trial = 0; trial < 6; ++trial) {
    const Subspace ps = testing::random_subspace(rng, 30, 9);
    const Subspace pt = testing::random_subspace(rng, 30, 9);
    const PrincipalAngles pa = principal_angles(ps, pt);
    CHECK(max_abs(pa.u1.transpose() * pa.u1 - Matrix::Identity(9, 9)) < 1e-10);
    CHECK(max_abs(pa.v.transpose() * pa.v - Matrix::Identity(9, 9)) < 1e-10);
    CHECK(max_abs(pa.u2.transpose() * pa.u2 - Matrix::Identity(9, 9)) < 1e-8);

    const Matrix r = orthogonal_complement(ps);
    Matrix sigma = Matrix::Zero(9, 9);
    for (Eigen::Index i = 0; i < 9; ++i) sigma(i, i) = std::sin(pa.omegas(i));
    CHECK(max_abs(r.transpose() * pt.basis + pa.u2 * sigma * pa.v.transpose()) <=
          1e-8);
  }
}

TEST_CASE("dimension preconditions are enforced") {
  Rng rng(13);
  const Subspace a = testing::random_subspace(rng, 16, 4);
  const Subspace b = testing::random_subspace(rng, 16, 5);
  CHECK_THROWS_AS(principal_angles(a, b), DimensionMismatch);
  const Subspace c = testing::random_subspace(rng, 10, 4);
  CHECK_THROWS_AS(principal_angles(a, c), DimensionMismatch);
  const Subspace d1 = testing::random_subspace(rng, 10, 6);
  const Subspace d2 = testing::random_subspace(rng, 10, 6);
  CHECK_THROWS_AS(principal_angles(d1, d2), AmbientTooSmall);  // D < 2N
}
