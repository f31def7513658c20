#pragma once

#include <Eigen/Dense>

#include "crossview/rng.hpp"
#include "crossview/subspace.hpp"

namespace crossview::testing {

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

/// Orthonormal basis of a random N-dim subspace of R^D, zero mean.
inline Subspace random_subspace(Rng& rng, Eigen::Index d, Eigen::Index n) {
  const Matrix g = random_matrix(rng, d, n);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, n);
  return Subspace{std::move(q), Vector::Zero(d)};
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace crossview::testing
