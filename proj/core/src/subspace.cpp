#include "crossview/subspace.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "crossview/errors.hpp"

namespace crossview {

namespace {

// Flip a column so the entry of largest magnitude is non-negative (first
// index wins ties). Keeps fitted bases deterministic.
void sign_normalize_column(Eigen::Ref<Matrix> m, Eigen::Index col) {
  Eigen::Index imax = 0;
  double best = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double a = std::abs(m(r, col));
    if (a > best) {
      best = a;
      imax = r;
    }
  }
  if (m(imax, col) < 0.0) {
    m.col(col) = -m.col(col);
  }
}

void sign_normalize(Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    sign_normalize_column(m, c);
  }
}

Eigen::JacobiSVD<Matrix> full_svd(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

}  // namespace

void validate_subspace(const Subspace& s) {
  const Eigen::Index d = s.ambient_dim();
  const Eigen::Index n = s.dim();
  if (n <= 0 || n >= d) {
    throw DimensionError("subspace dim must satisfy 0 < N < D, got N=" +
                         std::to_string(n) + " D=" + std::to_string(d));
  }
  if (s.mean.size() != d) {
    throw DimensionMismatch("subspace mean length != ambient dim");
  }
  const Matrix gram = s.basis.transpose() * s.basis;
  const double dev =
      (gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (dev > 1e-10) {
    throw NumericalError("subspace basis not orthonormal (deviation " +
                         std::to_string(dev) + ")");
  }
}

namespace {

Eigen::Index rank_from_singular_values(const Vector& sigma, Eigen::Index rows,
                                       Eigen::Index cols) {
  const double tol = std::max(rows, cols) *
                     std::numeric_limits<double>::epsilon() *
                     (sigma.size() > 0 ? sigma(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > tol) ++rank;
  }
  return rank;
}

}  // namespace

Subspace fit_subspace(const Matrix& samples, int target_dim, bool center) {
  const Eigen::Index b = samples.rows();
  const Eigen::Index d = samples.cols();
  if (target_dim <= 0 || target_dim >= d) {
    throw DimensionError("target_dim must satisfy 0 < N < D, got N=" +
                         std::to_string(target_dim) +
                         " D=" + std::to_string(d));
  }
  if (center && b < 2) {
    throw DimensionError("centered PCA needs at least 2 samples");
  }
  if (b < 1) {
    throw DimensionError("no samples");
  }
  require_finite(samples, "fit_subspace samples");

  Vector mean = Vector::Zero(d);
  Matrix centered = samples;
  if (center) {
    mean = samples.colwise().mean().transpose();
    centered.rowwise() -= mean.transpose();
  }

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const Eigen::Index rank =
      rank_from_singular_values(svd.singularValues(), b, d);
  if (rank < target_dim) {
    throw RankDeficient("sample rank " + std::to_string(rank) +
                        " below requested dim " + std::to_string(target_dim));
  }

  Matrix basis = svd.matrixV().leftCols(target_dim);
  sign_normalize(basis);
  Subspace out{std::move(basis), std::move(mean)};
  validate_subspace(out);
  return out;
}

int sample_rank(const Matrix& samples, bool center) {
  Matrix centered = samples;
  if (center) {
    centered.rowwise() -= samples.colwise().mean();
  }
  Eigen::BDCSVD<Matrix> svd(centered);
  return static_cast<int>(rank_from_singular_values(
      svd.singularValues(), samples.rows(), samples.cols()));
}

Matrix orthogonal_complement(const Subspace& p) {
  validate_subspace(p);
  const Eigen::Index d = p.ambient_dim();
  const Eigen::Index n = p.dim();
  // Full left factor of the basis SVD; its trailing columns span the
  // orthogonal complement exactly.
  Eigen::JacobiSVD<Matrix> svd(p.basis, Eigen::ComputeFullU);
  Matrix r = svd.matrixU().rightCols(d - n);
  sign_normalize(r);
  return r;
}

PrincipalAngles principal_angles(const Subspace& ps, const Subspace& pt,
                                 const Matrix* precomputed_complement) {
  validate_subspace(ps);
  validate_subspace(pt);
  const Eigen::Index d = ps.ambient_dim();
  const Eigen::Index n = ps.dim();
  if (pt.ambient_dim() != d || pt.dim() != n) {
    throw DimensionMismatch("principal_angles: subspaces have shapes " +
                            std::to_string(d) + "x" + std::to_string(n) +
                            " vs " + std::to_string(pt.ambient_dim()) + "x" +
                            std::to_string(pt.dim()));
  }
  if (d < 2 * n) {
    throw AmbientTooSmall("principal_angles needs D >= 2N, got D=" +
                          std::to_string(d) + " N=" + std::to_string(n));
  }

  const Matrix r = precomputed_complement ? *precomputed_complement
                                          : orthogonal_complement(ps);

  // Paired decomposition: Ps'Pt = U1 Gamma V', R'Pt = -U2 Sigma V' with a
  // shared V. The SVD of Ps'Pt fixes U1, V (singular values descending =>
  // angles ascending); U2 columns come from -R'Pt V.
  Eigen::JacobiSVD<Matrix> svd =
      full_svd(ps.basis.transpose() * pt.basis);
  Matrix u1 = svd.matrixU();
  Matrix v = svd.matrixV();
  Vector cosines = svd.singularValues();

  // Joint sign convention: flipping a V column flips the matching U1 column,
  // and U2 follows through -R'Pt V, so the factorization is preserved.
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index imax = 0;
    v.col(i).cwiseAbs().maxCoeff(&imax);
    if (v(imax, i) < 0.0) {
      v.col(i) = -v.col(i);
      u1.col(i) = -u1.col(i);
    }
  }

  const Matrix m = -(r.transpose() * pt.basis) * v;  // (D-N) x N

  Vector omegas(n);
  Matrix u2 = Matrix::Zero(d - n, n);
  constexpr double kFillTol = 1e-9;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::min(m.col(i).norm(), 1.0);
    // atan2 stays well-conditioned at both omega -> 0 and omega -> pi/2,
    // where acos of the clamped cosine loses half the digits.
    omegas(i) = std::atan2(s, c);
    if (s > kFillTol) {
      u2.col(i) = m.col(i) / m.col(i).norm();
    }
  }

  // Columns with sin(omega) ~ 0 are unconstrained by the factorization; fill
  // them with a deterministic orthonormal completion against everything
  // already placed.
  for (Eigen::Index i = 0; i < n; ++i) {
    if (u2.col(i).norm() > 0.5) continue;
    for (Eigen::Index k = 0; k < d - n; ++k) {
      Vector cand = Vector::Zero(d - n);
      cand(k) = 1.0;
      cand -= u2 * (u2.transpose() * cand);
      const double norm = cand.norm();
      if (norm > 0.5) {
        u2.col(i) = cand / norm;
        break;
      }
    }
    if (u2.col(i).norm() < 0.5) {
      throw NumericalError("principal_angles: failed to complete U2 column");
    }
  }

  return PrincipalAngles{std::move(omegas), std::move(u1), std::move(u2),
                         std::move(v)};
}

}  // namespace crossview
