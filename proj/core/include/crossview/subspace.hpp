#pragma once

#include "crossview/matrix.hpp"

namespace crossview {

/// Default basis dimension for image/segmentation subspaces. Fitting clips it
/// against sample count and ambient dimension where necessary.
inline constexpr int kDefaultSubspaceDim = 256;

/// An N-dimensional linear subspace of R^D: a D x N orthonormal basis plus
/// the centering mean used when fitting. Immutable after construction.
struct Subspace {
  Matrix basis;  // D x N, orthonormal columns, sign-normalized
  Vector mean;   // D; zero when fitted without centering

  Eigen::Index ambient_dim() const { return basis.rows(); }
  Eigen::Index dim() const { return basis.cols(); }
};

/// Throws unless columns are orthonormal (max-norm of P'P - I <= 1e-10) and
/// 0 < N < D.
void validate_subspace(const Subspace& s);

/// PCA basis of `samples` (one sample per row). With `center` the row mean is
/// subtracted first and stored on the result. Deterministic for a fixed
/// input order; each basis column is flipped so its largest-magnitude entry
/// is non-negative.
///
/// Throws DimensionError (N = 0 or N >= D, or fewer than 2 samples when
/// centering) and RankDeficient (sample rank < N).
Subspace fit_subspace(const Matrix& samples, int target_dim = kDefaultSubspaceDim,
                      bool center = true);

/// Numerical rank of the (optionally centered) sample matrix under the same
/// tolerance fit_subspace uses for its rank check.
int sample_rank(const Matrix& samples, bool center = true);

/// D x (D-N) orthonormal complement R of the basis: R'P = 0, R'R = I.
/// Completed from a full orthogonal decomposition of P, same sign convention.
Matrix orthogonal_complement(const Subspace& p);

/// Principal angle system between two equal-shape subspaces.
/// omegas are ascending in [0, pi/2]; cos(omega_i) are the singular values of
/// Ps'Pt; U1 (N x N) and V (N x N) are orthogonal; U2 ((D-N) x N) has
/// orthonormal columns with R'Pt = -U2 Sigma V' where Sigma = diag(sin omega).
struct PrincipalAngles {
  Vector omegas;
  Matrix u1;
  Matrix u2;
  Matrix v;
};

/// Requires matching ambient_dim and dim, and D >= 2N so U2 is well-defined.
/// Throws DimensionMismatch / AmbientTooSmall. `precomputed_complement`, when
/// given, must equal orthogonal_complement(ps) and skips recomputing it.
PrincipalAngles principal_angles(const Subspace& ps, const Subspace& pt,
                                 const Matrix* precomputed_complement = nullptr);

}  // namespace crossview
