#pragma once

#include "crossview/matrix.hpp"
#include "crossview/subspace.hpp"

namespace crossview {

/// Correlation metric between a source-domain vector and a target-domain
/// vector: one minus the cosine in the Q inner product, with vectors shifted
/// by their own domain's centering mean first. Implementations are immutable
/// and safe for concurrent use.
///
/// Exposing Q and the means (rather than only distance()) lets batch loops
/// reuse Q products; distance() and the cached path compute bit-identical
/// values because they share the same primitive expressions.
class ViewMetric {
 public:
  virtual ~ViewMetric() = default;

  virtual Eigen::Index ambient_dim() const = 0;

  /// Kernel matrix, or nullptr meaning the identity.
  virtual const Matrix* q_matrix() const = 0;

  virtual const Vector& mean_source() const = 0;
  virtual const Vector& mean_target() const = 0;

  Vector apply_q(const Vector& centered) const;

  /// D(a, b) = 1 - a'Qb / (|Q^1/2 a| |Q^1/2 b|) with `a` centered by the
  /// source mean and `b` by the target mean. In [0, 2] by Cauchy-Schwarz.
  /// Identities such as distance(a, a) = 0 and symmetry hold whenever the
  /// two means coincide. Throws DegenerateVector when either q-norm is
  /// <= 1e-12 (the vector lies in the kernel's null space).
  double distance(const Vector& a, const Vector& b) const;

  /// d distance(a, b) / d b under the frozen-kernel contract (Q and means
  /// treated as constants).
  Vector distance_grad_b(const Vector& a, const Vector& b) const;

  static constexpr double kDegenerateNormTol = 1e-12;

  // Shared primitives, also used by batch caches.
  static double distance_from_parts(const Vector& centered_a,
                                    const Vector& q_b, double norm_a,
                                    double norm_b);
  static Vector grad_b_from_parts(const Vector& q_a, const Vector& q_b,
                                  double inner, double norm_a, double norm_b);
};

/// Geodesic flow kernel between a source and a target subspace on the
/// Grassmann manifold. Q integrates projections along the whole geodesic
/// path (paper normalization: identical subspaces give Q = 2 P P').
class GeodesicFlowKernel : public ViewMetric {
 public:
  /// Closed-form construction from the principal-angle system.
  /// Small angles (2w below `small_angle_eps`) use series expansions of the
  /// lambda diagonals, which are 0/0 forms at w = 0. `precomputed_complement`
  /// skips the orthogonal-complement factorization when the caller already
  /// holds orthogonal_complement(source) (per-batch kernels against a fixed
  /// source subspace).
  static GeodesicFlowKernel build(const Subspace& source,
                                  const Subspace& target,
                                  double small_angle_eps = 1e-4,
                                  const Matrix* precomputed_complement = nullptr);

  Eigen::Index ambient_dim() const override { return q_.rows(); }
  Eigen::Index subspace_dim() const { return omegas_.size(); }

  const Matrix* q_matrix() const override { return &q_; }
  const Matrix& q() const { return q_; }
  const Vector& omegas() const { return omegas_; }
  const Vector& lambda1() const { return lambda1_; }
  const Vector& lambda2() const { return lambda2_; }
  const Vector& lambda3() const { return lambda3_; }
  const Subspace& source() const { return source_; }
  const Matrix& complement() const { return complement_; }
  const Matrix& u1() const { return u1_; }
  const Matrix& u2() const { return u2_; }
  const Matrix& v() const { return v_; }
  const Vector& mean_source() const override { return mean_s_; }
  const Vector& mean_target() const override { return mean_t_; }

  /// Pi(nu): the D x N orthonormal basis at position nu on the geodesic.
  /// span(Pi(0)) = span(P_s), span(Pi(1)) = span(P_t).
  Matrix flow_subspace(double nu) const;

  /// (a - mean_s)' Q (b - mean_t).
  double inner(const Vector& a, const Vector& b) const;

  /// sqrt((x - mean)' Q (x - mean)) for the given domain's mean.
  double q_norm_source(const Vector& a) const;
  double q_norm_target(const Vector& b) const;

 private:
  GeodesicFlowKernel() = default;

  Subspace source_;
  Matrix complement_;  // D x (D-N)
  Matrix u1_, u2_, v_;
  Vector omegas_;
  Vector lambda1_, lambda2_, lambda3_;
  Matrix q_;  // D x D, symmetric PSD
  Vector mean_s_, mean_t_;
};

/// Independent check of the closed form: composite Simpson estimate of the
/// path integral of Pi(nu) Pi(nu)' on an odd uniform grid, with the same
/// factor-2 normalization the closed form carries. n_points must be odd,
/// >= 3.
Matrix quadrature_q(const Subspace& source, const Subspace& target,
                    int n_points);

/// The Euclidean comparison arm: Q = identity, no centering, so distance is
/// one minus the plain cosine in the raw ambient space.
class EuclideanMetric : public ViewMetric {
 public:
  explicit EuclideanMetric(Eigen::Index ambient_dim)
      : zero_(Vector::Zero(ambient_dim)) {}

  Eigen::Index ambient_dim() const override { return zero_.size(); }
  const Matrix* q_matrix() const override { return nullptr; }
  const Vector& mean_source() const override { return zero_; }
  const Vector& mean_target() const override { return zero_; }

 private:
  Vector zero_;
};

}  // namespace crossview
