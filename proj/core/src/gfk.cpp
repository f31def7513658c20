#include "crossview/gfk.hpp"

#include <cmath>
#include <string>

#include "crossview/errors.hpp"

namespace crossview {

namespace {

void check_dim(const Vector& x, Eigen::Index d, const char* what) {
  if (x.size() != d) {
    throw DimensionMismatch(std::string(what) + ": expected length " +
                            std::to_string(d) + ", got " +
                            std::to_string(x.size()));
  }
}

}  // namespace

Vector ViewMetric::apply_q(const Vector& centered) const {
  const Matrix* q = q_matrix();
  return q ? Vector(*q * centered) : centered;
}

double ViewMetric::distance_from_parts(const Vector& centered_a,
                                       const Vector& q_b, double norm_a,
                                       double norm_b) {
  if (norm_a <= kDegenerateNormTol || norm_b <= kDegenerateNormTol) {
    throw DegenerateVector("distance: vector in the kernel null space");
  }
  return 1.0 - centered_a.dot(q_b) / (norm_a * norm_b);
}

Vector ViewMetric::grad_b_from_parts(const Vector& q_a, const Vector& q_b,
                                     double inner, double norm_a,
                                     double norm_b) {
  if (norm_a <= kDegenerateNormTol || norm_b <= kDegenerateNormTol) {
    throw DegenerateVector("distance grad: vector in the kernel null space");
  }
  return -q_a / (norm_a * norm_b) +
         inner * q_b / (norm_a * norm_b * norm_b * norm_b);
}

double ViewMetric::distance(const Vector& a, const Vector& b) const {
  check_dim(a, ambient_dim(), "metric distance lhs");
  check_dim(b, ambient_dim(), "metric distance rhs");
  const Vector ca = a - mean_source();
  const Vector cb = b - mean_target();
  const Vector qa = apply_q(ca);
  const Vector qb = apply_q(cb);
  const double na = std::sqrt(std::max(0.0, ca.dot(qa)));
  const double nb = std::sqrt(std::max(0.0, cb.dot(qb)));
  return distance_from_parts(ca, qb, na, nb);
}

Vector ViewMetric::distance_grad_b(const Vector& a, const Vector& b) const {
  check_dim(a, ambient_dim(), "metric grad lhs");
  check_dim(b, ambient_dim(), "metric grad rhs");
  const Vector ca = a - mean_source();
  const Vector cb = b - mean_target();
  const Vector qa = apply_q(ca);
  const Vector qb = apply_q(cb);
  const double na = std::sqrt(std::max(0.0, ca.dot(qa)));
  const double nb = std::sqrt(std::max(0.0, cb.dot(qb)));
  return grad_b_from_parts(qa, qb, ca.dot(qb), na, nb);
}

GeodesicFlowKernel GeodesicFlowKernel::build(
    const Subspace& source, const Subspace& target, double small_angle_eps,
    const Matrix* precomputed_complement) {
  Matrix complement = precomputed_complement
                          ? *precomputed_complement
                          : orthogonal_complement(source);
  PrincipalAngles pa = principal_angles(source, target, &complement);
  const Eigen::Index n = pa.omegas.size();

  Vector lambda1(n), lambda2(n), lambda3(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = 2.0 * pa.omegas(i);
    if (x < small_angle_eps) {
      lambda1(i) = 2.0 - x * x / 6.0;
      lambda2(i) = -x / 2.0 + x * x * x / 24.0;
      lambda3(i) = x * x / 6.0;
    } else {
      lambda1(i) = 1.0 + std::sin(x) / x;
      lambda2(i) = (std::cos(x) - 1.0) / x;
      lambda3(i) = 1.0 - std::sin(x) / x;
    }
  }

  GeodesicFlowKernel k;
  k.source_ = source;
  k.complement_ = std::move(complement);
  k.u1_ = std::move(pa.u1);
  k.u2_ = std::move(pa.u2);
  k.v_ = std::move(pa.v);
  k.omegas_ = std::move(pa.omegas);
  k.lambda1_ = std::move(lambda1);
  k.lambda2_ = std::move(lambda2);
  k.lambda3_ = std::move(lambda3);
  k.mean_s_ = source.mean;
  k.mean_t_ = target.mean;

  // Q = [Ps U1  R U2] [L1 L2; L2 L3] [.]' assembled blockwise, then
  // symmetrized to remove round-off asymmetry.
  const Matrix a = source.basis * k.u1_;   // D x N
  const Matrix b = k.complement_ * k.u2_;  // D x N
  const Matrix al1 = a * k.lambda1_.asDiagonal();
  const Matrix al2 = a * k.lambda2_.asDiagonal();
  const Matrix bl3 = b * k.lambda3_.asDiagonal();
  Matrix q = al1 * a.transpose() + al2 * b.transpose() +
             b * al2.transpose() + bl3 * b.transpose();
  k.q_ = 0.5 * (q + q.transpose());
  return k;
}

Matrix GeodesicFlowKernel::flow_subspace(double nu) const {
  if (!(nu >= 0.0 && nu <= 1.0)) {
    throw DomainError("flow_subspace: nu must lie in [0,1], got " +
                      std::to_string(nu));
  }
  const Eigen::Index n = omegas_.size();
  Vector gamma(n), sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gamma(i) = std::cos(nu * omegas_(i));
    sigma(i) = std::sin(nu * omegas_(i));
  }
  return source_.basis * (u1_ * gamma.asDiagonal()) -
         complement_ * (u2_ * sigma.asDiagonal());
}

double GeodesicFlowKernel::inner(const Vector& a, const Vector& b) const {
  check_dim(a, ambient_dim(), "gfk inner lhs");
  check_dim(b, ambient_dim(), "gfk inner rhs");
  return (a - mean_s_).dot(q_ * (b - mean_t_));
}

double GeodesicFlowKernel::q_norm_source(const Vector& a) const {
  check_dim(a, ambient_dim(), "gfk q_norm_source");
  const Vector c = a - mean_s_;
  return std::sqrt(std::max(0.0, c.dot(q_ * c)));
}

double GeodesicFlowKernel::q_norm_target(const Vector& b) const {
  check_dim(b, ambient_dim(), "gfk q_norm_target");
  const Vector c = b - mean_t_;
  return std::sqrt(std::max(0.0, c.dot(q_ * c)));
}

Matrix quadrature_q(const Subspace& source, const Subspace& target,
                    int n_points) {
  if (n_points < 3 || n_points % 2 == 0) {
    throw DomainError("quadrature_q: n_points must be odd and >= 3");
  }
  const GeodesicFlowKernel k = GeodesicFlowKernel::build(source, target);
  const double h = 1.0 / (n_points - 1);
  Matrix acc = Matrix::Zero(k.ambient_dim(), k.ambient_dim());
  for (int i = 0; i < n_points; ++i) {
    const Matrix pi = k.flow_subspace(i * h);
    const double w =
        (i == 0 || i == n_points - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc.noalias() += w * (pi * pi.transpose());
  }
  // Factor 2 matches the closed form's normalization (Q = 2 P P' at omega=0).
  return (2.0 * h / 3.0) * acc;
}

}  // namespace crossview
