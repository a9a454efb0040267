#pragma once

#include <Eigen/Dense>

// Rigid-body spatial algebra on SE(3). Twists are 6-vectors [angular; linear]
// throughout; wrenches and momenta pair with them under the plain dot
// product, so frame changes use adjoint(T) for twists and adjoint(T)^T for
// the dual quantities.

namespace pswalk::spatial {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

struct SpatialTransform {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();

  static SpatialTransform identity() { return {}; }

  SpatialTransform inverse() const { return {R.transpose(), -(R.transpose() * p)}; }

  SpatialTransform operator*(const SpatialTransform& o) const {
    return {R * o.R, R * o.p + p};
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return R * x + p; }

  // Orthonormal with positive determinant.
  bool valid(double tol = 1e-10) const;
};

struct SpatialVelocity {
  Eigen::Vector3d angular = Eigen::Vector3d::Zero();
  Eigen::Vector3d linear = Eigen::Vector3d::Zero();

  Vec6 vec() const {
    Vec6 v;
    v << angular, linear;
    return v;
  }
  static SpatialVelocity from_vec(const Vec6& v) {
    return {v.head<3>(), v.tail<3>()};
  }
};

// Twist change of frame: [[R, 0], [p^x R, R]].
Mat6 adjoint(const SpatialTransform& T);

// Small adjoint ad_V = [[w^x, 0], [v^x, w^x]]; satisfies
// d/dt Ad_{T(t)} = Ad_T ad_V for V = T^-1 Tdot.
Mat6 lie_bracket(const SpatialVelocity& V);
inline Mat6 lie_bracket(const Vec6& v) {
  return lie_bracket(SpatialVelocity::from_vec(v));
}

// exp([S] q) for a unit screw: pure rotation axis (|w| = 1, Rodrigues) or
// pure translation (w = 0).
SpatialTransform twist_exp(const Vec6& S, double q);

}  // namespace pswalk::spatial
