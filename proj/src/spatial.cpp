#include "pswalk/spatial.hpp"

#include <cmath>

namespace pswalk::spatial {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

bool SpatialTransform::valid(double tol) const {
  if (!R.allFinite() || !p.allFinite()) return false;
  if ((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >
      tol)
    return false;
  return R.determinant() > 0.0;
}

Mat6 adjoint(const SpatialTransform& T) {
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = T.R;
  ad.bottomRightCorner<3, 3>() = T.R;
  ad.bottomLeftCorner<3, 3>() = skew(T.p) * T.R;
  return ad;
}

Mat6 lie_bracket(const SpatialVelocity& V) {
  Mat6 ad = Mat6::Zero();
  const Eigen::Matrix3d wx = skew(V.angular);
  ad.topLeftCorner<3, 3>() = wx;
  ad.bottomRightCorner<3, 3>() = wx;
  ad.bottomLeftCorner<3, 3>() = skew(V.linear);
  return ad;
}

SpatialTransform twist_exp(const Vec6& S, double q) {
  const Eigen::Vector3d w = S.head<3>();
  const Eigen::Vector3d v = S.tail<3>();
  const double wn = w.norm();
  if (wn < 1e-12) return {Eigen::Matrix3d::Identity(), v * q};

  // Rodrigues about the (unit) axis, plus the screw translation term.
  const Eigen::Vector3d a = w / wn;
  const double th = q * wn;
  const Eigen::Matrix3d ax = skew(a);
  const double s = std::sin(th), c = std::cos(th);
  const Eigen::Matrix3d R =
      Eigen::Matrix3d::Identity() + s * ax + (1.0 - c) * ax * ax;
  const Eigen::Vector3d vn = v / wn;
  const Eigen::Vector3d p =
      (Eigen::Matrix3d::Identity() * th + (1.0 - c) * ax + (th - s) * ax * ax) *
      vn;
  return {R, p};
}

}  // namespace pswalk::spatial
