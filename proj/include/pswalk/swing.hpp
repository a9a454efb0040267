#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pswalk::sim {

// Swing-foot trajectory as a clamped cubic B-spline in (ground x, ground y,
// height z). Cubic pieces over simple interior knots are C2 everywhere by
// construction, whatever the control points, so retargeting only has to match
// position/velocity/acceleration at the splice instant.
struct SwingSpline {
  Eigen::Matrix3Xd ctrl;       // control points, one per column
  std::vector<double> knots;   // clamped uniform, ctrl.cols() + 4 entries
  double t_begin = 0.0;
  double t_end = 0.0;

  double duration() const { return t_end - t_begin; }

  // Evaluation clamps t into [t_begin, t_end]; the foot holds its endpoint
  // outside the swing window.
  Eigen::Vector3d position(double t) const;
  Eigen::Vector3d velocity(double t) const;
  Eigen::Vector3d acceleration(double t) const;
};

// Swing from lift-off to touch-down over [0, duration]. Both ends have zero
// velocity; the height profile is symmetric and passes through apex_height
// exactly at mid-swing. from == to with apex 0 degenerates to a constant.
SwingSpline swing_spline(const Eigen::Vector2d& from, const Eigen::Vector2d& to,
                         double apex_height, double duration);

// New spline on [t_now, t_end] that leaves the old trajectory with matching
// position, velocity and acceleration and lands at new_to (zero velocity) at
// the original touch-down time. The remaining height profile is carried over
// from the old spline.
SwingSpline retarget(const SwingSpline& spline, double t_now,
                     const Eigen::Vector2d& new_to);

}  // namespace pswalk::sim
