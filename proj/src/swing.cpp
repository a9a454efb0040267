#include "pswalk/swing.hpp"

#include <algorithm>
#include <cmath>

namespace pswalk::sim {
namespace {

double sdiv(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

// All cubic basis values and their first two derivatives at u. Cox-de Boor
// over the full index range; sizes are tiny so the dense sweep is fine.
struct CubicBasis {
  Eigen::VectorXd n;    // N_{i,3}(u)
  Eigen::VectorXd dn;   // d/du
  Eigen::VectorXd ddn;  // d2/du2
};

CubicBasis cubic_basis(const std::vector<double>& k, double u) {
  const int m = static_cast<int>(k.size()) - 1;
  const double last = k[m];
  Eigen::VectorXd n0 = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    const bool inside = (u >= k[i] && u < k[i + 1]) ||
                        (u == last && k[i] < k[i + 1] && k[i + 1] == last);
    n0[i] = inside ? 1.0 : 0.0;
  }
  auto raise = [&k](const Eigen::VectorXd& lower, int p) {
    Eigen::VectorXd out(lower.size() - 1);
    for (int i = 0; i < out.size(); ++i)
      out[i] = sdiv(lower[i], k[i + p] - k[i]) -
               sdiv(lower[i + 1], k[i + p + 1] - k[i + 1]);
    return out;
  };
  Eigen::VectorXd n1(m - 1), n2(m - 2);
  for (int i = 0; i < m - 1; ++i)
    n1[i] = sdiv((u - k[i]) * n0[i], k[i + 1] - k[i]) +
            sdiv((k[i + 2] - u) * n0[i + 1], k[i + 2] - k[i + 1]);
  for (int i = 0; i < m - 2; ++i)
    n2[i] = sdiv((u - k[i]) * n1[i], k[i + 2] - k[i]) +
            sdiv((k[i + 3] - u) * n1[i + 1], k[i + 3] - k[i + 1]);
  CubicBasis b;
  b.n.resize(m - 3);
  for (int i = 0; i < m - 3; ++i)
    b.n[i] = sdiv((u - k[i]) * n2[i], k[i + 3] - k[i]) +
             sdiv((k[i + 4] - u) * n2[i + 1], k[i + 4] - k[i + 1]);
  b.dn = 3.0 * raise(n2, 3);
  const Eigen::VectorXd dn2 = 2.0 * raise(n1, 2);
  b.ddn = 3.0 * raise(dn2, 3);
  return b;
}

std::vector<double> clamped_knots(int n_ctrl, double t0, double t1) {
  std::vector<double> k(n_ctrl + 4);
  const int spans = n_ctrl - 3;
  for (int i = 0; i < 4; ++i) {
    k[i] = t0;
    k[n_ctrl + i] = t1;
  }
  for (int i = 1; i < spans; ++i)
    k[3 + i] = t0 + (t1 - t0) * static_cast<double>(i) / spans;
  return k;
}

constexpr int kCtrlCount = 9;

}  // namespace

Eigen::Vector3d SwingSpline::position(double t) const {
  if (t_end <= t_begin) return ctrl.col(0);
  const double u = std::clamp(t, t_begin, t_end);
  return ctrl * cubic_basis(knots, u).n;
}

Eigen::Vector3d SwingSpline::velocity(double t) const {
  if (t_end <= t_begin || t < t_begin || t > t_end)
    return Eigen::Vector3d::Zero();
  return ctrl * cubic_basis(knots, t).dn;
}

Eigen::Vector3d SwingSpline::acceleration(double t) const {
  if (t_end <= t_begin || t < t_begin || t > t_end)
    return Eigen::Vector3d::Zero();
  return ctrl * cubic_basis(knots, t).ddn;
}

SwingSpline swing_spline(const Eigen::Vector2d& from, const Eigen::Vector2d& to,
                         double apex_height, double duration) {
  SwingSpline s;
  s.t_begin = 0.0;
  s.t_end = duration;
  s.knots = clamped_knots(kCtrlCount, 0.0, duration);
  s.ctrl.resize(3, kCtrlCount);
  // Doubled end points pin both endpoint velocities to zero; the interior
  // ground-plane points spread evenly so the horizontal motion is one smooth
  // sweep.
  const double bump[kCtrlCount] = {0, 0, 0.6, 1.0, 1.2, 1.0, 0.6, 0, 0};
  for (int i = 0; i < kCtrlCount; ++i) {
    const double f = std::clamp((i - 1.0) / (kCtrlCount - 3.0), 0.0, 1.0);
    s.ctrl.col(i).head<2>() = from + f * (to - from);
    s.ctrl.col(i).z() = bump[i];
  }
  // The symmetric bump peaks at mid-swing; rescale it so the curve value
  // there equals apex_height exactly.
  const double mid = s.position(0.5 * duration).z();
  s.ctrl.row(2) *= mid > 0.0 ? apex_height / mid : 0.0;
  return s;
}

SwingSpline retarget(const SwingSpline& spline, double t_now,
                     const Eigen::Vector2d& new_to) {
  const double t1 = spline.t_end;
  if (t_now > t1 - 1e-9) {
    // Nothing left of the swing; land in place.
    SwingSpline s;
    s.t_begin = t_now;
    s.t_end = t_now;
    s.knots.assign(8, t_now);
    s.ctrl.resize(3, 4);
    s.ctrl.colwise() = Eigen::Vector3d(new_to.x(), new_to.y(), 0.0);
    return s;
  }
  t_now = std::max(t_now, spline.t_begin);

  SwingSpline s;
  s.t_begin = t_now;
  s.t_end = t1;
  s.knots = clamped_knots(kCtrlCount, t_now, t1);
  s.ctrl.resize(3, kCtrlCount);

  // At a clamped start only the first basis function carries position, the
  // first two carry velocity and the first three acceleration, so the splice
  // conditions resolve one control point at a time.
  const CubicBasis b = cubic_basis(s.knots, t_now);
  const Eigen::Vector3d p = spline.position(t_now);
  const Eigen::Vector3d v = spline.velocity(t_now);
  const Eigen::Vector3d a = spline.acceleration(t_now);
  s.ctrl.col(0) = p;
  s.ctrl.col(1) = (v - b.dn[0] * s.ctrl.col(0)) / b.dn[1];
  s.ctrl.col(2) =
      (a - b.ddn[0] * s.ctrl.col(0) - b.ddn[1] * s.ctrl.col(1)) / b.ddn[2];

  const Eigen::Vector3d land(new_to.x(), new_to.y(), 0.0);
  s.ctrl.col(kCtrlCount - 1) = land;
  s.ctrl.col(kCtrlCount - 2) = land;
  for (int i = 3; i < kCtrlCount - 2; ++i) {
    const double f = (i - 2.0) / (kCtrlCount - 4.0);
    s.ctrl.col(i).head<2>() =
        s.ctrl.col(2).head<2>() + f * (new_to - s.ctrl.col(2).head<2>());
    // Keep the height profile the old spline would have flown.
    s.ctrl.col(i).z() = spline.position(t_now + f * (t1 - t_now)).z();
  }
  return s;
}

}  // namespace pswalk::sim
