#include "pswalk/lipm.hpp"

#include <cassert>
#include <cmath>

namespace pswalk::lipm {

LipmParams LipmParams::from_height(double h, double g) {
  assert(h > 0.0 && g > 0.0);
  LipmParams p;
  p.height_h = h;
  p.gravity_g = g;
  p.omega = std::sqrt(g / h);
  return p;
}

const char* to_string(LipmError e) {
  switch (e) {
    case LipmError::DegenerateTrajectory: return "DegenerateTrajectory";
    case LipmError::NoIntersection: return "NoIntersection";
    case LipmError::UnreachablePosition: return "UnreachablePosition";
    case LipmError::DegenerateTiming: return "DegenerateTiming";
  }
  return "?";
}

const char* to_string(PlanStage s) {
  switch (s) {
    case PlanStage::SwitchingPosition: return "SwitchingPosition";
    case PlanStage::SwitchVelocity: return "SwitchVelocity";
    case PlanStage::SwitchTime: return "SwitchTime";
    case PlanStage::ApexTime: return "ApexTime";
    case PlanStage::LateralPlacement: return "LateralPlacement";
    case PlanStage::Consistency: return "Consistency";
  }
  return "?";
}

// x(t) = A e^{wt} + B e^{-wt} + p with A, B fixed by the state at t = 0.
static void orbit_coeffs(const PendulumState1D& s0, double p, double w,
                         double* A, double* B) {
  *A = 0.5 * ((s0.x - p) + s0.xdot / w);
  *B = 0.5 * ((s0.x - p) - s0.xdot / w);
}

PendulumState1D com_state_at(const PendulumState1D& s0, double p, double t,
                             const LipmParams& params) {
  const double w = params.omega;
  double A, B;
  orbit_coeffs(s0, p, w, &A, &B);
  const double ep = std::exp(w * t);
  const double em = 1.0 / ep;
  return {A * ep + B * em + p, w * (A * ep - B * em)};
}

Result<double, LipmError> time_to_state(const PendulumState1D& s0,
                                        const PendulumState1D& target,
                                        double p, const LipmParams& params) {
  const double w = params.omega;
  double A, B;
  orbit_coeffs(s0, p, w, &A, &B);
  if (A == 0.0) return LipmError::DegenerateTrajectory;
  const double arg = (target.x + target.xdot / w - p) / (2.0 * A);
  if (arg <= 0.0) return LipmError::DegenerateTrajectory;
  return std::log(arg) / w;
}

Result<double, LipmError> velocity_at_position(const PendulumState1D& s0,
                                               double p, double x, int sign,
                                               const LipmParams& params) {
  const double w2 = params.omega * params.omega;
  const double dx = x - p;
  const double dx0 = s0.x - p;
  const double radicand = w2 * (dx * dx - dx0 * dx0) + s0.xdot * s0.xdot;
  if (radicand < 0.0) return LipmError::UnreachablePosition;
  return (sign >= 0 ? 1.0 : -1.0) * std::sqrt(radicand);
}

Result<double, LipmError> switching_position(const PendulumState1D& s1,
                                             double p1,
                                             const PendulumState1D& s2,
                                             double p2,
                                             const LipmParams& params) {
  if (p1 == p2) return LipmError::NoIntersection;
  const double w2 = params.omega * params.omega;
  const double d1 = s1.x - p1;
  const double d2 = s2.x - p2;
  const double c =
      d1 * d1 - d2 * d2 + (s2.xdot * s2.xdot - s1.xdot * s1.xdot) / w2;
  return 0.5 * (c / (p2 - p1) + (p1 + p2));
}

Result<double, LipmError> lateral_placement(const PendulumState1D& y_sw,
                                            double ydot_des, double t_apex,
                                            const LipmParams& params) {
  if (t_apex <= 0.0) return LipmError::DegenerateTiming;
  const double w = params.omega;
  const double ep = std::exp(w * t_apex);
  const double em = 1.0 / ep;
  const double c =
      0.5 * w * ((y_sw.x + y_sw.xdot / w) * ep - (y_sw.x - y_sw.xdot / w) * em);
  const double d = 0.5 * w * (em - ep);  // < 0 for t_apex > 0
  return (ydot_des - c) / d;
}

Result<StepPlan, PlanError> plan_step(const PendulumState1D& x1,
                                      const PendulumState1D& y1,
                                      const StepAction& action,
                                      const LipmParams& params,
                                      const Tolerances& tol) {
  // Stance exchange state: where the current sagittal orbit meets the orbit
  // whose apex is (action.p_x, action.xdot_apex_des).
  const PendulumState1D next_apex_x{action.p_x, action.xdot_apex_des};
  auto x_sw = switching_position(x1, 0.0, next_apex_x, action.p_x, params);
  if (!x_sw)
    return PlanError{PlanStage::SwitchingPosition, x_sw.error()};

  auto xdot_sw = velocity_at_position(x1, 0.0, x_sw.value(), +1, params);
  if (!xdot_sw)
    return PlanError{PlanStage::SwitchVelocity, xdot_sw.error()};
  const PendulumState1D sw{x_sw.value(), xdot_sw.value()};

  auto t_switch = time_to_state(x1, sw, 0.0, params);
  if (!t_switch)
    return PlanError{PlanStage::SwitchTime, t_switch.error()};
  if (t_switch.value() <= 0.0)
    return PlanError{PlanStage::SwitchTime, LipmError::DegenerateTiming};

  auto t_apex = time_to_state(sw, next_apex_x, action.p_x, params);
  if (!t_apex)
    return PlanError{PlanStage::ApexTime, t_apex.error()};
  if (t_apex.value() <= 0.0)
    return PlanError{PlanStage::ApexTime, LipmError::DegenerateTiming};

  const PendulumState1D y_sw = com_state_at(y1, 0.0, t_switch.value(), params);
  auto p_y =
      lateral_placement(y_sw, action.ydot_apex_des, t_apex.value(), params);
  if (!p_y)
    return PlanError{PlanStage::LateralPlacement, p_y.error()};

  // Internal consistency: the lateral orbit must reproduce the requested apex
  // velocity and the sagittal chain must land on the commanded apex.
  const PendulumState1D y_end =
      com_state_at(y_sw, p_y.value(), t_apex.value(), params);
  const PendulumState1D x_end =
      com_state_at(sw, action.p_x, t_apex.value(), params);
  const double scale =
      1.0 + std::abs(action.ydot_apex_des) + std::abs(action.xdot_apex_des);
  if (std::abs(y_end.xdot - action.ydot_apex_des) >
          tol.velocity_continuity * scale ||
      std::abs(x_end.x - action.p_x) > tol.velocity_continuity * scale * 10.0)
    return PlanError{PlanStage::Consistency, LipmError::DegenerateTrajectory};

  StepPlan plan;
  plan.t_switch = t_switch.value();
  plan.t_apex = t_apex.value();
  plan.p_y = p_y.value();
  plan.switch_state_x = sw;
  plan.switch_state_y = y_sw;
  // Hand off to the next frame: origin moves to the new foot and the lateral
  // axis flips, so the swing side is +y again for the following step.
  plan.next_apex = ApexState{p_y.value() - y_end.x, action.xdot_apex_des,
                             -action.ydot_apex_des};
  return plan;
}

Result<StepPlan, PlanError> psp_step(const ApexState& apex,
                                     const StepAction& action,
                                     const LipmParams& params,
                                     const Tolerances& tol) {
  return plan_step({0.0, apex.xdot_apex}, {apex.y_apex, apex.ydot_apex},
                   action, params, tol);
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

LocalFrame2D make_frame(const Eigen::Vector2d& origin, double heading) {
  return LocalFrame2D{origin, wrap_angle(heading)};
}

static Eigen::Matrix2d rot2(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

LocalState2D reproject_frame(const Eigen::Vector2d& pos_world,
                             const Eigen::Vector2d& vel_world,
                             const LocalFrame2D& frame) {
  const Eigen::Matrix2d rt = rot2(frame.heading).transpose();
  return {rt * (pos_world - frame.origin), rt * vel_world};
}

LocalState2D frame_to_world(const Eigen::Vector2d& pos_local,
                            const Eigen::Vector2d& vel_local,
                            const LocalFrame2D& frame) {
  const Eigen::Matrix2d r = rot2(frame.heading);
  return {frame.origin + r * pos_local, r * vel_local};
}

}  // namespace pswalk::lipm
