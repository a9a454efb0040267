#pragma once

#include <Eigen/Dense>

#include "pswalk/result.hpp"

namespace pswalk::lipm {

// Point-mass pendulum with constant CoM height h: xddot = w^2 (x - p) with
// w = sqrt(g/h). Closed-form trajectories in each axis; the planner below
// chains sagittal and lateral solutions into one walking step.
struct LipmParams {
  double height_h = 1.0;
  double gravity_g = 9.81;
  double omega = 0.0;  // sqrt(gravity_g / height_h), set by from_height

  static LipmParams from_height(double h, double g = 9.81);
};

struct PendulumState1D {
  double x = 0.0;
  double xdot = 0.0;
};

// Apex = instant the CoM passes over the stance foot sagittally (x = 0 in the
// local frame). y_apex is the lateral CoM offset from the stance foot at that
// instant, in per-step mirrored coordinates (the upcoming swing side is +y).
struct ApexState {
  double y_apex = 0.0;
  double xdot_apex = 0.0;
  double ydot_apex = 0.0;
};

// One planner decision: sagittal placement of the next foot plus the desired
// CoM velocities at the next apex.
struct StepAction {
  double p_x = 0.0;
  double xdot_apex_des = 0.0;
  double ydot_apex_des = 0.0;
};

struct StepPlan {
  double t_switch = 0.0;  // time from plan state to stance exchange, > 0
  double t_apex = 0.0;    // time from stance exchange to the next apex, > 0
  double p_y = 0.0;       // lateral placement of the next foot
  PendulumState1D switch_state_x;
  PendulumState1D switch_state_y;
  ApexState next_apex;  // in the next (mirrored) local frame; x is 0 there
};

// Per-step planning frame: origin at the stance foot, x axis along the
// walking direction. heading is normalized to (-pi, pi].
struct LocalFrame2D {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double heading = 0.0;
};

struct LocalState2D {
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();
};

enum class LipmError {
  DegenerateTrajectory,  // time solve undefined (A == 0 or log arg <= 0)
  NoIntersection,        // pivots coincide, no switching point
  UnreachablePosition,   // negative radicand in the velocity solve
  DegenerateTiming,      // non-positive time where positive time is required
};

// Planning stage that failed, reported inside PlanError.
enum class PlanStage {
  SwitchingPosition,
  SwitchVelocity,
  SwitchTime,
  ApexTime,
  LateralPlacement,
  Consistency,
};

struct PlanError {
  PlanStage stage;
  LipmError cause;
};

const char* to_string(LipmError e);
const char* to_string(PlanStage s);

// Numerical guards used inside the planner. Tests may tighten or relax them;
// runtime config exposes them unchanged.
struct Tolerances {
  double round_trip_time = 1e-9;
  double velocity_continuity = 1e-9;
  double frame_isometry = 1e-12;
};

// State at time t (any sign) on the pivot-p trajectory through s0 at t = 0.
PendulumState1D com_state_at(const PendulumState1D& s0, double p, double t,
                             const LipmParams& params);

// Time at which the pivot-p trajectory through s0 reaches target. Unique when
// defined; errors when the forward branch coefficient vanishes or the log
// argument is non-positive.
Result<double, LipmError> time_to_state(const PendulumState1D& s0,
                                        const PendulumState1D& target,
                                        double p, const LipmParams& params);

// Signed velocity at position x on the orbit through s0 (sign = +1 picks the
// forward branch). Errors when x is not on the orbit.
Result<double, LipmError> velocity_at_position(const PendulumState1D& s0,
                                               double p, double x, int sign,
                                               const LipmParams& params);

// Position where the orbit through (s1, p1) and the orbit through (s2, p2)
// have equal speed, i.e. where a stance exchange preserves the CoM state.
Result<double, LipmError> switching_position(const PendulumState1D& s1,
                                             double p1,
                                             const PendulumState1D& s2,
                                             double p2,
                                             const LipmParams& params);

// Lateral foot placement that steers the trajectory through y_sw to lateral
// velocity ydot_des after exactly t_apex seconds.
Result<double, LipmError> lateral_placement(const PendulumState1D& y_sw,
                                            double ydot_des, double t_apex,
                                            const LipmParams& params);

// Full step plan from a general CoM state in the current local frame (stance
// foot at the origin). Stages follow the planner pipeline: switching position,
// switch velocity and times, lateral propagation and placement.
Result<StepPlan, PlanError> plan_step(const PendulumState1D& x1,
                                      const PendulumState1D& y1,
                                      const StepAction& action,
                                      const LipmParams& params,
                                      const Tolerances& tol = {});

// Step plan from an apex state (sagittal x = 0). next_apex comes back in the
// next frame with the lateral axis mirrored, so steady gaits are fixed points.
Result<StepPlan, PlanError> psp_step(const ApexState& apex,
                                     const StepAction& action,
                                     const LipmParams& params,
                                     const Tolerances& tol = {});

// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

LocalFrame2D make_frame(const Eigen::Vector2d& origin, double heading);

// World state expressed in the frame (pure isometry, no mirroring).
LocalState2D reproject_frame(const Eigen::Vector2d& pos_world,
                             const Eigen::Vector2d& vel_world,
                             const LocalFrame2D& frame);

// Inverse of reproject_frame.
LocalState2D frame_to_world(const Eigen::Vector2d& pos_local,
                            const Eigen::Vector2d& vel_local,
                            const LocalFrame2D& frame);

}  // namespace pswalk::lipm
