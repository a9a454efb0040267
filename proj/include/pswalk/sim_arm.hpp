#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pswalk/chain.hpp"

// Planar 3-dof arm tracking a vertical line with operational-space control,
// with the Jacobian-derivative feedforward switchable so its contribution to
// tracking accuracy can be measured in isolation.
namespace pswalk::sim {

struct ArmTrackConfig {
  std::vector<double> lengths{0.45, 0.45, 0.3};
  std::vector<double> masses{2.0, 2.0, 1.0};
  double line_x = 0.62;       // fixed horizontal coordinate of the line
  double amplitude = 0.23;    // vertical half-stroke, meters
  double omega = 4.0 * M_PI;  // stroke angular frequency, rad/s (2 Hz)
  double duration = 2.0;      // seconds
  double control_dt = 1e-3;   // controller tick, zero-order-hold torque
  double plant_dt = 1e-4;     // RK4 substep
  double kp = 100.0;          // task stiffness
  double kd = 20.0;           // task damping
  double posture_kd = 4.0;    // joint damping inside the task null space
};

struct ArmTrackSample {
  double t = 0.0;
  Eigen::Vector2d x = Eigen::Vector2d::Zero();      // tip position
  Eigen::Vector2d x_des = Eigen::Vector2d::Zero();  // commanded position
};

struct ArmTrackResult {
  bool used_jdot = false;
  double rms_error = 0.0;  // over control ticks, both axes pooled
  double max_error = 0.0;
  std::vector<ArmTrackSample> samples;  // one per control tick
};

// Runs the closed loop: operational-space tracking task plus null-space
// joint damping, torques held over each control tick, plant integrated by
// RK4. The initial pose places the tip exactly on the line's midpoint at
// rest, so the static (amplitude = 0) case starts with zero error.
ArmTrackResult manipulator_tracking(bool use_jdot,
                                    const ArmTrackConfig& cfg = {});

}  // namespace pswalk::sim
