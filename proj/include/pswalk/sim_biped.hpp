#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pswalk/chain.hpp"

// Closed-loop balance scenario on the planar walker: the whole-body
// controller holds a CoM setpoint in double support at 1 kHz while the plant
// integrates the constrained dynamics. Exercises the full force-QP ->
// momentum-task -> hierarchy -> torque pipeline against an independent plant.
namespace pswalk::sim {

struct BipedScenario {
  double duration = 1.5;     // seconds
  double control_dt = 1e-3;  // controller tick
  double plant_dt = 1e-4;    // RK4 substep
  double stance_half = 0.15; // fore/aft foot separation from the midline
  double crouch = 0.72;      // pelvis height (knees bent, away from singular)
  double kp_com = 200.0;
  double kd_com = 28.0;
  double kp_att = 100.0;      // pitch hold, N*m per radian
  double kd_ang = 8.0;       // centroidal angular momentum damping
  double kp_posture = 50.0;  // actuated-joint hold inside the null space
  double kd_posture = 10.0;
  double mu = 0.65;
  bool gravity_on = true;

  // External push on the torso, world frame, active on [start, start+duration).
  Eigen::Vector3d push_force = Eigen::Vector3d::Zero();
  double push_start = 0.0;
  double push_duration = 0.0;

  // Feedforward CoM acceleration pulse (the "aggressive command" path that
  // drives the force QP into friction relaxation).
  Eigen::Vector3d accel_cmd = Eigen::Vector3d::Zero();
  double accel_start = 0.0;
  double accel_duration = 0.0;
};

struct BipedSample {
  double t = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Vector3d com_err = Eigen::Vector3d::Zero();  // setpoint minus actual
  double fz_right = 0.0, fz_left = 0.0;  // QP normal forces
  double tau_max = 0.0;                  // largest torque magnitude this tick
  bool relaxed_mu = false;
};

struct BipedTrace {
  std::vector<BipedSample> samples;  // one per control tick
  bool controller_failed = false;    // QP or torque solve gave up
  double fail_time = 0.0;
  double relaxed_mu_time = 0.0;      // total seconds with the relaxed cone
  double max_com_err = 0.0;          // over the whole run
  double settled_com_err = 0.0;      // max over the last third of the run
  Eigen::VectorXd q_final, qdot_final;
};

// Stands the walker in a split stance (feet at +-stance_half), holds the
// initial CoM and posture, and runs the scenario. Deterministic.
BipedTrace fixture_biped_loop(const BipedScenario& scenario = {});

}  // namespace pswalk::sim
