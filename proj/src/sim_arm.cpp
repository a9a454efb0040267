#include "pswalk/sim_arm.hpp"

#include <cmath>

#include "pswalk/wblc.hpp"

namespace pswalk::sim {

namespace {

// Damped-least-squares inverse kinematics for the tip. Deterministic: fixed
// seed pose, fixed damping, iterate to stagnation.
Eigen::VectorXd solve_start_pose(const chain::KinematicChain& arm,
                                 const chain::PointRef& tip,
                                 const Eigen::Vector2d& target) {
  Eigen::VectorXd q(3);
  q << 0.5, -1.0, 0.5;  // elbow-down seed keeps the solve away from full extension
  for (int it = 0; it < 200; ++it) {
    const auto fk = chain::forward_kinematics(arm, q);
    const Eigen::Vector2d err =
        target - chain::point_position(fk, tip).head<2>();
    if (err.norm() < 1e-13) break;
    const Eigen::MatrixXd J =
        chain::point_jacobian(arm, fk, tip).middleRows(3, 2);
    const Eigen::Matrix2d core =
        J * J.transpose() + 1e-8 * Eigen::Matrix2d::Identity();
    q += J.transpose() * core.ldlt().solve(err);
  }
  return q;
}

}  // namespace

ArmTrackResult manipulator_tracking(bool use_jdot, const ArmTrackConfig& cfg) {
  const chain::KinematicChain arm = chain::planar_arm(cfg.lengths, cfg.masses);
  const chain::PointRef tip{arm.dof() - 1,
                            Eigen::Vector3d(cfg.lengths.back(), 0, 0)};
  const Eigen::Vector3d gravity(0, -9.81, 0);

  Eigen::VectorXd q =
      solve_start_pose(arm, tip, Eigen::Vector2d(cfg.line_x, 0.0));
  // Launch on the line: minimum-norm joint rates matching the commanded tip
  // velocity at t = 0, so the series measures tracking, not spin-up.
  Eigen::VectorXd qdot = Eigen::VectorXd::Zero(3);
  {
    const auto fk0 = chain::forward_kinematics(arm, q);
    const Eigen::MatrixXd J0 =
        chain::point_jacobian(arm, fk0, tip).middleRows(3, 2);
    const Eigen::Vector2d v0(0.0, cfg.amplitude * cfg.omega);
    qdot = J0.transpose() *
           (J0 * J0.transpose() + 1e-12 * Eigen::Matrix2d::Identity())
               .ldlt()
               .solve(v0);
  }

  ArmTrackResult out;
  out.used_jdot = use_jdot;
  const int n_ticks = static_cast<int>(std::round(cfg.duration / cfg.control_dt));
  const int substeps =
      std::max(1, static_cast<int>(std::round(cfg.control_dt / cfg.plant_dt)));
  const double h = cfg.control_dt / substeps;
  out.samples.reserve(n_ticks);

  double acc_sq = 0.0;
  for (int tick = 0; tick < n_ticks; ++tick) {
    const double t = tick * cfg.control_dt;
    const double s = std::sin(cfg.omega * t), c = std::cos(cfg.omega * t);
    const Eigen::Vector2d x_des(cfg.line_x, cfg.amplitude * s);
    const Eigen::Vector2d v_des(0.0, cfg.amplitude * cfg.omega * c);
    const Eigen::Vector2d a_ff(0.0, -cfg.amplitude * cfg.omega * cfg.omega * s);

    const auto fk = chain::forward_kinematics(arm, q);
    const Eigen::MatrixXd J =
        chain::point_jacobian(arm, fk, tip).middleRows(3, 2);
    const Eigen::Vector2d x = chain::point_position(fk, tip).head<2>();
    const Eigen::Vector2d v = J * qdot;

    wblc::Task track;
    track.jacobian = J;
    track.jdot_qdot =
        use_jdot
            ? Eigen::VectorXd(
                  (chain::point_jacobian_dot(arm, q, qdot, tip).middleRows(3, 2) *
                   qdot))
            : Eigen::VectorXd(Eigen::VectorXd::Zero(2));
    track.desired_acc = a_ff + cfg.kd * (v_des - v) + cfg.kp * (x_des - x);
    track.label = "tip";

    wblc::Task posture;
    posture.jacobian = Eigen::MatrixXd::Identity(3, 3);
    posture.jdot_qdot = Eigen::VectorXd::Zero(3);
    posture.desired_acc = -cfg.posture_kd * qdot;
    posture.label = "damping";

    const auto dyn = chain::joint_space_dynamics(arm, q, qdot, gravity);
    wblc::TaskHierarchy hierarchy;
    hierarchy.tasks = {track, posture};
    const auto res = wblc::resolve_hierarchy(hierarchy, dyn.A);
    const Eigen::VectorXd tau =
        chain::inverse_dynamics(arm, q, qdot, res.qddot_task, gravity);

    const double err = (x_des - x).norm();
    acc_sq += err * err;
    out.max_error = std::max(out.max_error, err);
    out.samples.push_back({t, x, x_des});

    // Plant: torque held for the whole tick, classic RK4 on (q, qdot).
    for (int k = 0; k < substeps; ++k) {
      const auto f = [&](const Eigen::VectorXd& qq, const Eigen::VectorXd& vv) {
        return chain::forward_dynamics(arm, qq, vv, tau, gravity);
      };
      const Eigen::VectorXd k1v = f(q, qdot);
      const Eigen::VectorXd k2v = f(q + 0.5 * h * qdot, qdot + 0.5 * h * k1v);
      const Eigen::VectorXd k2q = qdot + 0.5 * h * k1v;
      const Eigen::VectorXd k3v = f(q + 0.5 * h * k2q, qdot + 0.5 * h * k2v);
      const Eigen::VectorXd k3q = qdot + 0.5 * h * k2v;
      const Eigen::VectorXd k4v = f(q + h * k3q, qdot + h * k3v);
      const Eigen::VectorXd k4q = qdot + h * k3v;
      q += (h / 6.0) * (qdot + 2.0 * k2q + 2.0 * k3q + k4q);
      qdot += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
  }
  out.rms_error = std::sqrt(acc_sq / std::max(1, n_ticks));
  return out;
}

}  // namespace pswalk::sim
