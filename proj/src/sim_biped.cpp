#include "pswalk/sim_biped.hpp"

#include <cmath>

#include "pswalk/wblc.hpp"

namespace pswalk::sim {

namespace {

// Leg inverse kinematics in the x-z plane. Zero angles point both segments
// straight down; positive hip pitch swings the leg backward (-x). Knee bends
// forward (negative knee angle) so the solve never straddles the other branch.
struct LegAngles {
  double hip = 0.0, knee = 0.0;
};

LegAngles leg_ik(double px, double pz, double l1, double l2) {
  const double X = -px, Z = -pz;  // segment directions are (-sin, -cos)
  const double r2 = X * X + Z * Z;
  double ck = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  ck = std::min(1.0, std::max(-1.0, ck));
  LegAngles a;
  a.knee = -std::acos(ck);
  a.hip = std::atan2(X, Z) -
          std::atan2(l2 * std::sin(a.knee), l1 + l2 * std::cos(a.knee));
  return a;
}

// Split-stance standing configuration: pelvis at the fold height, right foot
// forward, left foot back, both soles on the ground plane.
Eigen::VectorXd stance_pose(const chain::PlanarWalker& w, double half,
                            double crouch) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(w.chain.dof());
  q[2] = crouch;
  const LegAngles right = leg_ik(half, -crouch, 0.4, 0.4);
  const LegAngles left = leg_ik(-half, -crouch, 0.4, 0.4);
  q[6] = right.hip;
  q[7] = right.knee;
  q[8] = left.hip;
  q[9] = left.knee;
  return q;
}

struct ConstraintModel {
  Eigen::MatrixXd J;       // 7 x dof
  Eigen::VectorXd stab;    // Baumgarte acceleration bias
};

// Contact and planarity constraints: each foot pinned in world x and z, plus
// the out-of-plane base coordinates (y translation, roll, yaw) locked.
// Baumgarte terms pull any drift back to the anchors.
ConstraintModel constraints(const chain::PlanarWalker& w,
                            const Eigen::VectorXd& q,
                            const Eigen::VectorXd& qdot,
                            const Eigen::Vector2d& anchor_right,
                            const Eigen::Vector2d& anchor_left) {
  const int dof = w.chain.dof();
  const auto fk = chain::forward_kinematics(w.chain, q);
  ConstraintModel m;
  m.J = Eigen::MatrixXd::Zero(7, dof);
  m.stab = Eigen::VectorXd::Zero(7);
  const double two_ab = 2.0 * 50.0, b2 = 50.0 * 50.0;  // critically damped

  int row = 0;
  const chain::PointRef feet[2] = {w.right_foot, w.left_foot};
  const Eigen::Vector2d anchors[2] = {anchor_right, anchor_left};
  for (int f = 0; f < 2; ++f) {
    const Eigen::MatrixXd Jp =
        chain::point_jacobian(w.chain, fk, feet[f]).bottomRows(3);
    const Eigen::MatrixXd Jdp =
        chain::point_jacobian_dot(w.chain, q, qdot, feet[f]).bottomRows(3);
    const Eigen::Vector3d p = chain::point_position(fk, feet[f]);
    const Eigen::Vector3d v = Jp * qdot;
    for (int axis : {0, 2}) {
      m.J.row(row) = Jp.row(axis);
      const double phi =
          p[axis] - (axis == 0 ? anchors[f][0] : anchors[f][1]);
      m.stab[row] = -(Jdp.row(axis) * qdot)(0) - two_ab * v[axis] - b2 * phi;
      ++row;
    }
  }
  for (int coord : {1, 3, 5}) {  // base y, roll, yaw
    m.J(row, coord) = 1.0;
    m.stab[row] = -two_ab * qdot[coord] - b2 * q[coord];
    ++row;
  }
  return m;
}

// Constrained forward dynamics via the KKT system
//   [A J'; J 0] [qdd; -lambda] = [Q_active - b - g; stab].
Eigen::VectorXd constrained_accel(const chain::PlanarWalker& w,
                                  const Eigen::VectorXd& q,
                                  const Eigen::VectorXd& qdot,
                                  const Eigen::VectorXd& tau_actuated,
                                  const Eigen::Vector3d& gravity,
                                  const Eigen::Vector3d& push,
                                  const ConstraintModel& cm) {
  const int dof = w.chain.dof();
  const auto dyn = chain::joint_space_dynamics(w.chain, q, qdot, gravity);
  Eigen::VectorXd rhs_top = -dyn.b - dyn.g;
  rhs_top.tail(w.chain.actuated_dof()) += tau_actuated;
  if (push.squaredNorm() > 0.0) {
    const auto fk = chain::forward_kinematics(w.chain, q);
    const chain::PointRef torso_pt{w.torso, {0, 0, 0.15}};
    rhs_top += chain::point_jacobian(w.chain, fk, torso_pt)
                   .bottomRows(3)
                   .transpose() *
               push;
  }
  const int nc = static_cast<int>(cm.J.rows());
  Eigen::MatrixXd K(dof + nc, dof + nc);
  K.setZero();
  K.topLeftCorner(dof, dof) = dyn.A;
  K.topRightCorner(dof, nc) = cm.J.transpose();
  K.bottomLeftCorner(nc, dof) = cm.J;
  Eigen::VectorXd rhs(dof + nc);
  rhs << rhs_top, cm.stab;
  return K.ldlt().solve(rhs).head(dof);
}

}  // namespace

BipedTrace fixture_biped_loop(const BipedScenario& sc) {
  const chain::PlanarWalker w = chain::planar_walker();
  const int dof = w.chain.dof();
  const int act = w.chain.actuated_dof();
  const Eigen::Vector3d gravity =
      sc.gravity_on ? Eigen::Vector3d(0, 0, -9.81) : Eigen::Vector3d::Zero();

  Eigen::VectorXd q = stance_pose(w, sc.stance_half, sc.crouch);
  Eigen::VectorXd qdot = Eigen::VectorXd::Zero(dof);
  const Eigen::VectorXd posture_ref = q.tail(act);

  const auto fk0 = chain::forward_kinematics(w.chain, q);
  const Eigen::Vector3d p_r0 = chain::point_position(fk0, w.right_foot);
  const Eigen::Vector3d p_l0 = chain::point_position(fk0, w.left_foot);
  const Eigen::Vector2d anchor_r(p_r0.x(), p_r0.z());
  const Eigen::Vector2d anchor_l(p_l0.x(), p_l0.z());
  const Eigen::Vector3d com_ref = chain::centroidal(w.chain, q, qdot).com_position;

  BipedTrace out;
  const int n_ticks = static_cast<int>(std::round(sc.duration / sc.control_dt));
  const int substeps =
      std::max(1, static_cast<int>(std::round(sc.control_dt / sc.plant_dt)));
  const double h = sc.control_dt / substeps;
  out.samples.reserve(n_ticks);

  for (int tick = 0; tick < n_ticks; ++tick) {
    const double t = tick * sc.control_dt;

    const auto fk = chain::forward_kinematics(w.chain, q);
    const auto model = chain::centroidal(w.chain, q, qdot);
    wblc::ContactSet cs;
    for (const auto& foot : {w.right_foot, w.left_foot}) {
      wblc::Contact contact;
      contact.position = chain::point_position(fk, foot);
      contact.jacobian = chain::point_jacobian(w.chain, fk, foot).bottomRows(3);
      contact.mu = sc.mu;
      cs.contacts.push_back(contact);
    }

    Eigen::Vector3d acc_des = sc.kp_com * (com_ref - model.com_position) -
                              sc.kd_com * model.com_velocity;
    if (t >= sc.accel_start && t < sc.accel_start + sc.accel_duration)
      acc_des += sc.accel_cmd;
    const Eigen::Vector3d F_lin = model.total_mass * (acc_des - gravity);
    // Momentum damping alone leaves the pitch attitude a random walk that
    // eventually unloads a foot; the stiffness term anchors it.
    Eigen::Vector3d F_ang = -sc.kd_ang * model.h_cm.head<3>();
    F_ang.y() += sc.kp_att * (0.0 - q[4]);

    const auto qp = wblc::reaction_force_qp(model, cs, F_lin, F_ang);
    if (!qp.ok()) {
      out.controller_failed = true;
      out.fail_time = t;
      break;
    }
    const auto cm_acc = wblc::cm_task_from_forces(qp.value(), model, F_lin, gravity);
    if (!cm_acc.ok()) {
      out.controller_failed = true;
      out.fail_time = t;
      break;
    }

    const auto jdq = chain::cm_jacobian_dot_qdot(w.chain, q, qdot);
    if (!jdq.ok()) {
      out.controller_failed = true;
      out.fail_time = t;
      break;
    }
    // Contact consistency leads the stack: whatever the lower tasks want,
    // the stance feet must not accelerate, or the plant's constraint forces
    // would fight the commanded motion and bias the CoM hold.
    wblc::Task contact_task;
    contact_task.jacobian = Eigen::MatrixXd::Zero(4, dof);
    contact_task.jdot_qdot = Eigen::VectorXd::Zero(4);
    contact_task.desired_acc = Eigen::VectorXd::Zero(4);
    contact_task.label = "stance";
    {
      int row = 0;
      for (const auto& foot : {w.right_foot, w.left_foot}) {
        const Eigen::MatrixXd Jp =
            chain::point_jacobian(w.chain, fk, foot).bottomRows(3);
        const Eigen::MatrixXd Jdp =
            chain::point_jacobian_dot(w.chain, q, qdot, foot).bottomRows(3);
        for (int axis : {0, 2}) {
          contact_task.jacobian.row(row) = Jp.row(axis);
          contact_task.jdot_qdot[row] = (Jdp.row(axis) * qdot)(0);
          ++row;
        }
      }
    }

    const Eigen::MatrixXd I_inv =
        model.I_cm.ldlt().solve(Eigen::MatrixXd::Identity(6, 6));
    wblc::Task cm_task;
    cm_task.jacobian = I_inv * model.J_cm;
    cm_task.jdot_qdot = I_inv * jdq.value();
    cm_task.desired_acc = cm_acc.value();
    cm_task.label = "centroidal";
    wblc::Task posture;
    posture.jacobian = Eigen::MatrixXd::Zero(act, dof);
    posture.jacobian.rightCols(act).setIdentity();
    posture.jdot_qdot = Eigen::VectorXd::Zero(act);
    posture.desired_acc = sc.kp_posture * (posture_ref - q.tail(act)) -
                          sc.kd_posture * qdot.tail(act);
    posture.label = "posture";

    const auto dyn = chain::joint_space_dynamics(w.chain, q, qdot, gravity);
    wblc::TaskHierarchy hierarchy;
    hierarchy.tasks = {contact_task, cm_task, posture};
    const auto hr = wblc::resolve_hierarchy(hierarchy, dyn.A);
    const auto tq = wblc::torque_solve(w.chain, q, qdot, hr.qddot_task,
                                       hr.N_total, cs, qp.value().forces,
                                       gravity);
    if (!tq.ok()) {
      out.controller_failed = true;
      out.fail_time = t;
      break;
    }
    const Eigen::VectorXd tau = tq.value().tau;

    BipedSample s;
    s.t = t;
    s.com = model.com_position;
    s.com_err = com_ref - model.com_position;
    s.fz_right = qp.value().forces[0].z();
    s.fz_left = qp.value().forces[1].z();
    s.tau_max = tau.cwiseAbs().maxCoeff();
    s.relaxed_mu = qp.value().relaxed_mu_used;
    out.samples.push_back(s);
    if (s.relaxed_mu) out.relaxed_mu_time += sc.control_dt;
    out.max_com_err = std::max(out.max_com_err, s.com_err.norm());
    if (t >= 2.0 * sc.duration / 3.0)
      out.settled_com_err = std::max(out.settled_com_err, s.com_err.norm());

    const Eigen::Vector3d push =
        (t >= sc.push_start && t < sc.push_start + sc.push_duration)
            ? sc.push_force
            : Eigen::Vector3d::Zero();
    for (int k = 0; k < substeps; ++k) {
      const auto f = [&](const Eigen::VectorXd& qq, const Eigen::VectorXd& vv) {
        const ConstraintModel cm = constraints(w, qq, vv, anchor_r, anchor_l);
        return constrained_accel(w, qq, vv, tau, gravity, push, cm);
      };
      const Eigen::VectorXd k1v = f(q, qdot);
      const Eigen::VectorXd k2q = qdot + 0.5 * h * k1v;
      const Eigen::VectorXd k2v = f(q + 0.5 * h * qdot, k2q);
      const Eigen::VectorXd k3q = qdot + 0.5 * h * k2v;
      const Eigen::VectorXd k3v = f(q + 0.5 * h * k2q, k3q);
      const Eigen::VectorXd k4q = qdot + h * k3v;
      const Eigen::VectorXd k4v = f(q + h * k3q, k4q);
      q += (h / 6.0) * (qdot + 2.0 * k2q + 2.0 * k3q + k4q);
      qdot += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
  }
  out.q_final = q;
  out.qdot_final = qdot;
  return out;
}

}  // namespace pswalk::sim
