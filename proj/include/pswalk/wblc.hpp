#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pswalk/chain.hpp"
#include "pswalk/result.hpp"

// Prioritized whole-body control: strict task hierarchy in joint
// accelerations, reaction-force distribution through a friction-cone QP,
// and torque extraction for under-actuated floating-base chains.
//
// Force convention: every 3-vector force here acts ON the robot, so a
// supporting ground contact has F_z > 0 and the equation of motion closes
// as A qdd + b + g = U' tau + sum J_c' F_c.
namespace pswalk::wblc {

// One level of the hierarchy. desired_acc is the task-space target; the
// commanded joint acceleration uses desired_acc - jdot_qdot.
struct Task {
  Eigen::MatrixXd jacobian;    // k x dof
  Eigen::VectorXd jdot_qdot;   // k
  Eigen::VectorXd desired_acc; // k
  std::string label;
};

struct TaskHierarchy {
  std::vector<Task> tasks;  // index 0 = highest priority
};

struct Contact {
  Eigen::Vector3d position;  // world, meters
  Eigen::MatrixXd jacobian;  // 3 x dof, world linear velocity of the point
  double mu = 0.65;
};

struct ContactSet {
  std::vector<Contact> contacts;
};

struct QpSolution {
  std::vector<Eigen::Vector3d> forces;  // per contact, Newtons
  Eigen::Vector3d achieved_angular;     // moment of the forces about the CoM
  Eigen::Vector3d angular_residual;     // desired minus achieved
  bool relaxed_mu_used = false;
};

enum class WblcError {
  Infeasible,              // equality unreachable even at the relaxed mu
  SingularInertia,
  RankDeficientActuation,  // torque system cannot realize the request
};

// Kinetic-energy-minimal right inverse A^-1 J' (J A^-1 J')^-1. When the
// k x k core is ill-conditioned (cond > 1e10) a 1e-10 ridge is added and
// *damped, if given, is set.
Eigen::MatrixXd dyn_consistent_pinv(const Eigen::MatrixXd& J,
                                    const Eigen::MatrixXd& A,
                                    bool* damped = nullptr);

struct HierarchyResult {
  Eigen::VectorXd qddot_task;
  Eigen::MatrixXd N_total;  // null-space projector of the whole stack
};

// Strict priorities: each task is solved in the null space of all higher
// ones with the A-weighted inverse, so lower levels cannot disturb upper
// levels. Infeasible lower tasks degrade to least squares.
HierarchyResult resolve_hierarchy(const TaskHierarchy& h,
                                  const Eigen::MatrixXd& A);

// Distributes contact forces: the linear momentum rate is a hard equality,
// the angular target a soft objective, all inside per-contact friction
// pyramids (|Fx| <= mu Fz, |Fy| <= mu Fz, Fz >= 0). On infeasibility the
// solve is retried once with every mu relaxed to 1.75 before giving up.
// Q weights the force magnitudes; pass an empty matrix for the 1e-3 I
// default.
Result<QpSolution, WblcError> reaction_force_qp(
    const chain::CentroidalModel& model, const ContactSet& contacts,
    const Eigen::Vector3d& F_lin_des, const Eigen::Vector3d& F_ang_des,
    const Eigen::MatrixXd& Q = Eigen::MatrixXd());

// Converts the distributed forces into the aggregate-body acceleration task
// [angular; linear]. The caller built F_lin_des as m (xdd_com_des - g_vec),
// so gravity is added back here: a static stance maps to exactly zero.
Result<spatial::Vec6, WblcError> cm_task_from_forces(
    const QpSolution& sol, const chain::CentroidalModel& model,
    const Eigen::Vector3d& F_lin_des,
    const Eigen::Vector3d& gravity = Eigen::Vector3d(0, 0, -9.81));

struct TorqueResult {
  Eigen::VectorXd tau;        // actuated joints only
  Eigen::VectorXd qddot_res;  // residual acceleration inside N_total
};

// Least-norm [tau; qdd_res] realizing the hierarchy under the chain
// dynamics and the given contact forces. Unactuated coordinates are the
// first unactuated_dof() entries of q.
Result<TorqueResult, WblcError> torque_solve(
    const chain::KinematicChain& chain, const Eigen::VectorXd& q,
    const Eigen::VectorXd& qdot, const Eigen::VectorXd& qddot_task,
    const Eigen::MatrixXd& N_total, const ContactSet& contacts,
    const std::vector<Eigen::Vector3d>& forces,
    const Eigen::Vector3d& gravity = Eigen::Vector3d(0, 0, -9.81));

// Cross-validates the recursive two-task resolution against the direct
// closed form (plain pseudo-inverses, identity metric); returns the sup
// deviation between the two joint accelerations. Near-zero by the
// projector identity N1 (J2 N1)^+ = (J2 N1)^+.
double hierarchy_equivalence_check(const Task& t1, const Task& t2);

}  // namespace pswalk::wblc
