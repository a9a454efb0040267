#include "pswalk/wblc.hpp"

#include <cassert>

#include "pswalk/qp.hpp"

namespace pswalk::wblc {

using spatial::Vec6;

Eigen::MatrixXd dyn_consistent_pinv(const Eigen::MatrixXd& J,
                                    const Eigen::MatrixXd& A, bool* damped) {
  const Eigen::MatrixXd AiJt = A.ldlt().solve(J.transpose());
  const Eigen::MatrixXd core = J * AiJt;  // k x k, symmetric PSD
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(core);
  const double hi = es.eigenvalues().maxCoeff();
  // Anchoring the scale at 1 also catches cores that sit entirely at
  // rounding level (a fully shadowed task projects to numeric noise with a
  // deceptively good condition number). Directions below the noise floor
  // are dropped outright rather than ridged: inverting noise through the
  // ridge would re-inject it into higher-priority levels with gain 1/ridge.
  const bool damp = es.eigenvalues().minCoeff() <= 1e-10 * std::max(1.0, hi);
  const double floor = 1e-12 * std::max(1.0, hi);
  Eigen::MatrixXd inv_core =
      Eigen::MatrixXd::Zero(core.rows(), core.cols());
  for (int i = 0; i < core.rows(); ++i) {
    const double ev = es.eigenvalues()[i];
    if (ev <= floor) continue;
    inv_core += es.eigenvectors().col(i) *
                es.eigenvectors().col(i).transpose() /
                (ev + (damp ? 1e-10 : 0.0));
  }
  if (damped) *damped = damp;
  return AiJt * inv_core;
}

HierarchyResult resolve_hierarchy(const TaskHierarchy& h,
                                  const Eigen::MatrixXd& A) {
  assert(!h.tasks.empty());
  const int dof = static_cast<int>(h.tasks.front().jacobian.cols());
  HierarchyResult out;
  out.qddot_task = Eigen::VectorXd::Zero(dof);
  out.N_total = Eigen::MatrixXd::Identity(dof, dof);
  for (const Task& t : h.tasks) {
    const Eigen::MatrixXd J_proj = t.jacobian * out.N_total;
    const Eigen::MatrixXd J_proj_bar = dyn_consistent_pinv(J_proj, A);
    // A-weighted inverses keep this increment invisible to every level
    // above: J_i A^-1 N_i' = 0 makes the accumulation strict.
    out.qddot_task += J_proj_bar * (t.desired_acc - t.jdot_qdot -
                                    t.jacobian * out.qddot_task);
    out.N_total = out.N_total *
                  (Eigen::MatrixXd::Identity(dof, dof) - J_proj_bar * J_proj);
  }
  return out;
}

namespace {

// Friction pyramid rows for one contact, acting on its 3-vector force
// block: Fz >= 0 plus mu Fz >= |Fx|, mu Fz >= |Fy|.
void pyramid_rows(double mu, int contact, Eigen::MatrixXd& A_in) {
  const int r = 5 * contact, c = 3 * contact;
  A_in(r + 0, c + 2) = 1.0;
  A_in(r + 1, c + 0) = -1.0;
  A_in(r + 1, c + 2) = mu;
  A_in(r + 2, c + 0) = 1.0;
  A_in(r + 2, c + 2) = mu;
  A_in(r + 3, c + 1) = -1.0;
  A_in(r + 3, c + 2) = mu;
  A_in(r + 4, c + 1) = 1.0;
  A_in(r + 4, c + 2) = mu;
}

}  // namespace

Result<QpSolution, WblcError> reaction_force_qp(
    const chain::CentroidalModel& model, const ContactSet& contacts,
    const Eigen::Vector3d& F_lin_des, const Eigen::Vector3d& F_ang_des,
    const Eigen::MatrixXd& Q) {
  const int n = static_cast<int>(contacts.contacts.size());
  assert(n >= 1);
  std::vector<Eigen::Vector3d> positions;
  positions.reserve(n);
  for (const Contact& c : contacts.contacts) positions.push_back(c.position);
  const chain::ContactMaps maps =
      chain::contact_maps(model.com_position, positions);

  qp::Problem p;
  p.H = 2.0 * (maps.W_ang.transpose() * maps.W_ang);
  if (Q.size() == 0)
    p.H += 2e-3 * Eigen::MatrixXd::Identity(3 * n, 3 * n);
  else
    p.H += 2.0 * Q;
  p.c = -2.0 * maps.W_ang.transpose() * F_ang_des;
  p.A_eq = maps.W_lin;
  p.b_eq = F_lin_des;
  p.b_in = Eigen::VectorXd::Zero(5 * n);

  const double relaxed_mu = 1.75;
  for (int attempt = 0; attempt < 2; ++attempt) {
    p.A_in = Eigen::MatrixXd::Zero(5 * n, 3 * n);
    for (int j = 0; j < n; ++j)
      pyramid_rows(attempt == 0 ? contacts.contacts[j].mu : relaxed_mu, j,
                   p.A_in);
    const qp::ConeStart start =
        qp::cone_feasible_start(p.A_eq, p.b_eq, p.A_in);
    if (!start.equalities_met) continue;
    const auto solved = qp::solve(p, start.x);
    if (!solved.ok()) continue;
    QpSolution out;
    out.relaxed_mu_used = attempt == 1;
    const Eigen::VectorXd& F = solved.value().x;
    for (int j = 0; j < n; ++j) out.forces.push_back(F.segment<3>(3 * j));
    out.achieved_angular = maps.W_ang * F;
    out.angular_residual = F_ang_des - out.achieved_angular;
    return out;
  }
  return WblcError::Infeasible;
}

Result<Vec6, WblcError> cm_task_from_forces(const QpSolution& sol,
                                            const chain::CentroidalModel& model,
                                            const Eigen::Vector3d& F_lin_des,
                                            const Eigen::Vector3d& gravity) {
  const Eigen::Matrix3d inertia = model.I_cm.topLeftCorner<3, 3>();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(inertia);
  if (model.total_mass <= 0.0 ||
      es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff())
    return WblcError::SingularInertia;
  Vec6 acc;
  acc.head<3>() = es.eigenvectors() *
                  (es.eigenvectors().transpose() * sol.achieved_angular)
                      .cwiseQuotient(es.eigenvalues());
  // The linear target was weight-compensated on the way in; adding gravity
  // back recovers the kinematic CoM acceleration (zero for a static stance).
  acc.tail<3>() = F_lin_des / model.total_mass + gravity;
  return acc;
}

Result<TorqueResult, WblcError> torque_solve(
    const chain::KinematicChain& chain, const Eigen::VectorXd& q,
    const Eigen::VectorXd& qdot, const Eigen::VectorXd& qddot_task,
    const Eigen::MatrixXd& N_total, const ContactSet& contacts,
    const std::vector<Eigen::Vector3d>& forces,
    const Eigen::Vector3d& gravity) {
  assert(contacts.contacts.size() == forces.size());
  const int dof = chain.dof();
  const int nu = chain.unactuated_dof();
  const int na = dof - nu;
  const chain::JointSpaceDynamics dyn =
      chain::joint_space_dynamics(chain, q, qdot, gravity);
  Eigen::VectorXd tau_task = dyn.A * qddot_task + dyn.b + dyn.g;
  for (std::size_t j = 0; j < forces.size(); ++j)
    tau_task -= contacts.contacts[j].jacobian.transpose() * forces[j];

  Eigen::MatrixXd M(dof, na + dof);
  M.setZero();
  M.block(nu, 0, na, na).setIdentity();  // U' : actuated rows follow the base
  M.rightCols(dof) = -dyn.A * N_total;
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
  const Eigen::VectorXd sol = cod.solve(tau_task);
  if ((M * sol - tau_task).cwiseAbs().maxCoeff() >
      1e-8 * (1.0 + tau_task.cwiseAbs().maxCoeff()))
    return WblcError::RankDeficientActuation;
  TorqueResult out;
  out.tau = sol.head(na);
  out.qddot_res = sol.tail(dof);
  return out;
}

double hierarchy_equivalence_check(const Task& t1, const Task& t2) {
  const int dof = static_cast<int>(t1.jacobian.cols());
  // ref guards against pseudo-inverting pure rounding noise (a second task
  // entirely inside the first one's row space projects to ~1e-16 entries).
  const auto pinv = [](const Eigen::MatrixXd& m, double ref) {
    if (m.cwiseAbs().maxCoeff() <= 1e-12 * ref)
      return Eigen::MatrixXd::Zero(m.cols(), m.rows()).eval();
    return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(m)
        .pseudoInverse()
        .eval();
  };
  const Eigen::MatrixXd J1p = pinv(t1.jacobian, 1.0);
  const Eigen::VectorXd base =
      J1p * (t1.desired_acc - t1.jdot_qdot);
  const Eigen::MatrixXd N1 =
      Eigen::MatrixXd::Identity(dof, dof) - J1p * t1.jacobian;
  const Eigen::MatrixXd J2N1p =
      pinv(t2.jacobian * N1,
           1.0 + t2.jacobian.cwiseAbs().maxCoeff());
  const Eigen::VectorXd X =
      t2.desired_acc - t2.jdot_qdot - t2.jacobian * base;
  const Eigen::VectorXd via_projector = base + N1 * (J2N1p * X);
  const Eigen::VectorXd direct = base + J2N1p * X;
  return (via_projector - direct).cwiseAbs().maxCoeff();
}

}  // namespace pswalk::wblc
