#include "pswalk/wblc.hpp"

#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "pswalk/chain.hpp"
#include "pswalk/qp.hpp"
#include "pswalk/rng.hpp"

using namespace pswalk;
using namespace pswalk::wblc;
using pswalk::RngStream;

namespace {

const Eigen::Vector3d kGravity{0, 0, -9.81};

Eigen::MatrixXd random_matrix(RngStream& rng, int r, int c, double s = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-s, s);
  return m;
}

Eigen::MatrixXd random_spd(RngStream& rng, int n) {
  const Eigen::MatrixXd b = random_matrix(rng, n, n);
  return b * b.transpose() + 0.2 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::VectorXd random_vector(RngStream& rng, int n, double s = 1.0) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-s, s);
  return v;
}

Task random_task(RngStream& rng, int rows, int dof) {
  Task t;
  t.jacobian = random_matrix(rng, rows, dof);
  t.jdot_qdot = random_vector(rng, rows);
  t.desired_acc = random_vector(rng, rows);
  return t;
}

// Synthetic aggregate model: enough state for the force QP and the task
// conversion without building a chain.
chain::CentroidalModel point_mass_model(double mass,
                                        const Eigen::Vector3d& com) {
  chain::CentroidalModel m;
  m.total_mass = mass;
  m.com_position = com;
  m.I_cm.topLeftCorner<3, 3>() =
      Eigen::Vector3d{0.8, 0.9, 0.7}.asDiagonal();
  m.I_cm.bottomRightCorner<3, 3>() = mass * Eigen::Matrix3d::Identity();
  return m;
}

double qp_objective(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                    const Eigen::VectorXd& x) {
  return 0.5 * x.dot(H * x) + c.dot(x);
}

}  // namespace

TEST_CASE("weighted right inverse") {
  RngStream rng(201);

  SUBCASE("identity metric reduces to the plain pseudo-inverse") {
    for (int t = 0; t < 30; ++t) {
      const int dof = 4 + static_cast<int>(rng.uniform01() * 4);
      const int k = 1 + static_cast<int>(rng.uniform01() * 3);
      const Eigen::MatrixXd J = random_matrix(rng, k, dof);
      const Eigen::MatrixXd ref =
          Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(J)
              .pseudoInverse();
      const Eigen::MatrixXd got =
          dyn_consistent_pinv(J, Eigen::MatrixXd::Identity(dof, dof));
      CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  SUBCASE("square invertible blocks ignore the metric") {
    for (int t = 0; t < 20; ++t) {
      const Eigen::MatrixXd J = random_matrix(rng, 4, 4) +
                                2.0 * Eigen::MatrixXd::Identity(4, 4);
      const Eigen::MatrixXd got = dyn_consistent_pinv(J, random_spd(rng, 4));
      CHECK((got - J.inverse()).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  SUBCASE("right-inverse property and energy optimality") {
    for (int t = 0; t < 40; ++t) {
      const int dof = 4;
      const int k = 1 + static_cast<int>(rng.uniform01() * 3);
      const Eigen::MatrixXd J = random_matrix(rng, k, dof);
      const Eigen::MatrixXd A = random_spd(rng, dof);
      bool damped = true;
      const Eigen::MatrixXd Jbar = dyn_consistent_pinv(J, A, &damped);
      CHECK(!damped);
      CHECK((J * Jbar - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() <
            1e-9);

      // Among all x with Jx = e, the inverse must pick the minimizer of
      // x'Ax; compare with the equality-constrained KKT solve.
      const Eigen::VectorXd e = random_vector(rng, k);
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dof + k, dof + k);
      kkt.topLeftCorner(dof, dof) = A;
      kkt.topRightCorner(dof, k) = J.transpose();
      kkt.bottomLeftCorner(k, dof) = J;
      Eigen::VectorXd rhs(dof + k);
      rhs << Eigen::VectorXd::Zero(dof), e;
      const Eigen::VectorXd opt = kkt.fullPivLu().solve(rhs).head(dof);
      CHECK((Jbar * e - opt).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  SUBCASE("rank deficiency engages the damping and is reported") {
    Eigen::MatrixXd J(3, 5);
    J.setZero();
    J.row(0) << 1, 2, -1, 0, 3;
    J.row(1) << -2, 1, 0, 1, 0;
    J.row(2) = 2.0 * J.row(0);  // duplicate direction
    bool damped = false;
    const Eigen::MatrixXd Jbar =
        dyn_consistent_pinv(J, Eigen::MatrixXd::Identity(5, 5), &damped);
    CHECK(damped);
    CHECK(Jbar.allFinite());
    // Consistent targets are still reproduced through the damped core.
    const Eigen::VectorXd e = (Eigen::Vector3d() << 1.0, -0.5, 2.0).finished();
    CHECK((J * (Jbar * e) - e).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("task hierarchy resolution") {
  RngStream rng(202);

  SUBCASE("square full-rank task inverts directly") {
    const Eigen::MatrixXd A = random_spd(rng, 4);
    TaskHierarchy h;
    h.tasks.push_back(random_task(rng, 4, 4));
    h.tasks[0].jacobian += 2.0 * Eigen::MatrixXd::Identity(4, 4);
    const HierarchyResult r = resolve_hierarchy(h, A);
    const Eigen::VectorXd expect = h.tasks[0].jacobian.fullPivLu().solve(
        h.tasks[0].desired_acc - h.tasks[0].jdot_qdot);
    CHECK((r.qddot_task - expect).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r.N_total.cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("orthogonal-row tasks are both met exactly") {
    const int dof = 5;
    const Eigen::MatrixXd A = random_spd(rng, dof);
    TaskHierarchy h;
    Task t1, t2;
    t1.jacobian = Eigen::MatrixXd::Zero(2, dof);
    t1.jacobian(0, 0) = 1.0;
    t1.jacobian(1, 1) = 1.0;
    t1.jdot_qdot = random_vector(rng, 2);
    t1.desired_acc = random_vector(rng, 2);
    t2.jacobian = Eigen::MatrixXd::Zero(2, dof);
    t2.jacobian(0, 2) = 1.0;
    t2.jacobian(1, 3) = 1.0;
    t2.jdot_qdot = random_vector(rng, 2);
    t2.desired_acc = random_vector(rng, 2);
    h.tasks = {t1, t2};
    const HierarchyResult r = resolve_hierarchy(h, A);
    CHECK((t1.jacobian * r.qddot_task - (t1.desired_acc - t1.jdot_qdot))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    CHECK((t2.jacobian * r.qddot_task - (t2.desired_acc - t2.jdot_qdot))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }

  SUBCASE("conflicting tasks match the lexicographic oracle residual") {
    const chain::KinematicChain arm =
        chain::planar_arm({0.5, 0.4, 0.3}, {1.2, 0.8, 0.5});
    Eigen::Vector3d q{0.4, -0.7, 0.9};
    const auto dyn = chain::joint_space_dynamics(
        arm, q, Eigen::Vector3d::Zero(), kGravity);
    const auto fk = chain::forward_kinematics(arm, q);
    Task t1, t2;
    t1.jacobian =
        chain::point_jacobian(arm, fk, {2, {0.3, 0, 0}}).block(3, 0, 2, 3);
    t1.jdot_qdot = Eigen::Vector2d::Zero();
    t1.desired_acc = Eigen::Vector2d{0.8, -0.3};
    t2.jacobian =
        chain::point_jacobian(arm, fk, {1, {0.4, 0, 0}}).block(3, 0, 2, 3);
    t2.jdot_qdot = Eigen::Vector2d::Zero();
    t2.desired_acc = Eigen::Vector2d{-1.1, 0.6};
    TaskHierarchy h;
    h.tasks = {t1, t2};
    const HierarchyResult r = resolve_hierarchy(h, dyn.A);

    CHECK((t1.jacobian * r.qddot_task - t1.desired_acc).cwiseAbs().maxCoeff() <
          1e-8);
    // Four task rows over three joints: the top level is exact, so only the
    // second level's residual is meaningful. Its optimum is metric-free.
    const Eigen::VectorXd lex = oracle::lexicographic_lsq(
        {t1.jacobian, t2.jacobian}, {t1.desired_acc, t2.desired_acc});
    const double res_mine = (t2.jacobian * r.qddot_task - t2.desired_acc).norm();
    const double res_lex = (t2.jacobian * lex - t2.desired_acc).norm();
    CHECK(res_mine == doctest::Approx(res_lex).epsilon(1e-8));
  }

  SUBCASE("lower levels never disturb higher ones") {
    for (int t = 0; t < 25; ++t) {
      const int dof = 6;
      const Eigen::MatrixXd A = random_spd(rng, dof);
      TaskHierarchy h;
      h.tasks = {random_task(rng, 2, dof), random_task(rng, 2, dof),
                 random_task(rng, 2, dof)};
      Eigen::VectorXd prev = Eigen::VectorXd::Zero(dof);
      for (std::size_t k = 1; k <= h.tasks.size(); ++k) {
        TaskHierarchy prefix;
        prefix.tasks.assign(h.tasks.begin(), h.tasks.begin() + k);
        const Eigen::VectorXd cur = resolve_hierarchy(prefix, A).qddot_task;
        const Eigen::VectorXd contribution = cur - prev;
        for (std::size_t i = 0; i + 1 < k; ++i)
          CHECK((h.tasks[i].jacobian * contribution).cwiseAbs().maxCoeff() <
                1e-9);
        prev = cur;
      }
    }
  }

  SUBCASE("projector idempotence and the pseudo-inverse identity") {
    for (int t = 0; t < 40; ++t) {
      const int dof = 5;
      const Eigen::MatrixXd A = random_spd(rng, dof);
      TaskHierarchy h;
      h.tasks = {random_task(rng, 2, dof)};
      const Eigen::MatrixXd N1 = resolve_hierarchy(h, A).N_total;
      CHECK((N1 * N1 - N1).cwiseAbs().maxCoeff() < 1e-10);

      // Identity-metric version of the same projector feeding the direct
      // two-task closed form.
      const Eigen::MatrixXd J1 = random_matrix(rng, 2, dof);
      const Eigen::MatrixXd J2 = random_matrix(rng, 2, dof);
      const Eigen::MatrixXd J1p =
          Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(J1)
              .pseudoInverse();
      const Eigen::MatrixXd P =
          Eigen::MatrixXd::Identity(dof, dof) - J1p * J1;
      const Eigen::MatrixXd J2Pp =
          Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(J2 * P)
              .pseudoInverse();
      CHECK((P * J2Pp - J2Pp).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  SUBCASE("promoting a conflicting task transfers the residual") {
    const chain::KinematicChain arm =
        chain::planar_arm({0.5, 0.4, 0.3}, {1.2, 0.8, 0.5});
    const auto dyn = chain::joint_space_dynamics(
        arm, Eigen::Vector3d{0.3, 0.5, -0.4}, Eigen::Vector3d::Zero(),
        kGravity);
    Task a, b;
    a.jacobian = Eigen::MatrixXd::Zero(1, 3);
    a.jacobian << 1, 0.2, 0;
    a.jdot_qdot = Eigen::VectorXd::Zero(1);
    a.desired_acc = Eigen::VectorXd::Constant(1, 1.0);
    b = a;
    b.desired_acc = Eigen::VectorXd::Constant(1, -1.0);  // same row, opposite

    TaskHierarchy ab, ba;
    ab.tasks = {a, b};
    ba.tasks = {b, a};
    const Eigen::VectorXd q_ab = resolve_hierarchy(ab, dyn.A).qddot_task;
    const Eigen::VectorXd q_ba = resolve_hierarchy(ba, dyn.A).qddot_task;
    const double res_b_when_low = (b.jacobian * q_ab - b.desired_acc).norm();
    const double res_b_when_high = (b.jacobian * q_ba - b.desired_acc).norm();
    CHECK(res_b_when_high < res_b_when_low - 1.0);
    const double res_a_when_high = (a.jacobian * q_ab - a.desired_acc).norm();
    const double res_a_when_low = (a.jacobian * q_ba - a.desired_acc).norm();
    CHECK(res_a_when_high < res_a_when_low - 1.0);
  }

  SUBCASE("recursive and closed-form two-task solutions coincide") {
    for (int t = 0; t < 50; ++t) {
      const Task t1 = random_task(rng, 2, 5);
      const Task t2 = random_task(rng, 2, 5);
      CHECK(hierarchy_equivalence_check(t1, t2) < 1e-8);
    }
    // Second task fully inside the first task's row space.
    Task t1 = random_task(rng, 2, 5);
    Task t2 = t1;
    t2.jacobian = random_matrix(rng, 2, 2) * t1.jacobian;
    t2.desired_acc = random_vector(rng, 2);
    CHECK(hierarchy_equivalence_check(t1, t2) < 1e-10);
    // Zero velocity: the jdot terms drop out but the identity must hold.
    t1.jdot_qdot.setZero();
    t2 = random_task(rng, 3, 5);
    t2.jdot_qdot.setZero();
    CHECK(hierarchy_equivalence_check(t1, t2) < 1e-8);
  }
}

TEST_CASE("active-set solver against exhaustive enumeration") {
  RngStream rng(203);
  int solved = 0;
  for (int t = 0; t < 60; ++t) {
    const int n = 3 + static_cast<int>(rng.uniform01() * 3);
    const int mi = 3 + static_cast<int>(rng.uniform01() * 5);
    const int me = t % 3 == 0 ? 1 : 0;
    qp::Problem p;
    p.H = random_spd(rng, n);
    p.c = random_vector(rng, n);
    const Eigen::VectorXd x0 = random_vector(rng, n);
    p.A_in = random_matrix(rng, mi, n);
    p.b_in = p.A_in * x0;
    for (int i = 0; i < mi; ++i) p.b_in[i] -= rng.uniform(0.1, 1.0);
    p.A_eq = random_matrix(rng, me, n);
    p.b_eq = p.A_eq * x0;

    const auto r = qp::solve(p, x0);
    REQUIRE(r.ok());
    const qp::Solution& s = r.value();

    // KKT: stationarity, feasibility, sign, complementarity.
    const Eigen::VectorXd grad = p.H * s.x + p.c -
                                 p.A_eq.transpose() * s.eq_mult -
                                 p.A_in.transpose() * s.in_mult;
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-8);
    if (me > 0) CHECK((p.A_eq * s.x - p.b_eq).cwiseAbs().maxCoeff() < 1e-8);
    const Eigen::VectorXd slack = p.A_in * s.x - p.b_in;
    CHECK(slack.minCoeff() > -1e-8);
    CHECK(s.in_mult.minCoeff() >= 0.0);
    for (int i = 0; i < mi; ++i)
      CHECK(std::abs(s.in_mult[i] * slack[i]) < 1e-7);

    const auto ref =
        oracle::brute_force_qp(p.H, p.c, p.A_eq, p.b_eq, p.A_in, p.b_in);
    REQUIRE(ref.has_value());
    CHECK((s.x - *ref).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(qp_objective(p.H, p.c, s.x) <
          qp_objective(p.H, p.c, *ref) + 1e-8);
    ++solved;
  }
  CHECK(solved == 60);

  SUBCASE("infeasible start is rejected") {
    qp::Problem p;
    p.H = Eigen::MatrixXd::Identity(2, 2);
    p.c = Eigen::Vector2d::Zero();
    p.A_eq.resize(0, 2);
    p.b_eq.resize(0);
    p.A_in = Eigen::MatrixXd::Identity(2, 2);
    p.b_in = Eigen::Vector2d{1.0, 1.0};
    const auto r = qp::solve(p, Eigen::Vector2d::Zero());
    REQUIRE(!r.ok());
    CHECK(r.error() == qp::QpError::StartInfeasible);
  }
}

TEST_CASE("reaction force distribution") {
  RngStream rng(204);

  SUBCASE("static single support takes the whole weight") {
    const double mass = 15.0;
    const auto model = point_mass_model(mass, {0, 0, 1.0});
    ContactSet cs;
    cs.contacts.push_back({{0, 0, 0}, Eigen::MatrixXd(), 0.65});
    const Eigen::Vector3d F_lin = mass * (Eigen::Vector3d::Zero() - kGravity);
    const auto r = reaction_force_qp(model, cs, F_lin,
                                     Eigen::Vector3d::Zero());
    REQUIRE(r.ok());
    CHECK(!r.value().relaxed_mu_used);
    CHECK((r.value().forces[0] - Eigen::Vector3d{0, 0, mass * 9.81}).norm() <
          1e-8);
    CHECK(r.value().angular_residual.norm() < 1e-8);
    CHECK(r.value().achieved_angular.norm() < 1e-8);
  }

  SUBCASE("downward net force demand is infeasible") {
    const auto model = point_mass_model(10.0, {0, 0, 1.0});
    ContactSet cs;
    cs.contacts.push_back({{0, 0, 0}, Eigen::MatrixXd(), 0.65});
    const auto r = reaction_force_qp(model, cs, {0, 0, -30.0},
                                     Eigen::Vector3d::Zero());
    REQUIRE(!r.ok());
    CHECK(r.error() == WblcError::Infeasible);
  }

  SUBCASE("strong shear relaxes the cone once and reports it") {
    const auto model = point_mass_model(10.0, {0, 0, 1.0});
    ContactSet cs;
    cs.contacts.push_back({{0, 0, 0}, Eigen::MatrixXd(), 0.65});
    const Eigen::Vector3d demand{98.1, 0, 98.1};  // shear ratio 1 > 0.65
    const auto r =
        reaction_force_qp(model, cs, demand, Eigen::Vector3d::Zero());
    REQUIRE(r.ok());
    CHECK(r.value().relaxed_mu_used);
    CHECK((r.value().forces[0] - demand).norm() < 1e-6);

    // Ratio 2 exceeds even the relaxed cone.
    const auto r2 = reaction_force_qp(model, cs, {196.2, 0, 98.1},
                                      Eigen::Vector3d::Zero());
    REQUIRE(!r2.ok());
    CHECK(r2.error() == WblcError::Infeasible);
  }

  SUBCASE("two-contact instances match the exhaustive oracle") {
    for (int t = 0; t < 30; ++t) {
      const double mass = 12.0 + rng.uniform(0, 6);
      const Eigen::Vector3d com{rng.uniform(-0.05, 0.05),
                                rng.uniform(-0.05, 0.05),
                                0.8 + rng.uniform(0, 0.3)};
      const auto model = point_mass_model(mass, com);
      ContactSet cs;
      cs.contacts.push_back(
          {{0.15 + rng.uniform(-0.03, 0.03), -0.1, 0}, Eigen::MatrixXd(), 0.65});
      cs.contacts.push_back(
          {{-0.15 + rng.uniform(-0.03, 0.03), 0.1, 0}, Eigen::MatrixXd(), 0.65});
      const Eigen::Vector3d acc_des = random_vector(rng, 3, 0.8);
      const Eigen::Vector3d F_lin = mass * (acc_des - kGravity);
      const Eigen::Vector3d F_ang = random_vector(rng, 3, 2.0);

      const auto r = reaction_force_qp(model, cs, F_lin, F_ang);
      REQUIRE(r.ok());
      const QpSolution& sol = r.value();
      Eigen::VectorXd F(6);
      F << sol.forces[0], sol.forces[1];

      std::vector<Eigen::Vector3d> pos{cs.contacts[0].position,
                                       cs.contacts[1].position};
      const auto maps = chain::contact_maps(com, pos);
      CHECK((maps.W_lin * F - F_lin).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((maps.W_ang * F - sol.achieved_angular).cwiseAbs().maxCoeff() <
            1e-10);
      CHECK((sol.angular_residual - (F_ang - sol.achieved_angular))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
      if (!sol.relaxed_mu_used) {
        for (const auto& f : sol.forces) {
          CHECK(f.z() >= -1e-9);
          CHECK(std::abs(f.x()) <= 0.65 * f.z() + 1e-8);
          CHECK(std::abs(f.y()) <= 0.65 * f.z() + 1e-8);
        }
      }

      // Rebuild the same QP and enumerate every active set.
      Eigen::MatrixXd H =
          2.0 * (maps.W_ang.transpose() * maps.W_ang +
                 1e-3 * Eigen::MatrixXd::Identity(6, 6));
      Eigen::VectorXd c = -2.0 * maps.W_ang.transpose() * F_ang;
      Eigen::MatrixXd Ain = Eigen::MatrixXd::Zero(10, 6);
      for (int j = 0; j < 2; ++j) {
        const int rr = 5 * j, cc = 3 * j;
        Ain(rr, cc + 2) = 1.0;
        Ain(rr + 1, cc) = -1.0;
        Ain(rr + 1, cc + 2) = 0.65;
        Ain(rr + 2, cc) = 1.0;
        Ain(rr + 2, cc + 2) = 0.65;
        Ain(rr + 3, cc + 1) = -1.0;
        Ain(rr + 3, cc + 2) = 0.65;
        Ain(rr + 4, cc + 1) = 1.0;
        Ain(rr + 4, cc + 2) = 0.65;
      }
      const auto ref = oracle::brute_force_qp(
          H, c, maps.W_lin, F_lin, Ain, Eigen::VectorXd::Zero(10));
      if (!sol.relaxed_mu_used) {
        REQUIRE(ref.has_value());
        CHECK(qp_objective(H, c, F) <= qp_objective(H, c, *ref) + 1e-8);
        CHECK((F - *ref).cwiseAbs().maxCoeff() < 1e-6);
      }
    }
  }
}

TEST_CASE("aggregate-body task from distributed forces") {
  RngStream rng(205);

  SUBCASE("static stance maps to zero acceleration") {
    const double mass = 15.0;
    const auto model = point_mass_model(mass, {0, 0, 1.0});
    ContactSet cs;
    cs.contacts.push_back({{0, 0, 0}, Eigen::MatrixXd(), 0.65});
    const Eigen::Vector3d F_lin = -mass * kGravity;
    const auto qp_sol = reaction_force_qp(model, cs, F_lin,
                                          Eigen::Vector3d::Zero());
    REQUIRE(qp_sol.ok());
    const auto acc = cm_task_from_forces(qp_sol.value(), model, F_lin);
    REQUIRE(acc.ok());
    CHECK(acc.value().cwiseAbs().maxCoeff() < 1e-8);
  }

  SUBCASE("angular block follows the achieved moment, not the request") {
    const auto model = point_mass_model(15.0, {0, 0, 1.0});
    QpSolution sol;
    sol.achieved_angular = {0.3, -0.2, 0.1};
    sol.angular_residual = {5.0, 5.0, 5.0};  // heavily clipped request
    const auto acc =
        cm_task_from_forces(sol, model, -15.0 * kGravity);
    REQUIRE(acc.ok());
    const Eigen::Vector3d expect =
        Eigen::Vector3d{0.3 / 0.8, -0.2 / 0.9, 0.1 / 0.7};
    CHECK((acc.value().head<3>() - expect).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("matches direct wrench summation about the CoM") {
    for (int t = 0; t < 20; ++t) {
      const double mass = 10.0 + rng.uniform(0, 8);
      const Eigen::Vector3d com{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                1.0};
      const auto model = point_mass_model(mass, com);
      ContactSet cs;
      cs.contacts.push_back({{0.2, -0.12, 0}, Eigen::MatrixXd(), 0.65});
      cs.contacts.push_back({{-0.2, 0.12, 0}, Eigen::MatrixXd(), 0.65});
      const Eigen::Vector3d F_lin =
          mass * (Eigen::Vector3d(random_vector(rng, 3, 0.5)) - kGravity);
      const auto qp_sol =
          reaction_force_qp(model, cs, F_lin, random_vector(rng, 3, 1.5));
      REQUIRE(qp_sol.ok());
      const auto acc = cm_task_from_forces(qp_sol.value(), model, F_lin);
      REQUIRE(acc.ok());

      Eigen::Vector3d moment = Eigen::Vector3d::Zero();
      Eigen::Vector3d force = Eigen::Vector3d::Zero();
      for (int j = 0; j < 2; ++j) {
        moment += (cs.contacts[j].position - com)
                      .cross(qp_sol.value().forces[j]);
        force += qp_sol.value().forces[j];
      }
      const Eigen::Vector3d ang_ref =
          model.I_cm.topLeftCorner<3, 3>().ldlt().solve(moment);
      const Eigen::Vector3d lin_ref = force / mass + kGravity;
      CHECK((acc.value().head<3>() - ang_ref).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((acc.value().tail<3>() - lin_ref).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  SUBCASE("degenerate rotational inertia is rejected") {
    auto model = point_mass_model(15.0, {0, 0, 1.0});
    model.I_cm.topLeftCorner<3, 3>().setZero();
    QpSolution sol;
    const auto acc = cm_task_from_forces(sol, model, -15.0 * kGravity);
    REQUIRE(!acc.ok());
    CHECK(acc.error() == WblcError::SingularInertia);
  }
}

TEST_CASE("torque extraction") {
  RngStream rng(206);

  SUBCASE("fully actuated fixed base reduces to inverse dynamics") {
    const chain::KinematicChain arm =
        chain::planar_arm({0.5, 0.4, 0.3}, {1.2, 0.8, 0.5});
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd q = random_vector(rng, 3, 2.0);
      const Eigen::VectorXd qd = random_vector(rng, 3, 1.5);
      TaskHierarchy h;
      Task joint;
      joint.jacobian = Eigen::MatrixXd::Identity(3, 3);
      joint.jdot_qdot = Eigen::VectorXd::Zero(3);
      joint.desired_acc = random_vector(rng, 3, 2.0);
      h.tasks = {joint};
      const auto dyn = chain::joint_space_dynamics(arm, q, qd, kGravity);
      const HierarchyResult hr = resolve_hierarchy(h, dyn.A);
      const auto r = torque_solve(arm, q, qd, hr.qddot_task, hr.N_total, {},
                                  {}, kGravity);
      REQUIRE(r.ok());
      const Eigen::VectorXd ref =
          chain::inverse_dynamics(arm, q, qd, joint.desired_acc, kGravity);
      CHECK((r.value().tau - ref).cwiseAbs().maxCoeff() <
            1e-8 * (1.0 + ref.cwiseAbs().maxCoeff()));
    }
  }

  SUBCASE("nothing requested without gravity costs nothing") {
    const chain::KinematicChain arm = chain::planar_arm({0.4, 0.3}, {1.0, 0.7});
    const Eigen::VectorXd q = random_vector(rng, 2, 1.0);
    const auto r = torque_solve(arm, q, Eigen::VectorXd::Zero(2),
                                Eigen::VectorXd::Zero(2),
                                Eigen::MatrixXd::Identity(2, 2), {}, {},
                                Eigen::Vector3d::Zero());
    REQUIRE(r.ok());
    CHECK(r.value().tau.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(r.value().qddot_res.cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("floating support without contacts cannot accelerate the base") {
    const auto biped = fixture::planar_biped();
    Eigen::VectorXd q = Eigen::VectorXd::Zero(10);
    q[2] = 0.8;
    Eigen::VectorXd qddot_task = Eigen::VectorXd::Zero(10);
    qddot_task[2] = 1.0;  // demand upward base acceleration
    const auto r =
        torque_solve(biped.chain, q, Eigen::VectorXd::Zero(10), qddot_task,
                     Eigen::MatrixXd::Zero(10, 10), {}, {}, kGravity);
    REQUIRE(!r.ok());
    CHECK(r.error() == WblcError::RankDeficientActuation);
  }
}

TEST_CASE("double-support force balance on the walker fixture") {
  const auto biped = fixture::planar_biped();
  const chain::KinematicChain& c = biped.chain;
  RngStream rng(207);

  Eigen::VectorXd q = Eigen::VectorXd::Zero(10);
  q[2] = 0.8;
  const Eigen::VectorXd qd = Eigen::VectorXd::Zero(10);
  const auto fk = chain::forward_kinematics(c, q);
  const auto model = chain::centroidal(c, q, qd);

  ContactSet cs;
  for (const auto& foot : {biped.right_foot, biped.left_foot}) {
    Contact contact;
    contact.position = chain::point_position(fk, foot);
    contact.jacobian = chain::point_jacobian(c, fk, foot).bottomRows(3);
    contact.mu = 0.65;
    cs.contacts.push_back(contact);
  }
  REQUIRE(cs.contacts[0].position.z() == doctest::Approx(0.0).epsilon(1e-12));

  SUBCASE("standing still balances weight through the feet") {
    const Eigen::Vector3d F_lin = -model.total_mass * kGravity;
    const auto qp_sol =
        reaction_force_qp(model, cs, F_lin, Eigen::Vector3d::Zero());
    REQUIRE(qp_sol.ok());
    CHECK(!qp_sol.value().relaxed_mu_used);
    const double fz_total =
        qp_sol.value().forces[0].z() + qp_sol.value().forces[1].z();
    CHECK(fz_total == doctest::Approx(model.total_mass * 9.81).epsilon(1e-9));

    TaskHierarchy h;
    Task posture;
    posture.jacobian = Eigen::MatrixXd::Zero(4, 10);
    posture.jacobian.rightCols(4).setIdentity();
    posture.jdot_qdot = Eigen::VectorXd::Zero(4);
    posture.desired_acc = Eigen::VectorXd::Zero(4);
    h.tasks = {posture};
    const auto dyn = chain::joint_space_dynamics(c, q, qd, kGravity);
    const HierarchyResult hr = resolve_hierarchy(h, dyn.A);
    const auto tr = torque_solve(c, q, qd, hr.qddot_task, hr.N_total, cs,
                                 qp_sol.value().forces, kGravity);
    REQUIRE(tr.ok());

    // Reconstruct the equation of motion; the six unactuated rows must be
    // carried entirely by the contact forces.
    const Eigen::VectorXd qdd_total =
        hr.qddot_task + hr.N_total * tr.value().qddot_res;
    Eigen::VectorXd lhs = dyn.A * qdd_total + dyn.b + dyn.g;
    for (int j = 0; j < 2; ++j)
      lhs -= cs.contacts[j].jacobian.transpose() * qp_sol.value().forces[j];
    CHECK(lhs.head(6).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((lhs.tail(4) - tr.value().tau).cwiseAbs().maxCoeff() < 1e-8);
  }

  SUBCASE("dynamic request stays consistent end to end") {
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd qd_rand = random_vector(rng, 10, 0.3);
      const auto model_d = chain::centroidal(c, q, qd_rand);
      const Eigen::Vector3d acc_des = random_vector(rng, 3, 0.4);
      const Eigen::Vector3d F_lin = model_d.total_mass * (acc_des - kGravity);
      const auto qp_sol = reaction_force_qp(model_d, cs, F_lin,
                                            random_vector(rng, 3, 0.5));
      REQUIRE(qp_sol.ok());
      const auto cm_acc = cm_task_from_forces(qp_sol.value(), model_d, F_lin);
      REQUIRE(cm_acc.ok());

      const auto jd = chain::cm_jacobian_dot_qdot(c, q, qd_rand);
      REQUIRE(jd.ok());
      const Eigen::MatrixXd I_inv = model_d.I_cm.ldlt().solve(
          Eigen::MatrixXd::Identity(6, 6));
      Task cm_task;
      cm_task.jacobian = I_inv * model_d.J_cm;
      cm_task.jdot_qdot = I_inv * jd.value();
      cm_task.desired_acc = cm_acc.value();
      Task posture;
      posture.jacobian = Eigen::MatrixXd::Zero(4, 10);
      posture.jacobian.rightCols(4).setIdentity();
      posture.jdot_qdot = Eigen::VectorXd::Zero(4);
      posture.desired_acc = random_vector(rng, 4, 0.5);
      TaskHierarchy h;
      h.tasks = {cm_task, posture};
      const auto dyn = chain::joint_space_dynamics(c, q, qd_rand, kGravity);
      const HierarchyResult hr = resolve_hierarchy(h, dyn.A);
      const auto tr = torque_solve(c, q, qd_rand, hr.qddot_task, hr.N_total,
                                   cs, qp_sol.value().forces, kGravity);
      REQUIRE(tr.ok());

      const Eigen::VectorXd qdd_total =
          hr.qddot_task + hr.N_total * tr.value().qddot_res;
      Eigen::VectorXd lhs = dyn.A * qdd_total + dyn.b + dyn.g;
      for (int j = 0; j < 2; ++j)
        lhs -= cs.contacts[j].jacobian.transpose() * qp_sol.value().forces[j];
      CHECK(lhs.head(6).cwiseAbs().maxCoeff() < 1e-6);

      // Momentum-rate consistency: the achieved aggregate acceleration is
      // exactly what the force solution promised.
      const spatial::Vec6 task_acc =
          cm_task.jacobian * qdd_total + cm_task.jdot_qdot;
      CHECK((task_acc - cm_acc.value()).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}
