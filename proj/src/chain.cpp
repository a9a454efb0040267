#include "pswalk/chain.hpp"

#include <cmath>
#include <utility>

#include "json.hpp"

namespace pswalk::chain {

namespace {

using spatial::adjoint;
using spatial::lie_bracket;
using spatial::Mat6;
using spatial::SpatialTransform;
using spatial::twist_exp;
using spatial::Vec6;

// Spatial inertia of one link about its frame origin, [angular; linear]
// ordering: [[I_c + m c^x c^xT, m c^x], [m c^xT, m 1]].
Mat6 spatial_inertia(const Link& l) {
  Mat6 G = Mat6::Zero();
  const Eigen::Matrix3d cx = spatial::skew(l.com);
  G.topLeftCorner<3, 3>() = l.inertia + l.mass * cx * cx.transpose();
  G.topRightCorner<3, 3>() = l.mass * cx;
  G.bottomLeftCorner<3, 3>() = l.mass * cx.transpose();
  G.bottomRightCorner<3, 3>() = l.mass * Eigen::Matrix3d::Identity();
  return G;
}

SpatialTransform joint_transform(const Link& l, double q) {
  return l.T_parent * twist_exp(l.screw, q);
}

std::vector<int> path_to_root(const KinematicChain& chain, int link) {
  std::vector<int> path;
  for (int i = link; i >= 0; i = chain.links[i].parent) path.push_back(i);
  return path;
}

bool unit_screw(const Vec6& s) {
  const double wn = s.head<3>().norm();
  const double vn = s.tail<3>().norm();
  const bool revolute = std::abs(wn - 1.0) < 1e-9 && vn < 1e-9;
  const bool prismatic = wn < 1e-9 && std::abs(vn - 1.0) < 1e-9;
  return revolute || prismatic;
}

}  // namespace

bool KinematicChain::valid() const {
  if (links.empty()) return false;
  if (base == BaseType::Floating && links.size() < 6) return false;
  double total_mass = 0.0;
  for (int i = 0; i < dof(); ++i) {
    const Link& l = links[i];
    if (l.parent < -1 || l.parent >= i) return false;
    if (!unit_screw(l.screw)) return false;
    if (!l.T_parent.valid(1e-9)) return false;
    if (l.mass < 0.0 || !std::isfinite(l.mass)) return false;
    if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      return false;
    if (l.mass > 0.0) {
      const Eigen::Vector3d ev =
          Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(l.inertia)
              .eigenvalues();
      if (ev.minCoeff() <= 0.0) return false;
    }
    total_mass += l.mass;
  }
  return total_mass > 0.0;
}

KinematicChain planar_arm(const std::vector<double>& lengths,
                          const std::vector<double>& masses) {
  KinematicChain c;
  const double w = 0.05;  // square cross-section side of the uniform rods
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    Link l;
    l.parent = static_cast<int>(i) - 1;
    l.screw << 0, 0, 1, 0, 0, 0;
    if (i > 0) l.T_parent.p = Eigen::Vector3d{lengths[i - 1], 0.0, 0.0};
    l.mass = masses[i];
    l.com = Eigen::Vector3d{lengths[i] / 2.0, 0.0, 0.0};
    const double ll = lengths[i] * lengths[i], ww = w * w;
    l.inertia = Eigen::Vector3d{masses[i] * ww / 6.0,
                                masses[i] * (ll + ww) / 12.0,
                                masses[i] * (ll + ww) / 12.0}
                    .asDiagonal();
    l.name = "link" + std::to_string(i);
    c.links.push_back(std::move(l));
  }
  return c;
}

PlanarWalker planar_walker() {
  KinematicChain body;
  auto leg = [&body](double hip_y, const std::string& side) {
    Link thigh;
    thigh.parent = 0;
    thigh.screw << 0, 1, 0, 0, 0, 0;
    thigh.T_parent.p = Eigen::Vector3d{0, hip_y, 0};
    thigh.mass = 2.0;
    thigh.com = Eigen::Vector3d{0, 0, -0.2};
    thigh.inertia = Eigen::Vector3d{0.027, 0.027, 0.002}.asDiagonal();
    thigh.name = side + "_thigh";
    body.links.push_back(thigh);
    Link shank;
    shank.parent = static_cast<int>(body.links.size()) - 1;
    shank.screw << 0, 1, 0, 0, 0, 0;
    shank.T_parent.p = Eigen::Vector3d{0, 0, -0.4};
    shank.mass = 1.5;
    shank.com = Eigen::Vector3d{0, 0, -0.2};
    shank.inertia = Eigen::Vector3d{0.02, 0.02, 0.0015}.asDiagonal();
    shank.name = side + "_shank";
    body.links.push_back(shank);
  };
  Link torso;
  torso.parent = -1;
  torso.screw << 0, 0, 1, 0, 0, 0;
  torso.mass = 8.0;
  torso.com = Eigen::Vector3d{0, 0, 0.15};
  torso.inertia = Eigen::Vector3d{0.12, 0.1, 0.05}.asDiagonal();
  torso.name = "torso";
  body.links.push_back(torso);
  leg(-0.1, "right");
  leg(0.1, "left");

  PlanarWalker w;
  w.chain = with_floating_base(body);
  w.torso = 5;
  w.right_foot = {7, {0, 0, -0.4}};
  w.left_foot = {9, {0, 0, -0.4}};
  return w;
}

KinematicChain with_floating_base(const KinematicChain& fixed) {
  // The input's root link becomes the free body: its joint to the world is
  // replaced by the six pose coordinates. Keeping the root's own joint as a
  // seventh coordinate would make the mass matrix singular (a root-joint
  // rotation cancelled by the opposite base motion moves only massless
  // virtual links). The root link itself carries the final z-rotation, so
  // only five purely virtual links are inserted ahead of it.
  KinematicChain c;
  c.base = BaseType::Floating;
  static const char* names[5] = {"float_tx", "float_ty", "float_tz",
                                 "float_rx", "float_ry"};
  for (int i = 0; i < 5; ++i) {
    Link l;
    l.parent = i - 1;
    l.screw = Vec6::Zero();
    if (i < 3)
      l.screw[3 + i] = 1.0;  // prismatic x, y, z
    else
      l.screw[i - 3] = 1.0;  // revolute x, y
    l.name = names[i];
    c.links.push_back(std::move(l));
  }
  c.links[0].T_parent = fixed.links[0].T_parent;  // q = 0 keeps the old pose
  Link base = fixed.links[0];
  base.parent = 4;
  base.screw << 0, 0, 1, 0, 0, 0;  // revolute z closes the Euler triple
  base.T_parent = SpatialTransform::identity();
  c.links.push_back(std::move(base));
  for (size_t i = 1; i < fixed.links.size(); ++i) {
    Link l = fixed.links[i];
    l.parent = l.parent < 0 ? 5 : l.parent + 5;  // extra roots ride the base
    c.links.push_back(std::move(l));
  }
  return c;
}

Result<KinematicChain, ParseError> chain_from_json_text(
    const std::string& text) {
  using nlohmann::json;
  const json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return ParseError{"chain: malformed JSON"};
  if (!j.is_object()) return ParseError{"chain: top level must be an object"};

  auto key_check = [](const json& obj, std::initializer_list<const char*> keys,
                      const char* where) -> std::string {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known)
        return std::string("chain: unknown key '") + it.key() + "' in " +
               where;
    }
    return {};
  };
  if (auto e = key_check(j, {"base", "links"}, "root"); !e.empty())
    return ParseError{e};
  if (!j.contains("links") || !j.at("links").is_array())
    return ParseError{"chain: 'links' array required"};

  BaseType base = BaseType::Fixed;
  if (j.contains("base")) {
    const auto& b = j.at("base");
    if (b == "fixed")
      base = BaseType::Fixed;
    else if (b == "floating")
      base = BaseType::Floating;
    else
      return ParseError{"chain: base must be 'fixed' or 'floating'"};
  }

  auto vec3 = [](const json& a, Eigen::Vector3d* out) {
    if (!a.is_array() || a.size() != 3) return false;
    for (int i = 0; i < 3; ++i) {
      if (!a[i].is_number()) return false;
      (*out)[i] = a[i].get<double>();
    }
    return true;
  };

  KinematicChain body;
  int index = 0;
  for (const json& lj : j.at("links")) {
    const std::string where = "links[" + std::to_string(index) + "]";
    if (!lj.is_object()) return ParseError{"chain: " + where + " not an object"};
    if (auto e = key_check(
            lj, {"name", "parent", "joint", "origin", "mass", "com", "inertia"},
            where.c_str());
        !e.empty())
      return ParseError{e};

    Link l;
    l.name = lj.value("name", where);
    if (!lj.contains("parent") || !lj.at("parent").is_number_integer())
      return ParseError{"chain: " + where + ": integer 'parent' required"};
    l.parent = lj.at("parent").get<int>();

    if (!lj.contains("joint") || !lj.at("joint").is_object())
      return ParseError{"chain: " + where + ": 'joint' object required"};
    const json& jt = lj.at("joint");
    if (auto e = key_check(jt, {"type", "axis"}, (where + ".joint").c_str());
        !e.empty())
      return ParseError{e};
    Eigen::Vector3d axis;
    if (!jt.contains("axis") || !vec3(jt.at("axis"), &axis) ||
        axis.norm() < 1e-12)
      return ParseError{"chain: " + where + ": joint axis must be a 3-vector"};
    axis.normalize();
    const std::string type = jt.value("type", "");
    if (type == "revolute")
      l.screw << axis, Eigen::Vector3d::Zero();
    else if (type == "prismatic")
      l.screw << Eigen::Vector3d::Zero(), axis;
    else
      return ParseError{"chain: " + where +
                        ": joint type must be revolute or prismatic"};

    if (lj.contains("origin")) {
      const json& o = lj.at("origin");
      if (auto e = key_check(o, {"xyz", "rpy"}, (where + ".origin").c_str());
          !e.empty())
        return ParseError{e};
      if (o.contains("xyz") && !vec3(o.at("xyz"), &l.T_parent.p))
        return ParseError{"chain: " + where + ": origin.xyz must be a 3-vector"};
      Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
      if (o.contains("rpy")) {
        if (!vec3(o.at("rpy"), &rpy))
          return ParseError{"chain: " + where +
                            ": origin.rpy must be a 3-vector"};
        l.T_parent.R =
            (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
             Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
             Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
                .toRotationMatrix();
      }
    }

    if (!lj.contains("mass") || !lj.at("mass").is_number())
      return ParseError{"chain: " + where + ": 'mass' required"};
    l.mass = lj.at("mass").get<double>();
    if (lj.contains("com") && !vec3(lj.at("com"), &l.com))
      return ParseError{"chain: " + where + ": com must be a 3-vector"};
    if (lj.contains("inertia")) {
      const json& in = lj.at("inertia");
      if (!in.is_array() || in.size() != 6)
        return ParseError{"chain: " + where +
                          ": inertia must be [ixx, iyy, izz, ixy, ixz, iyz]"};
      double v[6];
      for (int i = 0; i < 6; ++i) {
        if (!in[i].is_number())
          return ParseError{"chain: " + where + ": inertia entries numeric"};
        v[i] = in[i].get<double>();
      }
      l.inertia << v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2];
    }
    body.links.push_back(std::move(l));
    ++index;
  }

  KinematicChain out =
      base == BaseType::Floating ? with_floating_base(body) : std::move(body);
  if (!out.valid())
    return ParseError{
        "chain: invalid structure (check parent order, axes, inertias, total "
        "mass)"};
  return out;
}

std::vector<SpatialTransform> forward_kinematics(const KinematicChain& chain,
                                                 const Eigen::VectorXd& q) {
  std::vector<SpatialTransform> fk(chain.links.size());
  for (int i = 0; i < chain.dof(); ++i) {
    const Link& l = chain.links[i];
    const SpatialTransform local = joint_transform(l, q[i]);
    fk[i] = l.parent < 0 ? local : fk[l.parent] * local;
  }
  return fk;
}

std::vector<Vec6> body_velocities(const KinematicChain& chain,
                                  const std::vector<SpatialTransform>& fk,
                                  const Eigen::VectorXd& qdot) {
  std::vector<Vec6> V(chain.links.size());
  for (int i = 0; i < chain.dof(); ++i) {
    const Link& l = chain.links[i];
    V[i] = l.screw * qdot[i];
    if (l.parent < 0) continue;
    // The local transform is fk[parent]^-1 * fk[i]; no joint angles needed.
    const SpatialTransform local = fk[l.parent].inverse() * fk[i];
    V[i] += adjoint(local.inverse()) * V[l.parent];
  }
  return V;
}

Eigen::Vector3d point_position(const std::vector<SpatialTransform>& fk,
                               const PointRef& point) {
  return fk[point.link].apply(point.local);
}

Eigen::MatrixXd point_jacobian(const KinematicChain& chain,
                               const std::vector<SpatialTransform>& fk,
                               const PointRef& point) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, chain.dof());
  const Eigen::Vector3d y = point_position(fk, point);
  const SpatialTransform shift{Eigen::Matrix3d::Identity(), -y};
  for (int i : path_to_root(chain, point.link))
    J.col(i) = adjoint(shift * fk[i]) * chain.links[i].screw;
  return J;
}

Eigen::MatrixXd point_jacobian_dot(const KinematicChain& chain,
                                   const Eigen::VectorXd& q,
                                   const Eigen::VectorXd& qdot,
                                   const PointRef& point) {
  const auto fk = forward_kinematics(chain, q);
  const auto V = body_velocities(chain, fk, qdot);
  const int n = point.link;

  // Column chain through the virtual frame sitting at the point with the
  // link's orientation: only the two motion-dependent adjoints carry time
  // derivatives (the screws are constant).
  const Mat6 A1 = adjoint({fk[n].R, Eigen::Vector3d::Zero()});
  const Mat6 A2 = adjoint({Eigen::Matrix3d::Identity(), -point.local});
  Vec6 spin = Vec6::Zero();
  spin.head<3>() = V[n].head<3>();
  const Mat6 ad_spin = lie_bracket(spin);
  const SpatialTransform Tn_inv = fk[n].inverse();

  Eigen::MatrixXd Jd = Eigen::MatrixXd::Zero(6, chain.dof());
  for (int i : path_to_root(chain, n)) {
    const SpatialTransform Tni = Tn_inv * fk[i];
    const Mat6 Ad_ni = adjoint(Tni);
    const Vec6 S = chain.links[i].screw;
    const Vec6 V_ni = V[i] - adjoint(Tni.inverse()) * V[n];
    Jd.col(i) = A1 * (ad_spin * (A2 * (Ad_ni * S))) +
                A1 * (A2 * (Ad_ni * (lie_bracket(V_ni) * S)));
  }
  return Jd;
}

Eigen::VectorXd inverse_dynamics(const KinematicChain& chain,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qdot,
                                 const Eigen::VectorXd& qddot,
                                 const Eigen::Vector3d& gravity) {
  const int n = chain.dof();
  std::vector<Mat6> X(n);
  std::vector<Vec6> V(n), a(n), f(n);

  // Gravity enters as a fictitious upward base acceleration.
  Vec6 a0 = Vec6::Zero();
  a0.tail<3>() = -gravity;

  for (int i = 0; i < n; ++i) {
    const Link& l = chain.links[i];
    X[i] = adjoint(joint_transform(l, q[i]).inverse());
    const Vec6 vj = l.screw * qdot[i];
    V[i] = (l.parent < 0 ? Vec6::Zero().eval() : Vec6(X[i] * V[l.parent])) + vj;
    a[i] = X[i] * (l.parent < 0 ? a0 : a[l.parent]) + l.screw * qddot[i] +
           lie_bracket(V[i]) * vj;
    const Mat6 G = spatial_inertia(l);
    f[i] = G * a[i] - lie_bracket(V[i]).transpose() * (G * V[i]);
  }

  Eigen::VectorXd tau(n);
  for (int i = n - 1; i >= 0; --i) {
    tau[i] = chain.links[i].screw.dot(f[i]);
    if (chain.links[i].parent >= 0)
      f[chain.links[i].parent] += X[i].transpose() * f[i];
  }
  return tau;
}

JointSpaceDynamics joint_space_dynamics(const KinematicChain& chain,
                                        const Eigen::VectorXd& q,
                                        const Eigen::VectorXd& qdot,
                                        const Eigen::Vector3d& gravity) {
  const int n = chain.dof();
  JointSpaceDynamics dyn;

  // Composite-rigid-body pass for the mass matrix.
  std::vector<Mat6> X(n), Gc(n);
  for (int i = 0; i < n; ++i) {
    X[i] = adjoint(joint_transform(chain.links[i], q[i]).inverse());
    Gc[i] = spatial_inertia(chain.links[i]);
  }
  for (int i = n - 1; i > 0; --i) {
    const int p = chain.links[i].parent;
    if (p >= 0) Gc[p] += X[i].transpose() * Gc[i] * X[i];
  }
  dyn.A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    Vec6 F = Gc[i] * chain.links[i].screw;
    dyn.A(i, i) = chain.links[i].screw.dot(F);
    int j = i;
    while (chain.links[j].parent >= 0) {
      F = X[j].transpose() * F;
      j = chain.links[j].parent;
      dyn.A(i, j) = dyn.A(j, i) = chain.links[j].screw.dot(F);
    }
  }

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  dyn.b = inverse_dynamics(chain, q, qdot, zero, Eigen::Vector3d::Zero());
  dyn.g = inverse_dynamics(chain, q, zero, zero, gravity);
  return dyn;
}

Eigen::VectorXd forward_dynamics(const KinematicChain& chain,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qdot,
                                 const Eigen::VectorXd& tau,
                                 const Eigen::Vector3d& gravity,
                                 std::span<const PointForce> external) {
  const JointSpaceDynamics dyn = joint_space_dynamics(chain, q, qdot, gravity);
  Eigen::VectorXd rhs = tau - dyn.b - dyn.g;
  if (!external.empty()) {
    const auto fk = forward_kinematics(chain, q);
    for (const PointForce& pf : external) {
      const Eigen::MatrixXd J = point_jacobian(chain, fk, pf.point);
      rhs += J.bottomRows(3).transpose() * pf.force;
    }
  }
  return dyn.A.ldlt().solve(rhs);
}

CentroidalModel centroidal(const KinematicChain& chain, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& qdot) {
  const int n = chain.dof();
  const auto fk = forward_kinematics(chain, q);

  CentroidalModel m;
  for (int i = 0; i < n; ++i) {
    m.total_mass += chain.links[i].mass;
    m.com_position += chain.links[i].mass * fk[i].apply(chain.links[i].com);
  }
  m.com_position /= m.total_mass;

  // Per-link body Jacobians, folded through each link's inertia into the
  // CoM-centered world-aligned frame.
  const SpatialTransform T_cm{Eigen::Matrix3d::Identity(), m.com_position};
  m.J_cm = Eigen::MatrixXd::Zero(6, n);
  for (int i = 0; i < n; ++i) {
    if (chain.links[i].mass == 0.0 &&
        chain.links[i].inertia.cwiseAbs().maxCoeff() == 0.0)
      continue;
    Eigen::MatrixXd Jb = Eigen::MatrixXd::Zero(6, n);
    const SpatialTransform Ti_inv = fk[i].inverse();
    for (int j : path_to_root(chain, i))
      Jb.col(j) = adjoint(Ti_inv * fk[j]) * chain.links[j].screw;
    const Mat6 Ad_icm = adjoint(Ti_inv * T_cm);
    const Mat6 G = spatial_inertia(chain.links[i]);
    m.J_cm += Ad_icm.transpose() * G * Jb;
    m.I_cm += Ad_icm.transpose() * G * Ad_icm;
  }
  m.h_cm = m.J_cm * qdot;
  m.com_velocity = m.h_cm.tail<3>() / m.total_mass;
  return m;
}

ContactMaps contact_maps(const Eigen::Vector3d& com_position,
                         const std::vector<Eigen::Vector3d>& contact_positions) {
  const int nc = static_cast<int>(contact_positions.size());
  ContactMaps maps;
  maps.W_lin = Eigen::MatrixXd::Zero(3, 3 * nc);
  maps.W_ang = Eigen::MatrixXd::Zero(3, 3 * nc);
  for (int k = 0; k < nc; ++k) {
    maps.W_lin.middleCols<3>(3 * k) = Eigen::Matrix3d::Identity();
    maps.W_ang.middleCols<3>(3 * k) =
        spatial::skew(contact_positions[k] - com_position);
  }
  return maps;
}

Result<Vec6, SpatialError> cm_jacobian_dot_qdot(const KinematicChain& chain,
                                                const Eigen::VectorXd& q,
                                                const Eigen::VectorXd& qdot) {
  const JointSpaceDynamics dyn =
      joint_space_dynamics(chain, q, qdot, Eigen::Vector3d::Zero());
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(dyn.A);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-13)
    return SpatialError::SingularMass;
  return Vec6(centroidal(chain, q, qdot).J_cm * ldlt.solve(dyn.b));
}

}  // namespace pswalk::chain
