#pragma once

#include <span>
#include <string>
#include <vector>

#include "pswalk/result.hpp"
#include "pswalk/spatial.hpp"

// Tree-structured rigid-body chains with 1-dof joints (revolute or
// prismatic; screw axes constant). A floating base is five massless virtual
// links (translation x/y/z then rotation x/y) ahead of the base body, which
// itself carries the closing z-rotation; everything downstream treats the
// six pose coordinates as ordinary joints. The rotation triple is singular
// at the middle (y) angle = +-pi/2.

namespace pswalk::chain {

enum class BaseType { Fixed, Floating };

struct Link {
  int parent = -1;  // index of the parent link; -1 attaches to the world
  spatial::Vec6 screw = spatial::Vec6::Zero();  // joint axis, link frame
  spatial::SpatialTransform T_parent;  // parent frame -> link frame at q = 0
  double mass = 0.0;
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();  // about the CoM
  Eigen::Vector3d com = Eigen::Vector3d::Zero();      // link frame
  std::string name;
};

struct KinematicChain {
  std::vector<Link> links;
  BaseType base = BaseType::Fixed;

  int dof() const { return static_cast<int>(links.size()); }
  int unactuated_dof() const { return base == BaseType::Floating ? 6 : 0; }
  int actuated_dof() const { return dof() - unactuated_dof(); }

  // Tree ordering (parent < index), unit pure-revolute or pure-prismatic
  // screws, symmetric inertia, SPD inertia wherever mass > 0.
  bool valid() const;
};

// Point fixed to a link, in that link's frame.
struct PointRef {
  int link = 0;
  Eigen::Vector3d local = Eigen::Vector3d::Zero();
};

// Uniform-rod planar arm in the x-y plane: revolute z joints, links along
// +x. Shared fixture for tests and the tracking scenario.
KinematicChain planar_arm(const std::vector<double>& lengths,
                          const std::vector<double>& masses);

// Turns the root link into the free body: five virtual links plus the root
// re-hinged about z replace its world joint. The root's original screw is
// discarded; its inertia, name and fixed offset survive.
KinematicChain with_floating_base(const KinematicChain& fixed);

// Floating five-body walker moving in the x-z plane: torso plus two
// thigh/shank legs on revolute-y joints, hips offset +-0.1 in y. All angles
// zero puts the legs straight down with feet 0.8 below the pelvis. dof = 10,
// first six unactuated. Shared by tests and the balance scenario.
struct PlanarWalker {
  KinematicChain chain;
  PointRef right_foot;  // shank tip
  PointRef left_foot;
  int torso = 5;  // link index of the floating body
};
PlanarWalker planar_walker();

struct ParseError {
  std::string message;
};

// Declarative chain description; schema in docs/file_formats.md. Unknown
// keys are rejected.
Result<KinematicChain, ParseError> chain_from_json_text(const std::string& text);

std::vector<spatial::SpatialTransform> forward_kinematics(
    const KinematicChain& chain, const Eigen::VectorXd& q);

// Body twist of every link (own frame), [angular; linear].
std::vector<spatial::Vec6> body_velocities(
    const KinematicChain& chain,
    const std::vector<spatial::SpatialTransform>& fk, const Eigen::VectorXd& qdot);

Eigen::Vector3d point_position(const std::vector<spatial::SpatialTransform>& fk,
                               const PointRef& point);

// 6 x dof. Rows [angular; linear] in world orientation with moments about
// the (moving) point itself, so the linear rows give the world velocity of
// the material point: v_p = J.bottomRows(3) * qdot.
Eigen::MatrixXd point_jacobian(const KinematicChain& chain,
                               const std::vector<spatial::SpatialTransform>& fk,
                               const PointRef& point);

// Time derivative of point_jacobian, column by column via the adjoint chain
// through the virtual frame at the point (constant-screw joints, so the
// joint-axis derivative term is absent).
Eigen::MatrixXd point_jacobian_dot(const KinematicChain& chain,
                                   const Eigen::VectorXd& q,
                                   const Eigen::VectorXd& qdot,
                                   const PointRef& point);

struct JointSpaceDynamics {
  Eigen::MatrixXd A;   // dof x dof mass matrix, symmetric
  Eigen::VectorXd b;   // Coriolis / centrifugal
  Eigen::VectorXd g;   // gravity
};

// Mass matrix by composite rigid bodies; b and g by recursive Newton-Euler
// passes. Together: A qddot + b + g = generalized force.
JointSpaceDynamics joint_space_dynamics(const KinematicChain& chain,
                                        const Eigen::VectorXd& q,
                                        const Eigen::VectorXd& qdot,
                                        const Eigen::Vector3d& gravity);

// Generalized force for a prescribed acceleration (single Newton-Euler
// sweep); equals A qddot + b + g.
Eigen::VectorXd inverse_dynamics(const KinematicChain& chain,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qdot,
                                 const Eigen::VectorXd& qddot,
                                 const Eigen::Vector3d& gravity);

struct PointForce {
  PointRef point;
  Eigen::Vector3d force = Eigen::Vector3d::Zero();  // world frame, Newtons
};

// qddot = A^-1 (tau + sum J_p^T f - b - g).
Eigen::VectorXd forward_dynamics(const KinematicChain& chain,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qdot,
                                 const Eigen::VectorXd& tau,
                                 const Eigen::Vector3d& gravity,
                                 std::span<const PointForce> external = {});

struct CentroidalModel {
  double total_mass = 0.0;
  Eigen::Vector3d com_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d com_velocity = Eigen::Vector3d::Zero();
  Eigen::MatrixXd J_cm;      // 6 x dof, [angular; linear] about the CoM
  spatial::Mat6 I_cm = spatial::Mat6::Zero();  // locked inertia at the CoM
  spatial::Vec6 h_cm = spatial::Vec6::Zero();  // momentum = J_cm qdot
};

CentroidalModel centroidal(const KinematicChain& chain, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& qdot);

// Reaction-force to momentum-rate maps for 3-dof point contacts:
// W_lin stacks identities, W_ang stacks skew(p_contact - com).
struct ContactMaps {
  Eigen::MatrixXd W_lin;  // 3 x 3n
  Eigen::MatrixXd W_ang;  // 3 x 3n
};
ContactMaps contact_maps(const Eigen::Vector3d& com_position,
                         const std::vector<Eigen::Vector3d>& contact_positions);

enum class SpatialError {
  SingularMass,  // mass matrix numerically singular at this configuration
};

// d(J_cm)/dt * qdot without differentiating J_cm: equals J_cm A^-1 b (bias at
// zero gravity) because momentum about the CoM is conserved along the
// zero-torque motion of a free-floating chain. A fixed base injects reaction
// wrenches that break the identity, so only call this on floating-base chains.
Result<spatial::Vec6, SpatialError> cm_jacobian_dot_qdot(
    const KinematicChain& chain, const Eigen::VectorXd& q,
    const Eigen::VectorXd& qdot);

}  // namespace pswalk::chain
