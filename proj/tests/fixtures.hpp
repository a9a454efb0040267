#pragma once

#include "pswalk/chain.hpp"
#include "pswalk/rng.hpp"

// Randomized chain instances shared by the unit and acceptance suites.
namespace fixture {

inline pswalk::spatial::SpatialTransform random_transform(
    pswalk::RngStream& rng, double translation_scale = 0.4) {
  Eigen::Vector3d axis{rng.uniform(-1, 1), rng.uniform(-1, 1),
                       rng.uniform(-1, 1)};
  if (axis.norm() < 1e-6) axis = Eigen::Vector3d::UnitZ();
  axis.normalize();
  pswalk::spatial::SpatialTransform T;
  T.R = Eigen::AngleAxisd(rng.uniform(-M_PI, M_PI), axis).toRotationMatrix();
  T.p = Eigen::Vector3d{rng.uniform(-1, 1), rng.uniform(-1, 1),
                        rng.uniform(-1, 1)} *
        translation_scale;
  return T;
}

// Random tree with mixed revolute/prismatic joints, random offsets and SPD
// inertias. Floating variants keep reasonable scale for the six virtual
// joints; callers sampling configurations must keep q[4] away from +-pi/2.
inline pswalk::chain::KinematicChain random_chain(pswalk::RngStream& rng,
                                                  int n_links, bool floating) {
  pswalk::chain::KinematicChain c;
  for (int i = 0; i < n_links; ++i) {
    pswalk::chain::Link l;
    l.parent = i == 0 ? -1 : static_cast<int>(rng.uniform01() * i);
    Eigen::Vector3d axis{rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)};
    if (axis.norm() < 1e-6) axis = Eigen::Vector3d::UnitX();
    axis.normalize();
    if (rng.uniform01() < 0.8)
      l.screw << axis, Eigen::Vector3d::Zero();
    else
      l.screw << Eigen::Vector3d::Zero(), axis;
    l.T_parent = random_transform(rng);
    l.mass = rng.uniform(0.5, 3.0);
    Eigen::Matrix3d B;
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) B(r, s) = rng.uniform(-0.2, 0.2);
    l.inertia = B * B.transpose() + 0.02 * Eigen::Matrix3d::Identity();
    l.com = Eigen::Vector3d{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                            rng.uniform(-0.2, 0.2)};
    l.name = "r" + std::to_string(i);
    c.links.push_back(std::move(l));
  }
  return floating ? pswalk::chain::with_floating_base(c) : c;
}

// Configuration sampler that stays clear of the floating-base rotation
// singularity.
inline Eigen::VectorXd random_q(pswalk::RngStream& rng,
                                const pswalk::chain::KinematicChain& c) {
  Eigen::VectorXd q(c.dof());
  for (int i = 0; i < c.dof(); ++i) q[i] = rng.uniform(-M_PI, M_PI);
  if (c.base == pswalk::chain::BaseType::Floating)
    q[4] = rng.uniform(-1.2, 1.2);
  return q;
}

inline Eigen::VectorXd random_qdot(pswalk::RngStream& rng, int dof,
                                   double scale = 1.0) {
  Eigen::VectorXd v(dof);
  for (int i = 0; i < dof; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

// The shared x-z plane walker, re-exported under the historical test name.
using BipedFixture = pswalk::chain::PlanarWalker;

inline BipedFixture planar_biped() { return pswalk::chain::planar_walker(); }

}  // namespace fixture
