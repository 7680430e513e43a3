// Copyright 2026 The frictionid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "frictionid/error.hpp"
#include "frictionid/friction.hpp"

namespace frictionid {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Mat42 = Eigen::Matrix<double, 4, 2>;

/// Two revolute joints in a vertical plane. Joint angles are measured from
/// the upward vertical, the second one relative to the first link, so y = 0
/// is the arm pointing straight up.
///
/// The input u is motor torque; the joint receives diag(gear_ratio) u.
/// torque_limit applies to the joint (output) torque.
struct ArmParameters {
  std::array<double, 2> link_mass{4.0, 2.5};             // kg
  std::array<double, 2> link_length{0.35, 0.30};         // m
  std::array<double, 2> link_com_distance{0.175, 0.15};  // m, from joint axis
  std::array<double, 2> link_inertia{0.05, 0.03};        // kg m^2, about COM
  std::array<double, 2> gear_ratio{161.0, 161.0};
  double motor_constant = 0.123;  // N m / A
  double gravity = 9.81;          // m/s^2
  std::array<double, 2> torque_limit{44.8, 44.8};  // N m at the joint
  std::array<double, 2> velocity_limit{25.0 * 2.0 * std::numbers::pi / 60.0,
                                       25.0 * 2.0 * std::numbers::pi / 60.0};  // rad/s

  void validate() const {
    auto positive = [](const std::array<double, 2>& v, const char* name) {
      for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x))
          throw Error(ErrorKind::config, std::string("arm.") + name + " must be positive");
    };
    positive(link_mass, "link_mass");
    positive(link_length, "link_length");
    positive(link_com_distance, "link_com_distance");
    positive(link_inertia, "link_inertia");
    positive(gear_ratio, "gear_ratio");
    positive(torque_limit, "torque_limit");
    positive(velocity_limit, "velocity_limit");
    if (!(motor_constant > 0.0)) throw Error(ErrorKind::config, "arm.motor_constant must be positive");
    if (!(gravity >= 0.0) || !std::isfinite(gravity))
      throw Error(ErrorKind::config, "arm.gravity must be >= 0");
  }

  Mat2 input_matrix() const { return Vec2(gear_ratio[0], gear_ratio[1]).asDiagonal(); }

  // Motor-side bound on |u| equivalent to torque_limit at the joint.
  Vec2 input_limit() const {
    return {torque_limit[0] / gear_ratio[0], torque_limit[1] / gear_ratio[1]};
  }

  Vec2 motor_current(const Vec2& u) const { return u / motor_constant; }
};

struct JointState {
  Vec2 y = Vec2::Zero();     // rad
  Vec2 yd = Vec2::Zero();    // rad/s
  Vec2 ydd = Vec2::Zero();   // rad/s^2, filled by simulation or differentiation

  bool finite() const { return y.allFinite() && yd.allFinite(); }
};

/// Rigid-body arm plus one friction model per joint. Serves both as the
/// simulated ground truth and as the (possibly imperfect) nominal model.
struct PlantModel {
  ArmParameters arm;
  std::array<FrictionModel, 2> friction{no_friction(), no_friction()};

  Vec2 friction_torque(const Vec2& yd) const {
    return {eval_friction(friction[0], yd(0)), eval_friction(friction[1], yd(1))};
  }

  PlantModel without_friction() const { return {arm, {no_friction(), no_friction()}}; }
};

using GroundTruthPlant = PlantModel;

inline Mat2 mass_matrix(const ArmParameters& p, const Vec2& y) {
  const auto& [m1, m2] = p.link_mass;
  const double l1 = p.link_length[0];
  const auto& [c1, c2] = p.link_com_distance;
  const auto& [i1, i2] = p.link_inertia;
  const double cos2 = std::cos(y(1));
  Mat2 m;
  m(0, 0) = i1 + i2 + m1 * c1 * c1 + m2 * (l1 * l1 + c2 * c2 + 2.0 * l1 * c2 * cos2);
  m(0, 1) = i2 + m2 * (c2 * c2 + l1 * c2 * cos2);
  m(1, 0) = m(0, 1);
  m(1, 1) = i2 + m2 * c2 * c2;
  return m;
}

/// Coriolis and centrifugal forces k(y, yd), quadratic in yd.
inline Vec2 coriolis_vector(const ArmParameters& p, const Vec2& y, const Vec2& yd) {
  const double h = p.link_mass[1] * p.link_length[0] * p.link_com_distance[1] * std::sin(y(1));
  return {-h * (2.0 * yd(0) * yd(1) + yd(1) * yd(1)), h * yd(0) * yd(0)};
}

/// Generalized gravity forces q*(y) = -dV/dy with
/// V = g (m1 c1 cos y1 + m2 (l1 cos y1 + c2 cos(y1 + y2))).
inline Vec2 gravity_forces(const ArmParameters& p, const Vec2& y) {
  const auto& [m1, m2] = p.link_mass;
  const double l1 = p.link_length[0];
  const auto& [c1, c2] = p.link_com_distance;
  const double s12 = std::sin(y(0) + y(1));
  return {p.gravity * ((m1 * c1 + m2 * l1) * std::sin(y(0)) + m2 * c2 * s12),
          p.gravity * m2 * c2 * s12};
}

inline double potential_energy(const ArmParameters& p, const Vec2& y) {
  const auto& [m1, m2] = p.link_mass;
  const double l1 = p.link_length[0];
  const auto& [c1, c2] = p.link_com_distance;
  return p.gravity * ((m1 * c1 + m2 * l1) * std::cos(y(0)) + m2 * c2 * std::cos(y(0) + y(1)));
}

inline double total_energy(const ArmParameters& p, const Vec2& y, const Vec2& yd) {
  return 0.5 * yd.dot(mass_matrix(p, y) * yd) + potential_energy(p, y);
}

/// ydd = M^-1 (q* - tau(yd) + B u - k).
inline Vec2 forward_dynamics(const PlantModel& plant, const JointState& s, const Vec2& u) {
  const Mat2 m = mass_matrix(plant.arm, s.y);
  const Vec2 rhs = gravity_forces(plant.arm, s.y) - plant.friction_torque(s.yd) +
                   plant.arm.input_matrix() * u - coriolis_vector(plant.arm, s.y, s.yd);
  Eigen::LLT<Mat2> llt(m);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::numeric, "mass matrix is not positive definite");
  return llt.solve(rhs);
}

/// Computed torque u = B^-1 (M ydd + k + tau(yd) - q*).
inline Vec2 inverse_dynamics(const PlantModel& plant, const Vec2& y, const Vec2& yd,
                             const Vec2& ydd) {
  const Vec2 joint = mass_matrix(plant.arm, y) * ydd + coriolis_vector(plant.arm, y, yd) +
                     plant.friction_torque(yd) - gravity_forces(plant.arm, y);
  return joint.cwiseQuotient(Vec2(plant.arm.gear_ratio[0], plant.arm.gear_ratio[1]));
}

/// Continuous-time Jacobians of x' = f(x, u) with x = (y, yd), evaluated
/// analytically. Returns (df/dx, df/du).
struct DynamicsJacobian {
  Mat4 a = Mat4::Zero();
  Mat42 b = Mat42::Zero();
  bool nondifferentiable = false;  // a friction sign term sits exactly at yd = 0
};

inline DynamicsJacobian dynamics_jacobian(const PlantModel& plant, const Vec2& y, const Vec2& yd,
                                          const Vec2& u) {
  const ArmParameters& p = plant.arm;
  const double m2 = p.link_mass[1];
  const double l1 = p.link_length[0];
  const auto& [c1, c2] = p.link_com_distance;
  const double s2 = std::sin(y(1));
  const double cos2 = std::cos(y(1));
  const double c12 = std::cos(y(0) + y(1));

  const Mat2 m = mass_matrix(p, y);
  const Eigen::LLT<Mat2> llt(m);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::numeric, "mass matrix is not positive definite");
  const Vec2 acc = forward_dynamics(plant, {y, yd, Vec2::Zero()}, u);

  // dM/dy2 (M does not depend on y1)
  Mat2 dm2;
  dm2 << -2.0 * m2 * l1 * c2 * s2, -m2 * l1 * c2 * s2, -m2 * l1 * c2 * s2, 0.0;

  // dk/dy2 through h = m2 l1 c2 sin(y2)
  const double dh = m2 * l1 * c2 * cos2;
  const Vec2 dk_dy2(-dh * (2.0 * yd(0) * yd(1) + yd(1) * yd(1)), dh * yd(0) * yd(0));

  Mat2 dq_dy;
  const double g = p.gravity;
  dq_dy(0, 0) = g * ((p.link_mass[0] * c1 + m2 * l1) * std::cos(y(0)) + m2 * c2 * c12);
  dq_dy(0, 1) = g * m2 * c2 * c12;
  dq_dy(1, 0) = g * m2 * c2 * c12;
  dq_dy(1, 1) = g * m2 * c2 * c12;

  const double h = m2 * l1 * c2 * s2;
  Mat2 dk_dyd;
  dk_dyd << -2.0 * h * yd(1), -2.0 * h * (yd(0) + yd(1)), 2.0 * h * yd(0), 0.0;

  Mat2 dtau = Mat2::Zero();
  dtau(0, 0) = friction_slope(plant.friction[0], yd(0));
  dtau(1, 1) = friction_slope(plant.friction[1], yd(1));

  Mat2 dacc_dy;
  dacc_dy.col(0) = llt.solve(dq_dy.col(0));
  dacc_dy.col(1) = llt.solve(dq_dy.col(1) - dk_dy2 - dm2 * acc);
  const Mat2 dacc_dyd = llt.solve(-dtau - dk_dyd);

  DynamicsJacobian jac;
  jac.a.block<2, 2>(0, 2) = Mat2::Identity();
  jac.a.block<2, 2>(2, 0) = dacc_dy;
  jac.a.block<2, 2>(2, 2) = dacc_dyd;
  jac.b.block<2, 2>(2, 0) = llt.solve(p.input_matrix());
  jac.nondifferentiable = friction_nondifferentiable_at(plant.friction[0], yd(0)) ||
                          friction_nondifferentiable_at(plant.friction[1], yd(1));
  return jac;
}

}  // namespace frictionid
