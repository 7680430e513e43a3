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

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "frictionid/dynamics.hpp"
#include "frictionid/simulation.hpp"

namespace frictionid {

/// Chirped sine y = amplitude * sin(omega(s) s) with omega linear in the body
/// time s, framed by quintic ramps that start and end at rest.
struct SineTrajectorySpec {
  double amplitude = 0.4;      // rad
  double omega_start = 1.0;    // rad/s
  double omega_end = 1.75;     // rad/s
  double duration = 30.0;      // s, including both ramps
  double ramp_duration = 2.0;  // s
  double sample_dt = 0.02;     // s

  void validate() const {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
      throw Error(ErrorKind::config, "trajectory.amplitude must be >= 0");
    if (!(duration > 0.0)) throw Error(ErrorKind::config, "trajectory.duration must be > 0");
    if (!(sample_dt > 0.0)) throw Error(ErrorKind::config, "trajectory.sample_dt must be > 0");
    if (!(ramp_duration >= 0.0))
      throw Error(ErrorKind::config, "trajectory.ramp_duration must be >= 0");
    if (!(2.0 * ramp_duration < duration))
      throw Error(ErrorKind::config, "trajectory.ramp_duration must be below half the duration");
    if (!std::isfinite(omega_start) || !std::isfinite(omega_end))
      throw Error(ErrorKind::config, "trajectory frequencies must be finite");
  }

  double body_duration() const { return duration - 2.0 * ramp_duration; }

  std::size_t sample_count() const {
    return static_cast<std::size_t>(std::llround(duration / sample_dt)) + 1;
  }
};

struct KinematicPoint {
  double p = 0.0;
  double v = 0.0;
  double a = 0.0;
};

/// Quintic on [0, T] matching position, velocity and acceleration at both ends.
class QuinticSegment {
 public:
  QuinticSegment() = default;
  QuinticSegment(const KinematicPoint& from, const KinematicPoint& to, double T) : T_(T) {
    const double dp = to.p - from.p;
    c_[0] = from.p;
    c_[1] = from.v;
    c_[2] = 0.5 * from.a;
    if (T <= 0.0) return;
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    c_[3] = (20.0 * dp - (8.0 * to.v + 12.0 * from.v) * T - (3.0 * from.a - to.a) * T2) /
            (2.0 * T3);
    c_[4] = (-30.0 * dp + (14.0 * to.v + 16.0 * from.v) * T + (3.0 * from.a - 2.0 * to.a) * T2) /
            (2.0 * T4);
    c_[5] = (12.0 * dp - 6.0 * (to.v + from.v) * T - (from.a - to.a) * T2) / (2.0 * T5);
  }

  KinematicPoint operator()(double s) const {
    const auto& c = c_;
    KinematicPoint k;
    k.p = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
    k.v = c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
    k.a = 2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]));
    return k;
  }

  double duration() const { return T_; }

 private:
  double T_ = 0.0;
  std::array<double, 6> c_{};
};

/// Analytic single-joint excitation profile.
class SineProfile {
 public:
  explicit SineProfile(const SineTrajectorySpec& spec) : spec_(spec) {
    spec_.validate();
    const double tr = spec_.ramp_duration;
    const double tb = spec_.body_duration();
    chirp_rate_ = (spec_.omega_end - spec_.omega_start) / tb;
    // Ramps start and end at rest on the base pose.
    ramp_in_ = QuinticSegment(KinematicPoint{}, body(0.0), tr);
    ramp_out_ = QuinticSegment(body(tb), KinematicPoint{}, tr);
  }

  const SineTrajectorySpec& spec() const { return spec_; }

  KinematicPoint operator()(double t) const {
    const double tr = spec_.ramp_duration;
    const double tb = spec_.body_duration();
    if (t <= tr) return tr > 0.0 ? ramp_in_(std::max(t, 0.0)) : body(0.0);
    if (t <= tr + tb) return body(t - tr);
    if (tr <= 0.0) return body(tb);
    return ramp_out_(std::min(t - tr - tb, tr));
  }

  // Sine body in local time s in [0, body_duration].
  KinematicPoint body(double s) const {
    const double A = spec_.amplitude;
    const double omega = spec_.omega_start + chirp_rate_ * s;
    const double phase = omega * s;
    const double dphase = spec_.omega_start + 2.0 * chirp_rate_ * s;
    const double ddphase = 2.0 * chirp_rate_;
    const double sn = std::sin(phase), cs = std::cos(phase);
    return {A * sn, A * cs * dphase, A * (cs * ddphase - sn * dphase * dphase)};
  }

 private:
  SineTrajectorySpec spec_;
  double chirp_rate_ = 0.0;
  QuinticSegment ramp_in_;
  QuinticSegment ramp_out_;
};

struct SingleJointTrajectory {
  std::vector<double> t, y, yd, ydd;
};

/// Samples the profile; rejects it when the peak speed exceeds velocity_limit.
inline SingleJointTrajectory generate_sine(const SineTrajectorySpec& spec,
                                           double velocity_limit = 25.0 * 2.0 *
                                                                   std::numbers::pi / 60.0) {
  const SineProfile profile(spec);
  SingleJointTrajectory out;
  const std::size_t n = spec.sample_count();
  double peak = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * spec.sample_dt;
    const KinematicPoint kp = profile(t);
    out.t.push_back(t);
    out.y.push_back(kp.p);
    out.yd.push_back(kp.v);
    out.ydd.push_back(kp.a);
    peak = std::max(peak, std::abs(kp.v));
  }
  if (peak > velocity_limit) {
    std::ostringstream msg;
    msg << "trajectory rejected: peak velocity " << peak << " rad/s exceeds limit "
        << velocity_limit << " rad/s";
    throw Error(ErrorKind::limit, msg.str());
  }
  return out;
}

struct ReferenceSample {
  double t = 0.0;
  Vec2 y = Vec2::Zero();
  Vec2 yd = Vec2::Zero();
  Vec2 ydd = Vec2::Zero();
  Vec2 uff = Vec2::Zero();
};

using ReferenceTrajectory = std::vector<ReferenceSample>;

/// Both joints driven by one profile: y_i = base_i + gain_i * s(t).
/// gain = (1, -1) keeps y1 + y2 constant (gravity-compensated pair);
/// gain = (1, 0) moves joint 1 alone.
inline ReferenceTrajectory coordinated_trajectory(const SineTrajectorySpec& spec,
                                                  const Vec2& base_pose, const Vec2& gain,
                                                  const ArmParameters& arm = {}) {
  const SingleJointTrajectory s =
      generate_sine(spec, std::min(arm.velocity_limit[0] / std::max(std::abs(gain(0)), 1e-300),
                                   arm.velocity_limit[1] / std::max(std::abs(gain(1)), 1e-300)));
  ReferenceTrajectory ref(s.t.size());
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    ref[k].t = s.t[k];
    ref[k].y = base_pose + gain * s.y[k];
    ref[k].yd = gain * s.yd[k];
    ref[k].ydd = gain * s.ydd[k];
  }
  return ref;
}

/// Joint 1 follows +s(t), joint 2 follows -s(t), so link 2 keeps its
/// absolute orientation (upright for the default base pose).
inline ReferenceTrajectory gravity_compensated_pair(const SineTrajectorySpec& spec,
                                                    const Vec2& base_pose = Vec2::Zero(),
                                                    const ArmParameters& arm = {}) {
  return coordinated_trajectory(spec, base_pose, Vec2(1.0, -1.0), arm);
}

/// Fills u_ff by inverse dynamics with the given model. Rejects the
/// trajectory when a joint torque |B u_ff| exceeds the torque limit.
inline ReferenceTrajectory attach_feedforward(ReferenceTrajectory ref, const PlantModel& model,
                                              bool enforce_torque_limit = true) {
  for (auto& s : ref) {
    s.uff = inverse_dynamics(model, s.y, s.yd, s.ydd);
    if (!enforce_torque_limit) continue;
    for (int i = 0; i < 2; ++i) {
      const double joint_torque = std::abs(model.arm.gear_ratio[i] * s.uff(i));
      if (joint_torque > model.arm.torque_limit[i]) {
        std::ostringstream msg;
        msg << "trajectory rejected: joint " << i + 1 << " torque " << joint_torque
            << " N m at t = " << s.t << " s exceeds limit " << model.arm.torque_limit[i];
        throw Error(ErrorKind::limit, msg.str());
      }
    }
  }
  return ref;
}

/// Piecewise-linear interpolation of the feed-forward torque; clamps outside.
inline Vec2 interpolate_feedforward(const ReferenceTrajectory& ref, double t) {
  if (ref.empty()) return Vec2::Zero();
  if (t <= ref.front().t) return ref.front().uff;
  if (t >= ref.back().t) return ref.back().uff;
  const double dt = ref[1].t - ref[0].t;
  auto k = static_cast<std::size_t>(std::floor((t - ref.front().t) / dt));
  k = std::min(k, ref.size() - 2);
  const double w = (t - ref[k].t) / (ref[k + 1].t - ref[k].t);
  return (1.0 - w) * ref[k].uff + w * ref[k + 1].uff;
}

/// Open-loop replay of u_ff on a plant, starting from the reference's first
/// state.
inline TimeSeries replay_feedforward(const PlantModel& plant, const ReferenceTrajectory& ref,
                                     double internal_dt = 0.001) {
  if (ref.size() < 2) throw Error(ErrorKind::data, "reference needs at least two samples");
  SimulationOptions opt;
  opt.sample_dt = ref[1].t - ref[0].t;
  opt.internal_dt = internal_dt;
  opt.n_samples = ref.size() - 1;
  const ControlLaw law = [&ref](double t, const Vec2&, const Vec2&) -> Vec2 {
    return interpolate_feedforward(ref, t);
  };
  return simulate(plant, law, {ref.front().y, ref.front().yd, Vec2::Zero()}, opt);
}

/// Linear interpolation of the reference state; clamps outside.
inline ReferenceSample interpolate_reference(const ReferenceTrajectory& ref, double t) {
  if (t <= ref.front().t) return ref.front();
  if (t >= ref.back().t) return ref.back();
  const double dt = ref[1].t - ref[0].t;
  auto k = std::min(static_cast<std::size_t>(std::floor((t - ref.front().t) / dt)), ref.size() - 2);
  const double w = (t - ref[k].t) / (ref[k + 1].t - ref[k].t);
  const ReferenceSample& a = ref[k];
  const ReferenceSample& b = ref[k + 1];
  return {t, (1.0 - w) * a.y + w * b.y, (1.0 - w) * a.yd + w * b.yd,
          (1.0 - w) * a.ydd + w * b.ydd, (1.0 - w) * a.uff + w * b.uff};
}

/// u = u_ff + B^{-1} (Kp (y_des - y) + Kd (yd_des - yd)). Keeps an open-loop
/// unstable pose on the reference during identification experiments.
inline ControlLaw stabilized_feedforward(const ReferenceTrajectory& ref, const ArmParameters& arm,
                                         const Vec2& kp, const Vec2& kd) {
  const Vec2 binv = arm.input_matrix().diagonal().cwiseInverse();
  return [&ref, binv, kp, kd](double t, const Vec2& y, const Vec2& yd) -> Vec2 {
    const ReferenceSample r = interpolate_reference(ref, t);
    return r.uff + binv.cwiseProduct(kp.cwiseProduct(r.y - y) + kd.cwiseProduct(r.yd - yd));
  };
}

/// Simulates `plant` tracking `ref` under stabilized_feedforward.
inline TimeSeries run_experiment(const PlantModel& plant, const ReferenceTrajectory& ref,
                                 const Vec2& kp, const Vec2& kd, double internal_dt = 0.001) {
  if (ref.size() < 2) throw Error(ErrorKind::data, "reference needs at least two samples");
  SimulationOptions opt;
  opt.sample_dt = ref[1].t - ref[0].t;
  opt.internal_dt = internal_dt;
  opt.n_samples = ref.size() - 1;
  return simulate(plant, stabilized_feedforward(ref, plant.arm, kp, kd),
                  {ref.front().y, ref.front().yd, Vec2::Zero()}, opt);
}

}  // namespace frictionid
