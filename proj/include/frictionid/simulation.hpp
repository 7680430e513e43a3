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

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "frictionid/dynamics.hpp"

namespace frictionid {

/// One row of a sampled joint-space time series.
struct Sample {
  double t = 0.0;
  Vec2 y = Vec2::Zero();
  Vec2 yd = Vec2::Zero();
  Vec2 ydd = Vec2::Zero();
  Vec2 u = Vec2::Zero();
};

using TimeSeries = std::vector<Sample>;

/// u(t, y, yd). Evaluated at every integrator stage, so it may contain
/// state feedback as well as a time-dependent feed-forward part.
using ControlLaw = std::function<Vec2(double t, const Vec2& y, const Vec2& yd)>;

struct SimulationOptions {
  double sample_dt = 0.02;     // output spacing
  double internal_dt = 0.001;  // RK4 step
  std::size_t n_samples = 0;   // output has n_samples + 1 rows
  double divergence_bound = 1e6;
};

namespace detail {

inline Vec4 state_derivative(const PlantModel& plant, const ControlLaw& control, double t,
                             const Vec4& x) {
  const Vec2 y = x.head<2>();
  const Vec2 yd = x.tail<2>();
  Vec4 dx;
  dx.head<2>() = yd;
  dx.tail<2>() = forward_dynamics(plant, {y, yd, Vec2::Zero()}, control(t, y, yd));
  return dx;
}

}  // namespace detail

/// Classic fourth-order Runge-Kutta step of the rigid-body dynamics.
inline Vec4 rk4_step(const PlantModel& plant, const ControlLaw& control, double t,
                     const Vec4& x, double h) {
  const Vec4 k1 = detail::state_derivative(plant, control, t, x);
  const Vec4 k2 = detail::state_derivative(plant, control, t + 0.5 * h, x + 0.5 * h * k1);
  const Vec4 k3 = detail::state_derivative(plant, control, t + 0.5 * h, x + 0.5 * h * k2);
  const Vec4 k4 = detail::state_derivative(plant, control, t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline std::size_t substeps_per_sample(const SimulationOptions& opt) {
  if (!(opt.sample_dt > 0.0) || !(opt.internal_dt > 0.0))
    throw Error(ErrorKind::config, "simulation time steps must be positive");
  const double ratio = opt.sample_dt / opt.internal_dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
    throw Error(ErrorKind::config, "sample_dt must be an integer multiple of internal_dt");
  return static_cast<std::size_t>(rounded);
}

/// Fixed-step RK4 integration of forward_dynamics, sampled every sample_dt.
/// Each row records the state, the input and the acceleration at that instant.
inline TimeSeries simulate(const PlantModel& plant, const ControlLaw& control,
                           const JointState& initial, const SimulationOptions& opt) {
  const std::size_t sub = substeps_per_sample(opt);
  const double h = opt.sample_dt / static_cast<double>(sub);

  TimeSeries out;
  out.reserve(opt.n_samples + 1);
  Vec4 x;
  x << initial.y, initial.yd;

  auto record = [&](std::size_t k) {
    Sample s;
    s.t = static_cast<double>(k) * opt.sample_dt;
    s.y = x.head<2>();
    s.yd = x.tail<2>();
    s.u = control(s.t, s.y, s.yd);
    s.ydd = forward_dynamics(plant, {s.y, s.yd, Vec2::Zero()}, s.u);
    out.push_back(s);
  };

  record(0);
  for (std::size_t k = 0; k < opt.n_samples; ++k) {
    const double t0 = static_cast<double>(k) * opt.sample_dt;
    for (std::size_t j = 0; j < sub; ++j) {
      x = rk4_step(plant, control, t0 + static_cast<double>(j) * h, x, h);
      if (!x.allFinite() || x.cwiseAbs().maxCoeff() > opt.divergence_bound) {
        std::ostringstream msg;
        msg << "simulation diverged at t = " << t0 + static_cast<double>(j + 1) * h
            << " s, state = [" << x.transpose() << "]";
        throw Error(ErrorKind::numeric, msg.str());
      }
    }
    record(k + 1);
  }
  return out;
}

inline ControlLaw zero_input() {
  return [](double, const Vec2&, const Vec2&) -> Vec2 { return Vec2::Zero(); };
}

}  // namespace frictionid
