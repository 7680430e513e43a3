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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frictionid/friction.hpp"
#include "frictionid/sindy.hpp"

namespace frictionid {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

/// Analytic partial derivatives of the Stribeck template with respect to a1..a5.
inline Vec5 stribeck_jacobian(const StribeckModel& a, double v) {
  const double t1 = std::tanh(a.a3 * v);
  const double t3 = std::tanh(3.0 * a.a3 * v);
  const double e = std::exp(-a.a5 * std::abs(v));
  Vec5 g;
  g(0) = v;
  g(1) = t1;
  g(2) = a.a2 * v * (1.0 - t1 * t1) + a.a4 * e * 3.0 * v * (1.0 - t3 * t3);
  g(3) = e * t3;
  g(4) = -a.a4 * std::abs(v) * e * t3;
  return g;
}

struct NlRegConfig {
  std::optional<StribeckModel> initial_guess;  // empty: seeded from the data
  int max_iterations = 500;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-12;
  double damping_init = 1e-3;
  double min_a3 = 1e-6;

  void validate() const {
    if (max_iterations < 1) throw Error(ErrorKind::config, "nlreg.max_iterations must be >= 1");
    if (!(gradient_tolerance > 0.0) || !(step_tolerance > 0.0) || !(damping_init > 0.0))
      throw Error(ErrorKind::config, "nlreg tolerances must be > 0");
    if (initial_guess && !(initial_guess->a3 > 0.0))
      throw Error(ErrorKind::config, "nlreg initial a3 must be > 0");
  }
};

struct NlRegResult {
  StribeckModel model;
  int iterations = 0;
  double gradient_norm = 0.0;
  double rmse = 0.0;
  bool converged = false;
  bool clamped = false;  // a3 or a5 hit its bound
  std::vector<double> objective;  // sum of squares after each accepted step
  std::vector<std::string> warnings;
};

/// a1 from the least-squares slope through the origin, a2 from mean |tau|
/// over 0.1 <= |v| <= 0.3 rad/s, a3 = 10, a4 = 0, a5 = 1.
inline StribeckModel seed_stribeck(const IdentificationDataset& ds) {
  double vv = 0.0, vt = 0.0, band = 0.0, all = 0.0;
  std::size_t nband = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double v = ds.velocity[i], t = ds.friction_torque[i];
    vv += v * v;
    vt += v * t;
    all += std::abs(t);
    if (std::abs(v) >= 0.1 && std::abs(v) <= 0.3) {
      band += std::abs(t);
      ++nband;
    }
  }
  StribeckModel m;
  m.a1 = vv > 0.0 ? vt / vv : 0.0;
  m.a2 = nband > 0 ? band / static_cast<double>(nband) : all / static_cast<double>(ds.size());
  m.a3 = 10.0;
  m.a4 = 0.0;
  m.a5 = 1.0;
  return m;
}

/// Levenberg-Marquardt fit of the Stribeck template to (v, tau) pairs.
/// Damping is multiplied by 10 on a rejected step and divided by 10 on an
/// accepted one.
inline NlRegResult fit_stribeck(const IdentificationDataset& ds, const NlRegConfig& cfg = {}) {
  cfg.validate();
  if (ds.size() == 0) throw Error(ErrorKind::empty_selection, "nonlinear regression dataset is empty");
  const std::size_t m = ds.size();

  NlRegResult out;
  if (!velocities_span_both_signs(ds.velocity))
    out.warnings.push_back("velocity data covers only one sign");

  auto sse = [&](const StribeckModel& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = ds.friction_torque[i] - a(ds.velocity[i]);
      s += r * r;
    }
    return s;
  };
  auto clamp = [&](StribeckModel& a) {
    bool hit = false;
    if (!(a.a3 >= cfg.min_a3)) {
      a.a3 = cfg.min_a3;
      hit = true;
    }
    if (!(a.a5 >= 0.0)) {
      a.a5 = 0.0;
      hit = true;
    }
    return hit;
  };

  StribeckModel a = cfg.initial_guess ? *cfg.initial_guess : seed_stribeck(ds);
  out.clamped = clamp(a);
  double f = sse(a);
  double mu = cfg.damping_init;
  out.objective.push_back(f);

  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    Mat5 jtj = Mat5::Zero();
    Vec5 jtr = Vec5::Zero();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec5 g = stribeck_jacobian(a, ds.velocity[i]);
      const double r = ds.friction_torque[i] - a(ds.velocity[i]);
      jtj.selfadjointView<Eigen::Lower>().rankUpdate(g);
      jtr += g * r;
    }
    jtj = jtj.selfadjointView<Eigen::Lower>();
    out.gradient_norm = jtr.lpNorm<Eigen::Infinity>();
    if (out.gradient_norm < cfg.gradient_tolerance) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Mat5 lhs = jtj;
      const double floor = 1e-12 * std::max(1.0, jtj.diagonal().maxCoeff());
      for (int d = 0; d < 5; ++d) lhs(d, d) += mu * std::max(jtj(d, d), floor);
      const Vec5 step = lhs.ldlt().solve(jtr);
      if (!step.allFinite()) {
        mu *= 10.0;
        continue;
      }
      const auto cur = a.to_array();
      std::array<double, 5> next{};
      for (int d = 0; d < 5; ++d) next[d] = cur[d] + step(d);
      StribeckModel trial = StribeckModel::from_array(next);
      const bool hit = clamp(trial);
      const double ft = sse(trial);
      if (ft < f) {
        const double rel_step = step.norm() / (Vec5(cur.data()).norm() + 1e-12);
        a = trial;
        out.clamped = out.clamped || hit;
        const double decrease = f - ft;
        f = ft;
        out.objective.push_back(f);
        mu = std::max(mu / 10.0, 1e-15);
        accepted = true;
        if (rel_step < cfg.step_tolerance || decrease <= 1e-15 * f) out.converged = true;
      } else {
        mu *= 10.0;
      }
    }
    if (!accepted) {
      // No damping level improves the objective: stationary to rounding.
      out.converged = true;
      break;
    }
    if (out.converged) {
      ++it;
      break;
    }
  }
  out.iterations = it;
  out.model = a;
  out.rmse = std::sqrt(f / static_cast<double>(m));
  if (!out.converged) out.warnings.push_back("Levenberg-Marquardt did not converge");
  if (out.clamped) out.warnings.push_back("a3 or a5 clamped to its lower bound");
  return out;
}

}  // namespace frictionid
