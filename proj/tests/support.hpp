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

// Shared fixtures for the unit and acceptance tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "frictionid.hpp"

namespace frictionid::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  Vec2 vec2(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi)}; }

  Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline constexpr double kTvAlphaVelocity = 2e-5;
inline constexpr double kTvAlphaAcceleration = 3e-4;
inline constexpr double kStlsLambda = 5.0;

/// Ground truth inside the default library span:
/// joint 1: 0.6 yd + 1.5 tanh(10 yd), joint 2: 0.6 yd + 0.9 tanh(20 yd).
inline PlantModel benchmark_truth() {
  PlantModel p;
  p.friction = {StribeckModel{0.6, 1.5, 10.0, 0.0, 0.0}, StribeckModel{0.6, 0.9, 20.0, 0.0, 0.0}};
  return p;
}

inline Eigen::VectorXd benchmark_coefficients(int joint) {
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(7);
  xi(1) = 0.6;
  if (joint == 0)
    xi(4) = 1.5;
  else
    xi(5) = 0.9;
  return xi;
}

inline SineTrajectorySpec benchmark_spec() { return {0.5, 1.0, 1.75, 30.0, 2.0, 0.02}; }

inline EncoderSpec benchmark_encoder() { return {1e-4, 0.01, 1e-5}; }

struct Experiment {
  TimeSeries truth;
  TimeSeries estimated;  // quantized, then differentiated
};

/// Stabilized run of `plant` along `ref`, then encoder and TVDiff.
inline Experiment measure(const PlantModel& plant, const ReferenceTrajectory& ref,
                          std::uint64_t seed) {
  Experiment e;
  e.truth = run_experiment(plant, ref, Vec2(60.0, 60.0), Vec2(12.0, 12.0));
  TVDiffConfig vel, acc;
  vel.alpha = kTvAlphaVelocity;
  acc.alpha = kTvAlphaAcceleration;
  vel.dt = acc.dt = ref[1].t - ref[0].t;
  e.estimated = differentiate_measurements(
      quantize_measurements(e.truth, benchmark_encoder(), seed), vel, acc);
  return e;
}

inline Experiment benchmark_experiment(std::uint64_t seed) {
  const PlantModel truth = benchmark_truth();
  const auto ref = attach_feedforward(gravity_compensated_pair(benchmark_spec()),
                                      truth.without_friction());
  return measure(truth, ref, seed);
}

inline std::array<IdentificationDataset, 2> benchmark_datasets(std::uint64_t seed) {
  return residual_friction_torque(benchmark_truth().without_friction(),
                                  benchmark_experiment(seed).estimated, "benchmark");
}

/// Sum of three sines (0.2, 0.6, 1.5 Hz) sampled at 100 Hz for 10 s, plus
/// white noise at 20 dB SNR.
struct SyntheticSignal {
  double dt = 0.01;
  std::vector<double> t, y, dy;
  double top_frequency = 1.5;       // Hz
  double top_derivative_amplitude;  // of the 1.5 Hz component
};

inline SyntheticSignal synthetic_signal(std::uint64_t seed) {
  constexpr double f[3] = {0.2, 0.6, 1.5};
  constexpr double a[3] = {1.0, 0.5, 0.25};
  SyntheticSignal s;
  const int n = 1001;
  double power = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = i * s.dt;
    double y = 0.0, dy = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double w = 2.0 * std::numbers::pi * f[k];
      y += a[k] * std::sin(w * t);
      dy += a[k] * w * std::cos(w * t);
    }
    s.t.push_back(t);
    s.y.push_back(y);
    s.dy.push_back(dy);
    power += y * y;
  }
  const double sigma = std::sqrt(power / n / 100.0);
  Rng rng(seed);
  for (double& y : s.y) y += sigma * rng.normal();
  s.top_derivative_amplitude = a[2] * 2.0 * std::numbers::pi * f[2];
  return s;
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

/// Amplitude of the component of `d` at `hz`, by projection on sin and cos.
inline double component_amplitude(const std::vector<double>& d, const std::vector<double>& t,
                                  double hz) {
  const double w = 2.0 * std::numbers::pi * hz;
  double c = 0.0, s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    c += d[i] * std::cos(w * t[i]);
    s += d[i] * std::sin(w * t[i]);
  }
  return 2.0 / static_cast<double>(d.size()) * std::hypot(c, s);
}

inline std::vector<std::string> support_labels(const FunctionLibrary& lib,
                                               const SparseSolution& s) {
  const auto labels = lib.labels();
  std::vector<std::string> out;
  for (Index i : s.support) out.push_back(labels[static_cast<std::size_t>(i)]);
  return out;
}

/// Accelerated projected gradient (FISTA with restart) run until the iterate
/// stops moving. Slow, but shares nothing with the active-set solver.
inline Eigen::VectorXd projected_gradient_reference(const QPProblem& qp, int iterations = 200000) {
  using Eigen::VectorXd;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qp.H);
  const double step = 1.0 / es.eigenvalues().maxCoeff();
  VectorXd x = VectorXd::Zero(qp.dim()).cwiseMax(qp.lb).cwiseMin(qp.ub);
  VectorXd y = x;
  double t = 1.0;
  for (int k = 0; k < iterations; ++k) {
    const VectorXd next = (y - step * (qp.H * y + qp.g)).cwiseMax(qp.lb).cwiseMin(qp.ub);
    if ((next - x).lpNorm<Eigen::Infinity>() < 1e-15) {
      x = next;
      break;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (qp.objective(next) > qp.objective(x)) {
      y = x;
      t = 1.0;
      continue;
    }
    y = next + ((t - 1.0) / t_next) * (next - x);
    x = next;
    t = t_next;
  }
  return x;
}

}  // namespace frictionid::testing
