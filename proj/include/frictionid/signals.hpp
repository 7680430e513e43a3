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
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "frictionid/error.hpp"
#include "frictionid/simulation.hpp"

namespace frictionid {

/// Absolute encoder readout: Gaussian noise, then rounding to the position
/// grid. The velocity word is the true speed rounded to a coarse step.
struct EncoderSpec {
  double resolution = 1e-4;                // rad
  double velocity_word_resolution = 0.01;  // rad/s, <= 0 passes velocity through
  double noise_std = 1e-5;                 // rad

  void validate() const {
    if (!(resolution > 0.0)) throw Error(ErrorKind::config, "encoder.resolution must be > 0");
    if (!(noise_std >= 0.0)) throw Error(ErrorKind::config, "encoder.noise_std must be >= 0");
  }
};

inline double round_to_grid(double x, double step) {
  return step > 0.0 ? std::round(x / step) * step : x;
}

/// Measured copy of a simulated series. Accelerations are not measured and
/// come back as NaN; inputs are passed through.
inline TimeSeries quantize_measurements(const TimeSeries& truth, const EncoderSpec& spec,
                                        std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  TimeSeries out = truth;
  for (auto& s : out) {
    for (int i = 0; i < 2; ++i) {
      const double n = spec.noise_std > 0.0 ? spec.noise_std * noise(rng) : 0.0;
      s.y(i) = round_to_grid(s.y(i) + n, spec.resolution);
      s.yd(i) = round_to_grid(s.yd(i), spec.velocity_word_resolution);
    }
    s.ydd.setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

/// Central differences inside, first-order one-sided differences at the ends.
inline std::vector<double> finite_difference(std::span<const double> y, double dt) {
  const std::size_t n = y.size();
  if (n < 3) throw Error(ErrorKind::data, "finite_difference needs at least 3 samples");
  std::vector<double> d(n);
  d[0] = (y[1] - y[0]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt);
  d[n - 1] = (y[n - 1] - y[n - 2]) / dt;
  return d;
}

struct TVDiffConfig {
  double alpha = 1e-3;
  int iterations = 50;           // outer lagged-diffusivity iterations
  double dt = 0.02;
  double epsilon = 1e-6;         // smoothing inside sqrt((Du)^2 + epsilon)
  int cg_max_iterations = 100;
  double cg_tolerance = 1e-10;   // relative residual of each inner solve
  double tolerance = 1e-8;       // relative objective decrease that counts as converged
  enum class InitialGuess { finite_difference, zero } initial_guess = InitialGuess::finite_difference;

  void validate() const {
    if (!(alpha > 0.0)) throw Error(ErrorKind::config, "tvdiff.alpha must be > 0");
    if (iterations < 1) throw Error(ErrorKind::config, "tvdiff.iterations must be >= 1");
    if (!(epsilon > 0.0)) throw Error(ErrorKind::config, "tvdiff.epsilon must be > 0");
    if (!(dt > 0.0)) throw Error(ErrorKind::config, "tvdiff.dt must be > 0");
    if (cg_max_iterations < 1) throw Error(ErrorKind::config, "tvdiff.cg_max_iterations must be >= 1");
  }
};

struct TVDiffResult {
  std::vector<double> derivative;
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective;  // F(u) before the first and after every outer iteration
  double gradient_norm = 0.0;     // ||grad F|| at the returned iterate
};

namespace tv {

using Eigen::VectorXd;

// Trapezoidal antiderivative: (Au)_0 = 0, (Au)_i = dt (u_0/2 + u_1 + ... + u_{i-1} + u_i/2).
inline VectorXd integrate(const VectorXd& u, double dt) {
  VectorXd w(u.size());
  w(0) = 0.0;
  for (Eigen::Index i = 1; i < u.size(); ++i) w(i) = w(i - 1) + 0.5 * dt * (u(i - 1) + u(i));
  return w;
}

inline VectorXd integrate_adjoint(const VectorXd& w, double dt) {
  const Eigen::Index n = w.size();
  VectorXd out(n);
  double tail = 0.0;  // sum of w_i for i > j
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    out(j) = j == 0 ? 0.5 * dt * tail : dt * tail + 0.5 * dt * w(j);
    tail += w(j);
  }
  return out;
}

inline VectorXd difference(const VectorXd& u, double dt) {
  return (u.tail(u.size() - 1) - u.head(u.size() - 1)) / dt;
}

inline VectorXd difference_adjoint(const VectorXd& d, double dt) {
  const Eigen::Index n = d.size() + 1;
  VectorXd out = VectorXd::Zero(n);
  out.head(n - 1) -= d / dt;
  out.tail(n - 1) += d / dt;
  return out;
}

struct Problem {
  VectorXd rhs;  // y - y_0
  double dt;
  double alpha;
  double epsilon;

  double objective(const VectorXd& u) const {
    const VectorXd du = difference(u, dt);
    const double tv = dt * (du.array().square() + epsilon).sqrt().sum();
    return alpha * tv + 0.5 * (integrate(u, dt) - rhs).squaredNorm();
  }

  VectorXd gradient(const VectorXd& u) const {
    const VectorXd du = difference(u, dt);
    const VectorXd weights = (du.array().square() + epsilon).rsqrt();
    return alpha * dt * difference_adjoint(weights.cwiseProduct(du), dt) +
           integrate_adjoint(integrate(u, dt) - rhs, dt);
  }
};

}  // namespace tv

/// Total-variation regularized derivative of a uniformly sampled signal.
///
/// Minimizes F(u) = alpha * sum dt sqrt((Du)^2 + eps) + 1/2 ||A u - (y - y_0)||^2
/// with A the trapezoidal antiderivative and D the forward difference. Each
/// outer iteration freezes the diffusivity 1/sqrt((Du_k)^2 + eps) and
/// minimizes the resulting quadratic majorizer with Jacobi-preconditioned CG
/// started at u_k, so F never increases.
inline TVDiffResult tvdiff(std::span<const double> y, const TVDiffConfig& cfg) {
  cfg.validate();
  const std::size_t n = y.size();
  if (n < 3) throw Error(ErrorKind::data, "tvdiff needs at least 3 samples");
  using Eigen::VectorXd;
  const double dt = cfg.dt;

  tv::Problem problem;
  problem.rhs = VectorXd(n);
  for (std::size_t i = 0; i < n; ++i) problem.rhs(i) = y[i] - y[0];
  problem.dt = dt;
  problem.alpha = cfg.alpha;
  problem.epsilon = cfg.epsilon;

  VectorXd u = VectorXd::Zero(n);
  if (cfg.initial_guess == TVDiffConfig::InitialGuess::finite_difference) {
    const auto fd = finite_difference(y, dt);
    for (std::size_t i = 0; i < n; ++i) u(i) = fd[i];
  }

  // diag(A^T A): column 0 holds dt/2 in rows 1..n-1; column j >= 1 holds
  // dt/2 in row j and dt in the n-1-j rows below.
  VectorXd ata_diag(n);
  ata_diag(0) = 0.25 * dt * dt * static_cast<double>(n - 1);
  for (std::size_t j = 1; j < n; ++j)
    ata_diag(j) = dt * dt * (static_cast<double>(n - 1 - j) + 0.25);

  TVDiffResult result;
  double f = problem.objective(u);
  result.objective.push_back(f);

  for (int it = 0; it < cfg.iterations; ++it) {
    const VectorXd du = tv::difference(u, dt);
    const VectorXd weights = (du.array().square() + cfg.epsilon).rsqrt();
    // Quadratic majorizer Hessian: alpha dt D^T W D + A^T A.
    auto apply = [&](const VectorXd& v) -> VectorXd {
      return cfg.alpha * dt * tv::difference_adjoint(weights.cwiseProduct(tv::difference(v, dt)), dt) +
             tv::integrate_adjoint(tv::integrate(v, dt), dt);
    };
    VectorXd precond = ata_diag;
    const double s = cfg.alpha * dt / (dt * dt);
    for (Eigen::Index i = 0; i + 1 < static_cast<Eigen::Index>(n); ++i) {
      precond(i) += s * weights(i);
      precond(i + 1) += s * weights(i);
    }
    const VectorXd b = tv::integrate_adjoint(problem.rhs, dt);

    // PCG on apply(x) = b starting at x = u.
    VectorXd x = u;
    VectorXd r = b - apply(x);
    const double bnorm = std::max(b.norm(), std::numeric_limits<double>::min());
    VectorXd z = r.cwiseQuotient(precond);
    VectorXd p = z;
    double rz = r.dot(z);
    for (int k = 0; k < cfg.cg_max_iterations && r.norm() > cfg.cg_tolerance * bnorm; ++k) {
      const VectorXd ap = apply(p);
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) break;
      const double step = rz / pap;
      x += step * p;
      r -= step * ap;
      z = r.cwiseQuotient(precond);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }

    const double f_next = problem.objective(x);
    result.iterations = it + 1;
    if (f_next <= f) {
      u = x;
      const double decrease = f - f_next;
      f = f_next;
      result.objective.push_back(f);
      if (decrease <= cfg.tolerance * std::max(std::abs(f), 1e-300)) {
        result.converged = true;
        break;
      }
    } else {
      // Rounding floor reached; keep the best iterate.
      result.objective.push_back(f);
      result.converged = true;
      break;
    }
  }

  result.gradient_norm = problem.gradient(u).norm();
  result.derivative.assign(u.data(), u.data() + n);
  return result;
}

/// Replaces the velocity and acceleration channels of a measured series by
/// TVDiff estimates: position -> velocity with `velocity`, then velocity ->
/// acceleration with `acceleration`. The measured velocity word is discarded.
struct DifferentiationReport {
  std::array<TVDiffResult, 2> velocity;
  std::array<TVDiffResult, 2> acceleration;
};

inline TimeSeries differentiate_measurements(const TimeSeries& measured,
                                             const TVDiffConfig& velocity,
                                             const TVDiffConfig& acceleration,
                                             DifferentiationReport* report = nullptr) {
  TimeSeries out = measured;
  std::vector<double> channel(measured.size());
  for (int j = 0; j < 2; ++j) {
    for (std::size_t i = 0; i < measured.size(); ++i) channel[i] = measured[i].y(j);
    TVDiffResult vel = tvdiff(channel, velocity);
    TVDiffResult acc = tvdiff(vel.derivative, acceleration);
    for (std::size_t i = 0; i < measured.size(); ++i) {
      out[i].yd(j) = vel.derivative[i];
      out[i].ydd(j) = acc.derivative[i];
    }
    if (report) {
      report->velocity[j] = std::move(vel);
      report->acceleration[j] = std::move(acc);
    }
  }
  return out;
}

}  // namespace frictionid
