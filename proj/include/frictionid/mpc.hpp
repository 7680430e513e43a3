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
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "frictionid/dynamics.hpp"
#include "frictionid/qp.hpp"
#include "frictionid/signals.hpp"
#include "frictionid/simulation.hpp"
#include "frictionid/trajectory.hpp"

namespace frictionid {

/// Discrete error dynamics e_{k+1} = A_k e_k + B_k du_k with
/// e = (y - y_des, yd - yd_des) and du the deviation from u_ff.
struct LtvModel {
  std::vector<Mat4> a;
  std::vector<Mat42> b;
  std::vector<bool> nondifferentiable;  // friction sign term active at yd = 0
  double dt = 0.02;

  std::size_t size() const { return a.size(); }
  const Mat4& a_at(std::size_t k) const { return a[std::min(k, a.size() - 1)]; }
  const Mat42& b_at(std::size_t k) const { return b[std::min(k, b.size() - 1)]; }
};

/// Zero-order-hold discretization via the exponential of [[A, B], [0, 0]] dt.
inline std::pair<Mat4, Mat42> discretize(const Mat4& a, const Mat42& b, double dt) {
  Eigen::Matrix<double, 6, 6> aug = Eigen::Matrix<double, 6, 6>::Zero();
  aug.topLeftCorner<4, 4>() = a * dt;
  aug.topRightCorner<4, 2>() = b * dt;
  const Eigen::Matrix<double, 6, 6> e = aug.exp();
  return {e.topLeftCorner<4, 4>(), e.topRightCorner<4, 2>()};
}

/// Jacobians of the nominal dynamics at (y_des, yd_des, u_ff) for every
/// reference sample, discretized at dt.
inline LtvModel linearize_along(const ReferenceTrajectory& ref, const PlantModel& nominal,
                                double dt) {
  if (ref.empty()) throw Error(ErrorKind::data, "cannot linearize along an empty reference");
  LtvModel model;
  model.dt = dt;
  model.a.reserve(ref.size());
  model.b.reserve(ref.size());
  for (const ReferenceSample& s : ref) {
    const DynamicsJacobian jac = dynamics_jacobian(nominal, s.y, s.yd, s.uff);
    auto [ad, bd] = discretize(jac.a, jac.b, dt);
    if (!ad.allFinite() || !bd.allFinite())
      throw Error(ErrorKind::numeric, "linearization produced non-finite matrices");
    model.a.push_back(ad);
    model.b.push_back(bd);
    model.nondifferentiable.push_back(jac.nondifferentiable);
  }
  return model;
}

struct MpcConfig {
  int horizon = 15;
  Mat4 q = Vec4(100.0, 100.0, 1.0, 1.0).asDiagonal();
  Mat2 r = Vec2(0.01, 0.01).asDiagonal();
  Mat4 p = Vec4(100.0, 100.0, 1.0, 1.0).asDiagonal();
  double sample_dt = 0.02;
  double qp_tolerance = 1e-9;

  void validate() const {
    if (horizon < 1) throw Error(ErrorKind::config, "mpc.horizon must be >= 1");
    if (!(sample_dt > 0.0)) throw Error(ErrorKind::config, "mpc.sample_dt must be > 0");
    auto psd = [](const auto& m, double lo, const char* name) {
      if (!m.isApprox(m.transpose()))
        throw Error(ErrorKind::config, std::string("mpc.") + name + " must be symmetric");
      const auto ev = m.template selfadjointView<Eigen::Lower>().eigenvalues();
      if (ev.minCoeff() < lo)
        throw Error(ErrorKind::config,
                    std::string("mpc.") + name + (lo > 0.0 ? " must be positive definite"
                                                           : " must be positive semidefinite"));
    };
    psd(q, -1e-12, "q");
    psd(p, -1e-12, "p");
    psd(r, std::numeric_limits<double>::min(), "r");
  }
};

/// Per-step bounds on du over the horizon.
struct InputBox {
  std::vector<Vec2> lower;
  std::vector<Vec2> upper;

  static InputBox unbounded(int horizon) {
    const double inf = std::numeric_limits<double>::infinity();
    return {std::vector<Vec2>(horizon, Vec2::Constant(-inf)),
            std::vector<Vec2>(horizon, Vec2::Constant(inf))};
  }
};

/// |u_ff + du| <= limit along the horizon starting at reference index `start`.
inline InputBox feedforward_headroom(const ReferenceTrajectory& ref, std::size_t start,
                                     int horizon, const Vec2& limit) {
  InputBox box;
  for (int i = 0; i < horizon; ++i) {
    const Vec2& uff = ref[std::min(start + i, ref.size() - 1)].uff;
    box.lower.push_back(-limit - uff);
    box.upper.push_back(limit - uff);
  }
  return box;
}

/// Condensed QP in the stacked inputs U = (du_0, ..., du_{N-1}):
///   J = sum_{i=1..N} x_i' Q x_i + x_N' P x_N + sum_{i=0..N-1} du_i' R du_i
/// with x_{i+1} = A_{start+i} x_i + B_{start+i} du_i. The returned QP is
/// 1/2 U'HU + g'U = J/2 up to a constant.
inline QPProblem build_condensed_qp(const LtvModel& model, std::size_t start,
                                    const MpcConfig& cfg, const Vec4& x0, const InputBox& box) {
  const int n = cfg.horizon;
  const Eigen::Index nu = 2 * n;
  Eigen::MatrixXd sx(4 * n, 4);
  Eigen::MatrixXd su = Eigen::MatrixXd::Zero(4 * n, nu);

  Mat4 phi = Mat4::Identity();
  for (int i = 0; i < n; ++i) {
    const Mat4& a = model.a_at(start + i);
    const Mat42& b = model.b_at(start + i);
    phi = a * phi;
    sx.block<4, 4>(4 * i, 0) = phi;
    if (i > 0) su.block(4 * i, 0, 4, 2 * i) = a * su.block(4 * (i - 1), 0, 4, 2 * i);
    su.block<4, 2>(4 * i, 2 * i) = b;
  }

  Eigen::MatrixXd qsu(4 * n, nu);
  Eigen::VectorXd qsx(4 * n);
  for (int i = 0; i < n; ++i) {
    const Mat4 w = i + 1 == n ? Mat4(cfg.q + cfg.p) : cfg.q;
    qsu.middleRows<4>(4 * i) = w * su.middleRows<4>(4 * i);
    qsx.segment<4>(4 * i) = w * (sx.middleRows<4>(4 * i) * x0);
  }

  QPProblem qp;
  qp.H = su.transpose() * qsu;
  for (int i = 0; i < n; ++i) qp.H.block<2, 2>(2 * i, 2 * i) += cfg.r;
  qp.H = 0.5 * (qp.H + qp.H.transpose()).eval();
  qp.g = su.transpose() * qsx;
  qp.lb.resize(nu);
  qp.ub.resize(nu);
  for (int i = 0; i < n; ++i) {
    qp.lb.segment<2>(2 * i) = box.lower[i];
    qp.ub.segment<2>(2 * i) = box.upper[i];
  }
  return qp;
}

struct ClosedLoopOptions {
  double internal_dt = 0.001;
  std::optional<EncoderSpec> encoder;  // empty: exact state measurement
  std::uint64_t seed = 1;
  bool keep_plans = false;
};

struct ClosedLoopRow {
  double t = 0.0;
  Vec2 y = Vec2::Zero();
  Vec2 y_des = Vec2::Zero();
  Vec2 uff = Vec2::Zero();
  Vec2 umpc = Vec2::Zero();
  Vec2 e = Vec2::Zero();
  bool qp_failed = false;
  bool saturated = false;
};

struct ClosedLoopLog {
  std::vector<ClosedLoopRow> rows;
  double mean_abs_umpc = 0.0;  // over all control steps and both joints
  double max_abs_umpc = 0.0;
  double max_abs_uff = 0.0;
  double tracking_rmse = 0.0;  // position error, both joints
  double max_abs_error = 0.0;
  std::size_t constraint_activations = 0;  // steps whose applied input sits on a bound
  std::size_t qp_failures = 0;
  std::vector<Eigen::VectorXd> plans;  // optional full input sequences per step
};

/// Two-step tracking loop: u = u_ff(t) + du_k, where du_k is the first input
/// of the condensed LTV-MPC plan computed from the measured error state at
/// each 20 ms step. The true plant is integrated with RK4 in between; u_ff is
/// interpolated linearly between reference samples, du is held.
inline ClosedLoopLog run_closed_loop(const PlantModel& true_plant, const PlantModel& nominal,
                                     const ReferenceTrajectory& reference, const MpcConfig& cfg,
                                     const ClosedLoopOptions& opt = {}) {
  cfg.validate();
  if (reference.size() < 2) throw Error(ErrorKind::data, "reference needs at least two samples");
  const double dt = reference[1].t - reference[0].t;
  if (std::abs(dt - cfg.sample_dt) > 1e-9)
    throw Error(ErrorKind::config, "reference grid does not match mpc.sample_dt");
  const LtvModel model = linearize_along(reference, nominal, dt);
  const Vec2 limit = nominal.arm.input_limit();

  SimulationOptions sim;
  sim.sample_dt = dt;
  sim.internal_dt = opt.internal_dt;
  const std::size_t sub = substeps_per_sample(sim);
  const double h = dt / static_cast<double>(sub);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  ClosedLoopLog log;
  Vec4 x;
  x << reference.front().y, reference.front().yd;
  Vec2 du_prev = Vec2::Zero();
  std::optional<Eigen::VectorXd> warm;
  const std::size_t steps = reference.size() - 1;
  double sum_abs_u = 0.0, sum_sq_e = 0.0;

  for (std::size_t k = 0; k <= steps; ++k) {
    const ReferenceSample& r = reference[k];
    Vec2 ym = x.head<2>(), ydm = x.tail<2>();
    if (opt.encoder) {
      for (int i = 0; i < 2; ++i) {
        ym(i) = round_to_grid(ym(i) + opt.encoder->noise_std * noise(rng), opt.encoder->resolution);
        ydm(i) = round_to_grid(ydm(i), opt.encoder->velocity_word_resolution);
      }
    }
    ClosedLoopRow row;
    row.t = r.t;
    row.y = x.head<2>();
    row.y_des = r.y;
    row.uff = r.uff;
    row.e = row.y - r.y;
    sum_sq_e += row.e.squaredNorm();
    log.max_abs_error = std::max(log.max_abs_error, row.e.cwiseAbs().maxCoeff());
    log.max_abs_uff = std::max(log.max_abs_uff, r.uff.cwiseAbs().maxCoeff());

    if (k == steps) {
      log.rows.push_back(row);
      break;
    }

    Vec4 e0;
    e0 << ym - r.y, ydm - r.yd;
    const InputBox box = feedforward_headroom(reference, k, cfg.horizon, limit);
    const QPProblem qp = build_condensed_qp(model, k, cfg, e0, box);
    Vec2 du = du_prev;
    try {
      const QpSolution sol = solve_qp(qp, cfg.qp_tolerance, warm);
      du = sol.x.head<2>();
      row.saturated = sol.active[0] != BoundState::free || sol.active[1] != BoundState::free;
      Eigen::VectorXd shifted(sol.x.size());
      shifted << sol.x.tail(sol.x.size() - 2), sol.x.tail<2>();
      warm = shifted;
      if (opt.keep_plans) log.plans.push_back(sol.x);
    } catch (const Error&) {
      row.qp_failed = true;
      ++log.qp_failures;
      warm.reset();
    }
    row.umpc = du;
    du_prev = du;
    if (row.saturated) ++log.constraint_activations;
    sum_abs_u += du.cwiseAbs().sum();
    log.max_abs_umpc = std::max(log.max_abs_umpc, du.cwiseAbs().maxCoeff());
    log.rows.push_back(row);

    const ControlLaw law = [&reference, du](double t, const Vec2&, const Vec2&) -> Vec2 {
      return interpolate_feedforward(reference, t) + du;
    };
    for (std::size_t j = 0; j < sub; ++j) {
      x = rk4_step(true_plant, law, r.t + static_cast<double>(j) * h, x, h);
      if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e6)
        throw Error(ErrorKind::numeric, "closed loop diverged at t = " + std::to_string(r.t));
    }
  }
  log.mean_abs_umpc = sum_abs_u / (2.0 * static_cast<double>(steps));
  log.tracking_rmse = std::sqrt(sum_sq_e / (2.0 * static_cast<double>(steps + 1)));
  return log;
}

}  // namespace frictionid
