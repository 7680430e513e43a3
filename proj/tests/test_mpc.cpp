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

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"

namespace frictionid {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::Rng;

MatrixXd random_spd(Rng& rng, Eigen::Index n) {
  const MatrixXd a = rng.gaussian(n, n);
  return a * a.transpose() + 0.1 * MatrixXd::Identity(n, n);
}

QPProblem random_qp(Rng& rng, Eigen::Index n) {
  QPProblem qp;
  qp.H = random_spd(rng, n);
  qp.g = 3.0 * rng.gaussian(n, 1);
  qp.lb.resize(n);
  qp.ub.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    qp.lb(i) = rng.uniform(-1.5, 0.0);
    qp.ub(i) = qp.lb(i) + rng.uniform(0.0, 2.0);
  }
  return qp;
}

// ---------------------------------------------------------------- QP solver

TEST(Qp, InteriorSolutionIsUnconstrainedMinimizer) {
  Rng rng(1);
  QPProblem qp;
  qp.H = random_spd(rng, 6);
  qp.g = rng.gaussian(6, 1);
  qp.lb = VectorXd::Constant(6, -1e6);
  qp.ub = VectorXd::Constant(6, 1e6);
  const QpSolution s = solve_qp(qp);
  const VectorXd x = qp.H.ldlt().solve(-qp.g);
  EXPECT_LT((s.x - x).norm(), 1e-9 * (1.0 + x.norm()));
  for (auto a : s.active) EXPECT_EQ(a, BoundState::free);
  EXPECT_EQ(s.multipliers, VectorXd::Zero(6));
}

TEST(Qp, OneDimensionalClamp) {
  QPProblem qp{MatrixXd::Constant(1, 1, 2.0), VectorXd::Constant(1, -10.0),
               VectorXd::Constant(1, -1.0), VectorXd::Constant(1, 3.0)};
  const QpSolution s = solve_qp(qp);
  EXPECT_DOUBLE_EQ(s.x(0), 3.0);
  EXPECT_EQ(s.active[0], BoundState::upper);
  EXPECT_DOUBLE_EQ(s.multipliers(0), 4.0);
  qp.g(0) = 10.0;
  EXPECT_DOUBLE_EQ(solve_qp(qp).x(0), -1.0);
  qp.g(0) = -4.0;
  EXPECT_DOUBLE_EQ(solve_qp(qp).x(0), 2.0);
}

TEST(Qp, MatchesProjectedGradientOnRandomProblems) {
  Rng rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const QPProblem qp = random_qp(rng, rng.integer(1, 12));
    const QpSolution s = solve_qp(qp, 1e-12);
    const VectorXd ref = testing::projected_gradient_reference(qp);
    EXPECT_LT((s.x - ref).lpNorm<Eigen::Infinity>(), 1e-6) << trial;
    EXPECT_LE(qp.objective(s.x), qp.objective(ref) + 1e-10) << trial;
    EXPECT_LT(s.kkt_residual, 1e-8) << trial;
    EXPECT_LT(kkt_residual(qp, s.x, s.active), 1e-8) << trial;
    EXPECT_TRUE((s.x.array() >= qp.lb.array()).all() && (s.x.array() <= qp.ub.array()).all());
  }
}

TEST(Qp, WarmStartReachesSameSolution) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const QPProblem qp = random_qp(rng, 8);
    const VectorXd start = rng.gaussian(8, 1);
    EXPECT_LT((solve_qp(qp, 1e-12).x - solve_qp(qp, 1e-12, start).x).norm(), 1e-9);
  }
}

TEST(Qp, EqualBoundsFixTheVariable) {
  Rng rng(4);
  QPProblem qp = random_qp(rng, 4);
  qp.lb(2) = qp.ub(2) = 0.25;
  EXPECT_DOUBLE_EQ(solve_qp(qp).x(2), 0.25);
}

TEST(Qp, RejectsMalformedProblems) {
  Rng rng(5);
  QPProblem qp = random_qp(rng, 3);
  qp.lb(1) = qp.ub(1) + 1.0;
  try {
    solve_qp(qp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::structure);
  }
  qp = random_qp(rng, 3);
  qp.g.resize(2);
  EXPECT_THROW(solve_qp(qp), Error);
  qp = random_qp(rng, 3);
  qp.H = -qp.H;
  qp.lb.setConstant(-1e6);
  qp.ub.setConstant(1e6);
  try {
    solve_qp(qp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
}

// ----------------------------------------------------------- discretization

TEST(Discretize, DoubleIntegratorIsExact) {
  Mat4 a = Mat4::Zero();
  a.topRightCorner<2, 2>().setIdentity();
  Mat42 b = Mat42::Zero();
  b.bottomRows<2>() << 2.0, 0.5, -1.0, 3.0;
  const double dt = 0.02;
  const auto [ad, bd] = discretize(a, b, dt);
  Mat4 ad_ref = Mat4::Identity();
  ad_ref.topRightCorner<2, 2>() = dt * Mat2::Identity();
  Mat42 bd_ref;
  bd_ref << 0.5 * dt * dt * b.bottomRows<2>(), dt * b.bottomRows<2>();
  EXPECT_LT((ad - ad_ref).norm(), 1e-14);
  EXPECT_LT((bd - bd_ref).norm(), 1e-14);
}

// exp(A dt) and the integral of exp(A s) B by their power series.
TEST(Discretize, MatchesTaylorSeries) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat4 a = rng.gaussian(4, 4) * 3.0;
    const Mat42 b = rng.gaussian(4, 2);
    const double dt = 0.02;
    Mat4 ad = Mat4::Identity(), term = Mat4::Identity();
    Mat42 bd = Mat42::Zero();
    Mat4 int_term = Mat4::Identity() * dt;
    for (int k = 1; k < 30; ++k) {
      bd += int_term * b;
      term = term * a * dt / k;
      ad += term;
      int_term = int_term * a * dt / (k + 1);
    }
    const auto [ad2, bd2] = discretize(a, b, dt);
    EXPECT_LT((ad - ad2).norm(), 1e-12);
    EXPECT_LT((bd - bd2).norm(), 1e-13);
  }
}

// ------------------------------------------------------------ linearization

TEST(Linearize, ZeroGravityRestIsScaledDoubleIntegrator) {
  PlantModel p;
  p.arm.gravity = 0.0;
  ReferenceTrajectory ref(3);
  for (auto& s : ref) s.y = Vec2(0.4, -0.9);
  const double dt = 0.02;
  const LtvModel m = linearize_along(ref, p, dt);
  const Mat2 mb = mass_matrix(p.arm, ref[0].y).inverse() * p.arm.input_matrix();
  Mat4 ad = Mat4::Identity();
  ad.topRightCorner<2, 2>() = dt * Mat2::Identity();
  Mat42 bd;
  bd << 0.5 * dt * dt * mb, dt * mb;
  for (std::size_t k = 0; k < m.size(); ++k) {
    EXPECT_LT((m.a[k] - ad).norm(), 1e-12);
    EXPECT_LT((m.b[k] - bd).norm(), 1e-10);
    EXPECT_FALSE(m.nondifferentiable[k]);
  }
}

TEST(Linearize, JacobianMatchesFiniteDifferences) {
  Rng rng(7);
  PlantModel p;
  p.friction = {StribeckModel{1.2, 2.0, 10.0, 0.6, 4.0}, StribeckModel{0.8, 1.4, 20.0, 0.4, 6.0}};
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 y = rng.vec2(-2.0, 2.0), yd = rng.vec2(-2.0, 2.0), u = rng.vec2(-0.2, 0.2);
    const DynamicsJacobian jac = dynamics_jacobian(p, y, yd, u);
    auto f = [&](const Vec4& x, const Vec2& uu) {
      Vec4 out;
      out << x.tail<2>(), forward_dynamics(p, {x.head<2>(), x.tail<2>(), Vec2::Zero()}, uu);
      return out;
    };
    Vec4 x;
    x << y, yd;
    const double h = 1e-6;
    for (int c = 0; c < 4; ++c) {
      const Vec4 e = Vec4::Unit(c) * h;
      const Vec4 fd = (f(x + e, u) - f(x - e, u)) / (2.0 * h);
      EXPECT_LT((fd - jac.a.col(c)).norm(), 1e-5 * (1.0 + fd.norm())) << trial << " col " << c;
    }
    for (int c = 0; c < 2; ++c) {
      const Vec2 e = Vec2::Unit(c) * h;
      const Vec4 fd = (f(x, u + e) - f(x, u - e)) / (2.0 * h);
      EXPECT_LT((fd - jac.b.col(c)).norm(), 1e-5 * (1.0 + fd.norm()));
    }
  }
}

TEST(Linearize, StaticReferenceGivesConstantModel) {
  PlantModel p;
  ReferenceTrajectory ref(5);
  for (auto& s : ref) {
    s.y = Vec2(std::numbers::pi, 0.0);
    s.uff = inverse_dynamics(p, s.y, s.yd, s.ydd);
  }
  const LtvModel m = linearize_along(ref, p, 0.02);
  for (std::size_t k = 1; k < m.size(); ++k) {
    EXPECT_EQ(m.a[k], m.a[0]);
    EXPECT_EQ(m.b[k], m.b[0]);
  }
  EXPECT_EQ(m.a_at(100), m.a.back());
  EXPECT_THROW(linearize_along({}, p, 0.02), Error);
}

TEST(Linearize, FlagsSignTermAtRest) {
  PlantModel p;
  p.friction[1] =
      LibraryModel{FunctionLibrary::from_labels({"yd", "sgn(yd)"}), Eigen::Vector2d(0.5, 0.3)};
  ReferenceTrajectory ref(2);
  ref[1].yd = Vec2(0.0, 0.1);
  const LtvModel m = linearize_along(ref, p, 0.02);
  EXPECT_TRUE(m.nondifferentiable[0]);
  EXPECT_FALSE(m.nondifferentiable[1]);
}

// ------------------------------------------------------------- condensed QP

LtvModel random_ltv(Rng& rng, int n) {
  LtvModel m;
  for (int k = 0; k < n; ++k) {
    m.a.push_back(Mat4::Identity() + 0.05 * rng.gaussian(4, 4));
    m.b.push_back(0.1 * rng.gaussian(4, 2));
  }
  return m;
}

// Explicit rollout cost, the oracle for the condensed form.
double rollout_cost(const LtvModel& m, std::size_t start, const MpcConfig& cfg, const Vec4& x0,
                    const VectorXd& u) {
  Vec4 x = x0;
  double j = 0.0;
  for (int i = 0; i < cfg.horizon; ++i) {
    const Vec2 du = u.segment<2>(2 * i);
    j += du.dot(cfg.r * du);
    x = m.a_at(start + i) * x + m.b_at(start + i) * du;
    j += x.dot(cfg.q * x);
  }
  return j + x.dot(cfg.p * x);
}

TEST(CondensedQp, MatchesExplicitRollout) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    MpcConfig cfg;
    cfg.horizon = rng.integer(1, 12);
    const LtvModel m = random_ltv(rng, 20);
    const std::size_t start = static_cast<std::size_t>(rng.integer(0, 15));
    const Vec4 x0 = rng.gaussian(4, 1);
    const QPProblem qp = build_condensed_qp(m, start, cfg, x0, InputBox::unbounded(cfg.horizon));
    const double base = rollout_cost(m, start, cfg, x0, VectorXd::Zero(2 * cfg.horizon));
    for (int k = 0; k < 5; ++k) {
      const VectorXd u = rng.gaussian(2 * cfg.horizon, 1);
      const double direct = rollout_cost(m, start, cfg, x0, u) - base;
      EXPECT_NEAR(2.0 * qp.objective(u), direct, 1e-9 * (1.0 + std::abs(direct)));
    }
  }
}

TEST(CondensedQp, SingleStepClosedForm) {
  Rng rng(9);
  MpcConfig cfg;
  cfg.horizon = 1;
  const LtvModel m = random_ltv(rng, 1);
  const Vec4 x0 = rng.gaussian(4, 1);
  const QPProblem qp = build_condensed_qp(m, 0, cfg, x0, InputBox::unbounded(1));
  const Mat4 w = cfg.q + cfg.p;
  EXPECT_LT((qp.H - (m.b[0].transpose() * w * m.b[0] + cfg.r)).norm(), 1e-12);
  EXPECT_LT((qp.g - m.b[0].transpose() * w * m.a[0] * x0).norm(), 1e-12);
}

TEST(CondensedQp, ZeroErrorGivesZeroGradientAndPlan) {
  Rng rng(10);
  MpcConfig cfg;
  const LtvModel m = random_ltv(rng, 30);
  const QPProblem qp = build_condensed_qp(m, 3, cfg, Vec4::Zero(), InputBox::unbounded(cfg.horizon));
  EXPECT_EQ(qp.g, VectorXd::Zero(2 * cfg.horizon));
  EXPECT_LT(solve_qp(qp).x.norm(), 1e-15);
}

TEST(CondensedQp, InputWeightEntersBlockDiagonal) {
  Rng rng(11);
  MpcConfig cfg;
  const LtvModel m = random_ltv(rng, 30);
  const Vec4 x0 = rng.gaussian(4, 1);
  const auto box = InputBox::unbounded(cfg.horizon);
  const QPProblem a = build_condensed_qp(m, 0, cfg, x0, box);
  cfg.r *= 2.0;
  const QPProblem b = build_condensed_qp(m, 0, cfg, x0, box);
  MatrixXd expected = a.H;
  for (int i = 0; i < cfg.horizon; ++i) expected.block<2, 2>(2 * i, 2 * i) += cfg.r / 2.0;
  EXPECT_LT((b.H - expected).norm(), 1e-10 * a.H.norm());
  EXPECT_EQ(a.g, b.g);
}

TEST(CondensedQp, HeadroomBoundsTrackFeedforward) {
  ReferenceTrajectory ref(3);
  ref[0].uff = Vec2(0.1, -0.2);
  ref[1].uff = Vec2(0.0, 0.05);
  ref[2].uff = Vec2(-0.1, 0.0);
  const InputBox box = feedforward_headroom(ref, 1, 4, Vec2(0.3, 0.3));
  ASSERT_EQ(box.lower.size(), 4u);
  EXPECT_LT((box.upper[0] - Vec2(0.3, 0.25)).norm(), 1e-15);
  EXPECT_LT((box.lower[1] - Vec2(-0.2, -0.3)).norm(), 1e-15);
  EXPECT_EQ(box.lower[3], box.lower[1]);
}

// With the terminal weight set to the Riccati solution the finite horizon
// plan coincides with infinite-horizon LQR, so every plan step is -K x_i and
// replanning one step later reproduces the tail.
TEST(CondensedQp, RiccatiTerminalGivesRecedingHorizonConsistency) {
  PlantModel p;
  ReferenceTrajectory ref(2);
  for (auto& s : ref) {
    s.y = Vec2(std::numbers::pi, 0.0);
    s.uff = inverse_dynamics(p, s.y, s.yd, s.ydd);
  }
  const LtvModel m = linearize_along(ref, p, 0.02);
  const Mat4& a = m.a[0];
  const Mat42& b = m.b[0];
  MpcConfig cfg;
  Mat4 pr = cfg.q;
  for (int it = 0; it < 20000; ++it) {
    const Mat2 s = cfg.r + b.transpose() * pr * b;
    const Mat4 next = cfg.q + a.transpose() * pr * a -
                      a.transpose() * pr * b * s.ldlt().solve(b.transpose() * pr * a);
    const Mat4 sym = 0.5 * (next + next.transpose());
    const double change = (sym - pr).norm();
    pr = sym;
    if (change < 1e-12 * pr.norm()) break;
  }
  const Eigen::Matrix<double, 2, 4> k =
      (cfg.r + b.transpose() * pr * b).ldlt().solve(b.transpose() * pr * a);
  cfg.p = pr - cfg.q;
  cfg.p = 0.5 * (cfg.p + cfg.p.transpose()).eval();

  const Vec4 x0(0.05, -0.03, 0.1, 0.2);
  const auto box = InputBox::unbounded(cfg.horizon);
  const VectorXd plan = solve_qp(build_condensed_qp(m, 0, cfg, x0, box), 1e-14).x;
  Vec4 x = x0;
  for (int i = 0; i < cfg.horizon; ++i) {
    const Vec2 lqr = -k * x;
    EXPECT_LT((plan.segment<2>(2 * i) - lqr).norm(), 1e-6 * (1.0 + lqr.norm())) << i;
    x = a * x + b * plan.segment<2>(2 * i);
  }
  const Vec4 x1 = a * x0 + b * plan.head<2>();
  const VectorXd replanned = solve_qp(build_condensed_qp(m, 1, cfg, x1, box), 1e-14).x;
  EXPECT_LT((replanned.head(2 * cfg.horizon - 2) - plan.tail(2 * cfg.horizon - 2)).norm(),
            1e-6 * plan.norm());
}

// --------------------------------------------------------------- closed loop

PlantModel control_truth() {
  PlantModel p;
  p.friction = {StribeckModel{1.2, 2.0, 10.0, 0.6, 4.0}, StribeckModel{0.8, 1.4, 20.0, 0.4, 6.0}};
  return p;
}

ReferenceTrajectory control_reference(const PlantModel& nominal) {
  return attach_feedforward(gravity_compensated_pair({0.3, 1.0, 2.0, 10.0, 1.0, 0.02}), nominal);
}

TEST(ClosedLoop, PerfectModelNeedsAlmostNoCorrection) {
  const PlantModel truth = control_truth();
  const ClosedLoopLog log = run_closed_loop(truth, truth, control_reference(truth), MpcConfig{});
  EXPECT_LT(log.max_abs_umpc, 0.05 * log.max_abs_uff);
  EXPECT_LT(log.tracking_rmse, 1e-3);
  EXPECT_EQ(log.qp_failures, 0u);
  EXPECT_EQ(log.rows.size(), 501u);
}

TEST(ClosedLoop, MissingFrictionModelCostsCorrectionEffort) {
  const PlantModel truth = control_truth();
  const ClosedLoopLog perfect =
      run_closed_loop(truth, truth, control_reference(truth), MpcConfig{});
  const PlantModel blind = truth.without_friction();
  const ClosedLoopLog missing =
      run_closed_loop(truth, blind, control_reference(blind), MpcConfig{});
  EXPECT_GE(missing.mean_abs_umpc, 5.0 * perfect.mean_abs_umpc);
}

TEST(ClosedLoop, AppliedInputRespectsTorqueLimit) {
  PlantModel truth = control_truth();
  const PlantModel blind = truth.without_friction();
  const auto ref = control_reference(blind);
  PlantModel tight = blind;
  double peak = 0.0;
  for (const auto& s : ref) peak = std::max(peak, s.uff.cwiseAbs().maxCoeff());
  // Just above the feedforward peak so that corrections have to saturate.
  tight.arm.torque_limit = {1.02 * peak * tight.arm.gear_ratio[0],
                            1.02 * peak * tight.arm.gear_ratio[1]};
  const ClosedLoopLog log = run_closed_loop(truth, tight, ref, MpcConfig{});
  const Vec2 limit = tight.arm.input_limit();
  for (const auto& row : log.rows)
    for (int i = 0; i < 2; ++i) EXPECT_LE(std::abs(row.uff(i) + row.umpc(i)), limit(i) * (1 + 1e-9));
  EXPECT_GT(log.constraint_activations, 0u);
}

TEST(ClosedLoop, SignFrictionNominalStaysBounded) {
  const PlantModel truth = control_truth();
  PlantModel nominal = truth;
  for (int j = 0; j < 2; ++j)
    nominal.friction[j] = LibraryModel{FunctionLibrary::from_labels({"yd", "sgn(yd)"}),
                                       Eigen::Vector2d(1.0, j == 0 ? 2.0 : 1.4)};
  const ClosedLoopLog log =
      run_closed_loop(truth, nominal, control_reference(nominal), MpcConfig{});
  EXPECT_LT(log.max_abs_error, 0.05);
  EXPECT_EQ(log.qp_failures, 0u);
}

TEST(ClosedLoop, EncoderNoiseIsSeeded) {
  const PlantModel truth = control_truth();
  const auto ref = control_reference(truth);
  ClosedLoopOptions opt;
  opt.encoder = testing::benchmark_encoder();
  const ClosedLoopLog a = run_closed_loop(truth, truth, ref, MpcConfig{}, opt);
  const ClosedLoopLog b = run_closed_loop(truth, truth, ref, MpcConfig{}, opt);
  opt.seed = 2;
  const ClosedLoopLog c = run_closed_loop(truth, truth, ref, MpcConfig{}, opt);
  EXPECT_EQ(a.mean_abs_umpc, b.mean_abs_umpc);
  EXPECT_NE(a.mean_abs_umpc, c.mean_abs_umpc);
}

TEST(ClosedLoop, RejectsMismatchedGridAndBadConfig) {
  const PlantModel truth = control_truth();
  MpcConfig cfg;
  cfg.sample_dt = 0.01;
  try {
    run_closed_loop(truth, truth, control_reference(truth), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
  cfg = {};
  cfg.r(0, 0) = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.horizon = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace frictionid
