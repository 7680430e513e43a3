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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"

namespace frictionid {
namespace {

using testing::Rng;

TimeSeries sine_series(std::size_t n, double dt) {
  TimeSeries ts(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    ts[k].t = t;
    ts[k].y = Vec2(0.5 * std::sin(t), 0.3 * std::cos(2 * t));
    ts[k].yd = Vec2(0.5 * std::cos(t), -0.6 * std::sin(2 * t));
  }
  return ts;
}

TEST(Encoder, FineGridWithoutNoiseIsTransparent) {
  const TimeSeries truth = sine_series(200, 0.02);
  const TimeSeries m = quantize_measurements(truth, EncoderSpec{1e-15, 0.0, 0.0}, 1);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    EXPECT_LT((m[k].y - truth[k].y).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(m[k].yd, truth[k].yd);
    EXPECT_EQ(m[k].u, truth[k].u);
    EXPECT_TRUE(std::isnan(m[k].ydd(0)));
  }
}

TEST(Encoder, ConstantPositionGivesConstantReadout) {
  TimeSeries truth(50);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    truth[k].t = 0.02 * static_cast<double>(k);
    truth[k].y = Vec2(0.123456, -0.5);
  }
  const TimeSeries m = quantize_measurements(truth, EncoderSpec{1e-4, 0.01, 0.0}, 3);
  for (const auto& s : m) {
    EXPECT_EQ(s.y, m.front().y);
    EXPECT_EQ(s.yd, Vec2::Zero());
  }
}

// |q - y| <= step/2 + |noise|, so exceeding step/2 + 3 sigma needs a 3-sigma
// draw: at most P(|N| > 3) = 0.27% of readings, and none beyond 6 sigma.
TEST(Encoder, ErrorBoundedByHalfStepPlusNoiseTail) {
  const TimeSeries truth = sine_series(1500, 0.02);
  const EncoderSpec spec{1e-3, 0.01, 1e-5};
  std::size_t beyond = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TimeSeries m = quantize_measurements(truth, spec, seed);
    for (std::size_t k = 0; k < truth.size(); ++k)
      for (int j = 0; j < 2; ++j) {
        const double err = std::abs(m[k].y(j) - truth[k].y(j));
        EXPECT_LE(err, spec.resolution / 2 + 6 * spec.noise_std);
        beyond += err > spec.resolution / 2 + 3 * spec.noise_std;
        ++total;
      }
  }
  EXPECT_LE(static_cast<double>(beyond) / static_cast<double>(total), 0.0027);
}

TEST(Encoder, DeterministicUnderSeed) {
  const TimeSeries truth = sine_series(300, 0.02);
  const EncoderSpec spec{1e-4, 0.01, 1e-4};
  const TimeSeries a = quantize_measurements(truth, spec, 42);
  const TimeSeries b = quantize_measurements(truth, spec, 42);
  const TimeSeries c = quantize_measurements(truth, spec, 43);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].y, b[k].y);
    differs = differs || a[k].y != c[k].y;
  }
  EXPECT_TRUE(differs);
}

TEST(FiniteDifference, ExactOnRamp) {
  std::vector<double> y(20);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.7 + 1.9 * 0.05 * static_cast<double>(i);
  for (double d : finite_difference(y, 0.05)) EXPECT_NEAR(d, 1.9, 1e-12);
}

TEST(FiniteDifference, CentralDifferenceOfSine) {
  const double dt = 1e-3;
  std::vector<double> y(3000);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(dt * static_cast<double>(i));
  const auto d = finite_difference(y, dt);
  for (std::size_t i = 1; i + 1 < y.size(); ++i)
    EXPECT_NEAR(d[i], std::cos(dt * static_cast<double>(i)), 1e-6);
}

TEST(FiniteDifference, NeedsThreeSamples) {
  EXPECT_THROW(finite_difference(std::vector<double>{1.0, 2.0}, 0.1), Error);
}

TVDiffConfig tv_config(double alpha, double dt) {
  TVDiffConfig c;
  c.alpha = alpha;
  c.dt = dt;
  return c;
}

TEST(TVDiff, RampHasConstantDerivative) {
  std::vector<double> y(200);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.4 - 1.3 * 0.02 * static_cast<double>(i);
  const TVDiffResult r = tvdiff(y, tv_config(1e-2, 0.02));
  for (double d : r.derivative) EXPECT_NEAR(d, -1.3, 1e-6);
  double tv = 0.0;
  for (std::size_t i = 1; i < r.derivative.size(); ++i)
    tv += std::abs(r.derivative[i] - r.derivative[i - 1]);
  EXPECT_LT(tv, 1e-5);
}

// Derivative jumps from 0 to 1 at t = 2; the antiderivative carries noise.
TEST(TVDiff, RecoversSharpStep) {
  const double dt = 0.01;
  const std::size_t n = 401, jump = 200;
  Rng rng(31);
  std::vector<double> y(n), truth(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = i >= jump ? 1.0 : 0.0;
    y[i] = (i > jump ? dt * static_cast<double>(i - jump) : 0.0) + 1e-4 * rng.normal();
  }
  const TVDiffResult r = tvdiff(y, tv_config(1e-3, dt));
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 2 >= jump && i <= jump + 2) continue;
    EXPECT_NEAR(r.derivative[i], truth[i], 0.1) << "sample " << i;
  }
}

// Both equivariances are properties of the minimizer, so they are checked
// with a solve that runs far past the default iteration caps.
TVDiffConfig converged_config(double dt) {
  TVDiffConfig c = tv_config(1e-2, dt);
  c.iterations = 2000;
  c.cg_max_iterations = 2000;
  c.tolerance = 1e-15;
  return c;
}

std::vector<double> short_signal(std::uint64_t seed) {
  const auto s = testing::synthetic_signal(seed);
  return std::vector<double>(s.y.begin(), s.y.begin() + 201);
}

TEST(TVDiff, TranslationEquivariant) {
  const std::vector<double> y = short_signal(5);
  std::vector<double> shifted = y;
  for (double& v : shifted) v += 17.25;
  const TVDiffConfig c = converged_config(0.01);
  const auto a = tvdiff(y, c).derivative;
  const auto b = tvdiff(shifted, c).derivative;
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-8);
}

// Scaling y by c scales the fidelity term by c^2 and the smoothed TV term by
// c once epsilon is scaled by c^2, so alpha must scale by c.
TEST(TVDiff, ScaleEquivariant) {
  const std::vector<double> y = short_signal(6);
  const double c = 3.5;
  std::vector<double> scaled = y;
  for (double& v : scaled) v *= c;
  const TVDiffConfig base = converged_config(0.01);
  TVDiffConfig big = base;
  big.alpha *= c;
  big.epsilon *= c * c;
  const auto a = tvdiff(y, base).derivative;
  const auto b = tvdiff(scaled, big).derivative;
  double worst = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(c * a[i] - b[i]));
    peak = std::max(peak, std::abs(b[i]));
  }
  EXPECT_LT(worst / peak, 1e-6);
}

TEST(TVDiff, ObjectiveNeverIncreases) {
  const auto s = testing::synthetic_signal(7);
  for (double alpha : {1e-3, 1e-2, 1e-1}) {
    const TVDiffResult r = tvdiff(s.y, tv_config(alpha, s.dt));
    ASSERT_GE(r.objective.size(), 2u);
    for (std::size_t k = 1; k < r.objective.size(); ++k)
      EXPECT_LE(r.objective[k], r.objective[k - 1]);
    EXPECT_LT(r.objective.back(), r.objective.front());
  }
}

TEST(TVDiff, IterationCapReportsBestIterate) {
  const auto s = testing::synthetic_signal(8);
  TVDiffConfig c = tv_config(1e-2, s.dt);
  c.iterations = 1;
  c.tolerance = 0.0;
  const TVDiffResult r = tvdiff(s.y, c);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_GT(r.gradient_norm, 0.0);
}

TEST(TVDiff, BeatsFiniteDifferencesOnSyntheticBenchmark) {
  const auto s = testing::synthetic_signal(9);
  const double fd = testing::rmse(finite_difference(s.y, s.dt), s.dy);
  const double tv = testing::rmse(tvdiff(s.y, tv_config(1e-2, s.dt)).derivative, s.dy);
  EXPECT_LT(3.0 * tv, fd);
}

TEST(TVDiff, RejectsBadConfig) {
  std::vector<double> y(10, 0.0);
  EXPECT_THROW(tvdiff(y, tv_config(0.0, 0.02)), Error);
  EXPECT_THROW(tvdiff(y, tv_config(1e-3, -1.0)), Error);
  EXPECT_THROW(tvdiff(std::vector<double>{1.0, 2.0}, tv_config(1e-3, 0.02)), Error);
}

TEST(Differentiation, ReplacesVelocityAndAcceleration) {
  TimeSeries ts = sine_series(300, 0.02);
  for (auto& s : ts) {
    s.yd = Vec2(99.0, 99.0);
    s.ydd.setConstant(std::nan(""));
  }
  DifferentiationReport rep;
  const TimeSeries out = differentiate_measurements(ts, tv_config(1e-5, 0.02), tv_config(1e-4, 0.02), &rep);
  for (std::size_t k = 10; k + 10 < out.size(); ++k) {
    const double t = out[k].t;
    EXPECT_NEAR(out[k].yd(0), 0.5 * std::cos(t), 1e-2);
    EXPECT_NEAR(out[k].ydd(0), -0.5 * std::sin(t), 5e-2);
    EXPECT_EQ(out[k].y, ts[k].y);
  }
  EXPECT_EQ(rep.velocity[1].derivative.size(), ts.size());
}

// The shipped alphas are the RMSE minimizers of a fixed sweep on the
// identification benchmark (truth velocities and accelerations known).
TEST(TVDiff, DefaultAlphasAreSweepMinimizers) {
  const PlantModel truth = testing::benchmark_truth();
  const auto ref = attach_feedforward(gravity_compensated_pair(testing::benchmark_spec()),
                                      truth.without_friction());
  const TimeSeries ts = run_experiment(truth, ref, Vec2(60, 60), Vec2(12, 12));
  const TimeSeries meas = quantize_measurements(ts, testing::benchmark_encoder(), 1);
  std::vector<double> y(ts.size());

  auto argmin = [](const std::vector<double>& grid, auto&& cost) {
    std::size_t best = 0;
    std::vector<double> c;
    for (double a : grid) c.push_back(cost(a));
    for (std::size_t i = 1; i < c.size(); ++i)
      if (c[i] < c[best]) best = i;
    return grid[best];
  };

  const std::vector<double> velocity_grid{3e-6, 1e-5, 2e-5, 3e-5, 5e-5, 1e-4, 3e-4};
  const double av = argmin(velocity_grid, [&](double alpha) {
    double e = 0.0;
    for (int j = 0; j < 2; ++j) {
      for (std::size_t i = 0; i < ts.size(); ++i) y[i] = meas[i].y(j);
      const auto d = tvdiff(y, tv_config(alpha, 0.02)).derivative;
      for (std::size_t i = 0; i < ts.size(); ++i) e += std::pow(d[i] - ts[i].yd(j), 2);
    }
    return e;
  });

  const std::vector<double> acceleration_grid{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  const double aa = argmin(acceleration_grid, [&](double alpha) {
    double e = 0.0;
    for (int j = 0; j < 2; ++j) {
      for (std::size_t i = 0; i < ts.size(); ++i) y[i] = meas[i].y(j);
      const auto v = tvdiff(y, tv_config(av, 0.02)).derivative;
      const auto d = tvdiff(v, tv_config(alpha, 0.02)).derivative;
      for (std::size_t i = 0; i < ts.size(); ++i) e += std::pow(d[i] - ts[i].ydd(j), 2);
    }
    return e;
  });

  const ExperimentConfig defaults;
  EXPECT_EQ(av, defaults.tvdiff_velocity.alpha);
  EXPECT_EQ(aa, defaults.tvdiff_acceleration.alpha);
  EXPECT_EQ(av, testing::kTvAlphaVelocity);
  EXPECT_EQ(aa, testing::kTvAlphaAcceleration);
}

}  // namespace
}  // namespace frictionid
