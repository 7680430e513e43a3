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
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frictionid/dynamics.hpp"
#include "frictionid/friction.hpp"
#include "frictionid/library.hpp"
#include "frictionid/regression.hpp"
#include "frictionid/simulation.hpp"

namespace frictionid {

/// Stacked samples: X = [y, yd], Xdot = [yd, ydd], U = u, one row per instant.
struct DataMatrices {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Xdot;
  Eigen::MatrixXd U;
  Eigen::VectorXd timestamps;

  void validate() const {
    const Index m = X.rows();
    if (Xdot.rows() != m || U.rows() != m || timestamps.size() != m)
      throw Error(ErrorKind::data, "data matrices have inconsistent row counts");
    if (!X.allFinite() || !Xdot.allFinite() || !U.allFinite() || !timestamps.allFinite())
      throw Error(ErrorKind::data, "data matrices contain NaN or Inf");
  }
};

inline DataMatrices build_data_matrices(const TimeSeries& ts) {
  const auto m = static_cast<Index>(ts.size());
  DataMatrices d{Eigen::MatrixXd(m, 4), Eigen::MatrixXd(m, 4), Eigen::MatrixXd(m, 2),
                 Eigen::VectorXd(m)};
  for (Index i = 0; i < m; ++i) {
    const Sample& s = ts[static_cast<std::size_t>(i)];
    d.X.row(i) << s.y.transpose(), s.yd.transpose();
    d.Xdot.row(i) << s.yd.transpose(), s.ydd.transpose();
    d.U.row(i) = s.u.transpose();
    d.timestamps(i) = s.t;
  }
  d.validate();
  return d;
}

struct PreprocessingStep {
  std::string name;
  double threshold = 0.0;
  double retained_fraction = 1.0;
  std::size_t rows_before = 0;
  std::size_t rows_after = 0;
};

/// Velocity/friction pairs for one joint.
struct IdentificationDataset {
  int joint = 0;  // 0-based
  std::vector<double> velocity;
  std::vector<double> friction_torque;
  std::vector<Vec2> position;  // both joint angles per row, kept aligned
  std::string source_id;
  std::vector<PreprocessingStep> preprocessing;

  std::size_t size() const { return velocity.size(); }

  std::vector<double> angle(int j) const {
    std::vector<double> out(position.size());
    for (std::size_t i = 0; i < position.size(); ++i) out[i] = position[i](j);
    return out;
  }

  IdentificationDataset subset(const std::vector<std::size_t>& rows) const {
    IdentificationDataset out;
    out.joint = joint;
    out.source_id = source_id;
    out.preprocessing = preprocessing;
    for (std::size_t i : rows) {
      out.velocity.push_back(velocity[i]);
      out.friction_torque.push_back(friction_torque[i]);
      out.position.push_back(position[i]);
    }
    return out;
  }
};

/// tau = q*(y) + B u - M(y) ydd - k(y, yd) using the friction-free part of
/// the nominal model, for every sample and both joints.
inline std::array<IdentificationDataset, 2> residual_friction_torque(const PlantModel& nominal,
                                                                     const TimeSeries& data,
                                                                     const std::string& source_id) {
  const ArmParameters& arm = nominal.arm;
  const Mat2 b = arm.input_matrix();
  std::array<IdentificationDataset, 2> out;
  for (int j = 0; j < 2; ++j) {
    out[j].joint = j;
    out[j].source_id = source_id;
    out[j].velocity.reserve(data.size());
    out[j].friction_torque.reserve(data.size());
  }
  for (const Sample& s : data) {
    if (!s.y.allFinite() || !s.yd.allFinite() || !s.ydd.allFinite() || !s.u.allFinite())
      throw Error(ErrorKind::data, "residual torque needs finite y, yd, ydd and u");
    const Vec2 tau = gravity_forces(arm, s.y) + b * s.u - mass_matrix(arm, s.y) * s.ydd -
                     coriolis_vector(arm, s.y, s.yd);
    for (int j = 0; j < 2; ++j) {
      out[j].velocity.push_back(s.yd(j));
      out[j].friction_torque.push_back(tau(j));
      out[j].position.push_back(s.y);
    }
  }
  return out;
}

/// Keeps rows with |angle| < threshold.
inline IdentificationDataset preprocess_small_angle(const IdentificationDataset& ds,
                                                    std::span<const double> angle,
                                                    double threshold) {
  if (angle.size() != ds.size())
    throw Error(ErrorKind::data, "angle channel is not aligned with the dataset");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < angle.size(); ++i)
    if (std::abs(angle[i]) < threshold) keep.push_back(i);
  if (keep.empty()) {
    std::ostringstream msg;
    msg << "no samples with |angle| < " << threshold << " rad remain after preprocessing";
    throw Error(ErrorKind::empty_selection, msg.str());
  }
  IdentificationDataset out = ds.subset(keep);
  PreprocessingStep step;
  step.name = "small_angle";
  step.threshold = threshold;
  step.rows_before = ds.size();
  step.rows_after = keep.size();
  step.retained_fraction = static_cast<double>(keep.size()) / static_cast<double>(ds.size());
  out.preprocessing.push_back(step);
  return out;
}

enum class IdentificationMethod { stls, lasso_cv };

struct IdentifyOptions {
  IdentificationMethod method = IdentificationMethod::stls;
  double lambda = 0.1;  // stls threshold on unit-norm columns
  int cv_folds = 5;
  std::vector<double> lambda_grid;  // empty: default grid
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct Identification {
  LibraryModel model;
  SparseSolution solution;
  double rmse = 0.0;  // training fit
  std::vector<std::string> warnings;
  std::vector<CvPoint> cv_curve;  // lasso_cv only
};

inline bool velocities_span_both_signs(std::span<const double> v) {
  bool pos = false, neg = false;
  for (double x : v) {
    pos = pos || x > 0.0;
    neg = neg || x < 0.0;
  }
  return pos && neg;
}

inline RegressionProblem friction_regression_problem(const IdentificationDataset& ds,
                                                     const FunctionLibrary& lib) {
  RegressionProblem p;
  p.design = lib.design(ds.velocity);
  p.target = Eigen::Map<const Eigen::VectorXd>(ds.friction_torque.data(),
                                               static_cast<Index>(ds.friction_torque.size()));
  p.column_labels = lib.labels();
  return p;
}

/// Sparse regression of the residual friction torque on Theta(yd).
inline Identification identify_friction(const IdentificationDataset& ds,
                                        const FunctionLibrary& lib,
                                        const IdentifyOptions& opt = {}) {
  if (ds.size() == 0) throw Error(ErrorKind::empty_selection, "identification dataset is empty");
  const RegressionProblem p = friction_regression_problem(ds, lib);

  Identification out;
  if (!velocities_span_both_signs(ds.velocity))
    out.warnings.push_back(
        "velocity data covers only one sign; odd and even library terms are not separable");

  if (opt.method == IdentificationMethod::stls) {
    out.solution = solve_stls(p, opt.lambda);
  } else {
    CvResult cv = lasso_cv(p, opt.lambda_grid, opt.cv_folds, opt.seed, opt.jobs);
    out.solution = std::move(cv.solution);
    out.cv_curve = std::move(cv.curve);
  }
  if (out.solution.all_pruned) out.warnings.push_back("every library column was pruned");
  if (out.solution.rank_deficient) out.warnings.push_back("library matrix is rank deficient");
  if (!out.solution.converged) out.warnings.push_back("solver did not converge");
  out.model = LibraryModel{lib, out.solution.xi};
  out.rmse = out.solution.residual_norm / std::sqrt(static_cast<double>(ds.size()));
  return out;
}

/// RMS difference between a model and reference torques at the given velocities.
template <typename Model>
double model_rmse(const Model& model, std::span<const double> velocity,
                  std::span<const double> torque) {
  double sum = 0.0;
  for (std::size_t i = 0; i < velocity.size(); ++i) {
    const double e = model(velocity[i]) - torque[i];
    sum += e * e;
  }
  return velocity.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(velocity.size()));
}

}  // namespace frictionid
