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
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "frictionid/error.hpp"
#include "frictionid/library.hpp"

namespace frictionid {

/// Five-parameter Stribeck template
///
///   tau(v) = a1 v + a2 tanh(a3 v) + a4 exp(-a5 |v|) tanh(3 a3 v)
///
/// a1 is viscous, a2 tanh(a3 v) is a smoothed Coulomb term and the last term
/// models the low-speed superelevation. The model is odd with tau(0) = 0.
struct StribeckModel {
  double a1 = 0.0;  // N m s/rad
  double a2 = 0.0;  // N m
  double a3 = 1.0;  // s/rad
  double a4 = 0.0;  // N m
  double a5 = 0.0;  // s/rad

  static StribeckModel from_array(const std::array<double, 5>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
  std::array<double, 5> to_array() const { return {a1, a2, a3, a4, a5}; }

  void validate() const {
    for (double x : to_array())
      if (!std::isfinite(x)) throw Error(ErrorKind::config, "stribeck parameter is not finite");
    if (!(a3 > 0.0)) throw Error(ErrorKind::config, "stribeck a3 must be > 0");
    if (!(a5 >= 0.0)) throw Error(ErrorKind::config, "stribeck a5 must be >= 0");
  }

  double operator()(double v) const {
    return a1 * v + a2 * std::tanh(a3 * v) +
           a4 * std::exp(-a5 * std::abs(v)) * std::tanh(3.0 * a3 * v);
  }

  // d tau / d v
  double slope(double v) const {
    const double t1 = std::tanh(a3 * v);
    const double t3 = std::tanh(3.0 * a3 * v);
    const double e = std::exp(-a5 * std::abs(v));
    const double sgn = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    return a1 + a2 * a3 * (1.0 - t1 * t1) +
           a4 * e * (3.0 * a3 * (1.0 - t3 * t3) - a5 * sgn * t3);
  }
};

inline double eval_stribeck(const StribeckModel& m, double v) { return m(v); }

/// Sparse linear combination of library columns, tau(v) = Theta(v) xi.
struct LibraryModel {
  FunctionLibrary library;
  Eigen::VectorXd coefficients;

  void validate() const {
    if (static_cast<std::size_t>(coefficients.size()) != library.size())
      throw Error(ErrorKind::structure,
                  "library model has " + std::to_string(coefficients.size()) +
                      " coefficients for a library of " + std::to_string(library.size()) +
                      " columns");
  }

  double operator()(double v) const {
    validate();
    return library.evaluate(v).dot(coefficients);
  }

  double slope(double v) const {
    validate();
    return library.derivative(v).dot(coefficients);
  }

  bool is_nondifferentiable_at(double v) const {
    for (std::size_t j = 0; j < library.size(); ++j)
      if (coefficients(j) != 0.0 && library.terms()[j].is_nondifferentiable_at(v)) return true;
    return false;
  }
};

inline double eval_library_model(const LibraryModel& m, double v) { return m(v); }

using FrictionModel = std::variant<StribeckModel, LibraryModel>;

inline FrictionModel no_friction() { return StribeckModel{}; }

inline double eval_friction(const FrictionModel& m, double v) {
  return std::visit([v](const auto& model) { return model(v); }, m);
}

inline double friction_slope(const FrictionModel& m, double v) {
  return std::visit([v](const auto& model) { return model.slope(v); }, m);
}

inline bool friction_nondifferentiable_at(const FrictionModel& m, double v) {
  if (const auto* lib = std::get_if<LibraryModel>(&m)) return lib->is_nondifferentiable_at(v);
  return false;
}

}  // namespace frictionid
