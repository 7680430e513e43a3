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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frictionid/dynamics.hpp"
#include "frictionid/error.hpp"
#include "frictionid/friction.hpp"
#include "frictionid/library.hpp"
#include "frictionid/mpc.hpp"
#include "frictionid/nlreg.hpp"
#include "frictionid/signals.hpp"
#include "frictionid/trajectory.hpp"

namespace frictionid {

struct JointIdentificationConfig {
  std::optional<double> small_angle_threshold;  // rad; empty: no preprocessing
  int angle_joint = 0;                          // 0-based joint whose angle is filtered
};

/// Everything a CLI run needs. Every field has a default, so `{}` is a
/// valid configuration file.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  ArmParameters arm;
  std::array<FrictionModel, 2> plant_friction{StribeckModel{0.6, 1.5, 10.0, 0.4, 4.0},
                                              StribeckModel{0.6, 0.9, 20.0, 0.3, 6.0}};

  // Identification experiment.
  SineTrajectorySpec trajectory{0.5, 1.0, 1.75, 30.0, 2.0, 0.02};
  Vec2 base_pose = Vec2::Zero();
  Vec2 joint_gain = Vec2(1.0, -1.0);
  double internal_dt = 0.001;
  Vec2 kp = Vec2(60.0, 60.0);  // N m / rad, joint side
  Vec2 kd = Vec2(12.0, 12.0);  // N m s / rad
  std::array<FrictionModel, 2> feedforward_friction{no_friction(), no_friction()};

  bool encoder_enabled = true;
  EncoderSpec encoder{1e-4, 0.01, 1e-5};

  bool tvdiff_enabled = true;
  TVDiffConfig tvdiff_velocity = [] {
    TVDiffConfig c;
    c.alpha = 2e-5;
    return c;
  }();
  TVDiffConfig tvdiff_acceleration = [] {
    TVDiffConfig c;
    c.alpha = 3e-4;
    return c;
  }();

  std::array<JointIdentificationConfig, 2> identification{JointIdentificationConfig{std::nullopt, 0},
                                                          JointIdentificationConfig{std::nullopt, 1}};
  Vec2 nominal_link_mass_scale = Vec2::Ones();

  std::string method = "stls";  // stls | lasso | nlreg
  double lambda = 5.0;
  std::vector<std::string> library = default_friction_library().labels();
  int cv_folds = 5;
  std::vector<double> lambda_grid;  // empty: default grid per joint
  NlRegConfig nlreg;

  // Tracking experiment.
  MpcConfig mpc;
  SineTrajectorySpec control_trajectory{0.3, 1.0, 2.0, 10.0, 1.0, 0.02};
  Vec2 control_base_pose = Vec2::Zero();
  Vec2 control_joint_gain = Vec2(1.0, -1.0);
  bool control_encoder = false;

  // Model comparison grid.
  double compare_velocity_max = 25.0 * 2.0 * std::numbers::pi / 60.0;
  int compare_points = 501;

  FunctionLibrary function_library() const { return FunctionLibrary::from_labels(library); }

  PlantModel true_plant() const { return PlantModel{arm, plant_friction}; }

  /// Rigid-body model used for residual torques: the arm with scaled link masses.
  PlantModel identification_model() const {
    PlantModel m{arm, {no_friction(), no_friction()}};
    m.arm.link_mass[0] *= nominal_link_mass_scale(0);
    m.arm.link_mass[1] *= nominal_link_mass_scale(1);
    return m;
  }

  void validate() const {
    arm.validate();
    for (const auto& f : plant_friction) std::visit([](const auto& m) { m.validate(); }, f);
    trajectory.validate();
    control_trajectory.validate();
    encoder.validate();
    tvdiff_velocity.validate();
    tvdiff_acceleration.validate();
    mpc.validate();
    if (!(internal_dt > 0.0)) throw Error(ErrorKind::config, "simulation.internal_dt must be > 0");
    if (method != "stls" && method != "lasso" && method != "nlreg")
      throw Error(ErrorKind::config, "solver.method must be one of stls, lasso, nlreg");
    if (!(lambda > 0.0)) throw Error(ErrorKind::config, "solver.lambda must be > 0");
    if (cv_folds < 2) throw Error(ErrorKind::config, "solver.cv_folds must be >= 2");
    for (double l : lambda_grid)
      if (!(l >= 0.0)) throw Error(ErrorKind::config, "solver.lambda_grid entries must be >= 0");
    for (const auto& j : identification) {
      if (j.angle_joint < 0 || j.angle_joint > 1)
        throw Error(ErrorKind::config, "identification.joints[].angle_joint must be 1 or 2");
      if (j.small_angle_threshold && !(*j.small_angle_threshold > 0.0))
        throw Error(ErrorKind::config, "identification.joints[].small_angle_threshold must be > 0");
    }
    if (!(nominal_link_mass_scale.array() > 0.0).all())
      throw Error(ErrorKind::config, "identification.link_mass_scale must be > 0");
    if (std::abs(mpc.sample_dt - control_trajectory.sample_dt) > 1e-12)
      throw Error(ErrorKind::config, "control.trajectory.sample_dt must equal mpc.sample_dt");
    if (!(compare_velocity_max > 0.0) || compare_points < 2)
      throw Error(ErrorKind::config, "compare needs velocity_max > 0 and points >= 2");
    (void)function_library();
  }
};

namespace config_detail {

using nlohmann::json;

/// Reads the keys of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorKind::config, where() + " must be an object");
  }

  template <typename T>
  bool get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return false;
    try {
      read(j_.at(key), out);
    } catch (const json::exception&) {
      throw Error(ErrorKind::config, "field " + field(key) + " has the wrong type");
    }
    return true;
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) {
    used_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, field(key));
  }

  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw Error(ErrorKind::config, "unknown field " + field(key));
  }

 private:
  std::string where() const { return path_.empty() ? "configuration" : path_; }

  static void read(const json& v, double& out) {
    if (!v.is_number()) throw json::type_error::create(302, "number expected", &v);
    out = v.get<double>();
  }
  static void read(const json& v, int& out) {
    if (!v.is_number_integer()) throw json::type_error::create(302, "integer expected", &v);
    out = v.get<int>();
  }
  static void read(const json& v, std::uint64_t& out) {
    if (!v.is_number_unsigned()) throw json::type_error::create(302, "unsigned expected", &v);
    out = v.get<std::uint64_t>();
  }
  static void read(const json& v, bool& out) { out = v.get<bool>(); }
  static void read(const json& v, std::string& out) { out = v.get<std::string>(); }
  static void read(const json& v, std::vector<std::string>& out) {
    out = v.get<std::vector<std::string>>();
  }
  static void read(const json& v, std::vector<double>& out) { out = v.get<std::vector<double>>(); }
  static void read(const json& v, std::array<double, 2>& out) {
    const auto x = v.get<std::vector<double>>();
    if (x.size() != 2) throw json::type_error::create(302, "pair expected", &v);
    out = {x[0], x[1]};
  }
  static void read(const json& v, Vec2& out) {
    std::array<double, 2> a{};
    read(v, a);
    out << a[0], a[1];
  }
  static void read(const json& v, Vec4& out) {
    const auto x = v.get<std::vector<double>>();
    if (x.size() != 4) throw json::type_error::create(302, "four values expected", &v);
    out << x[0], x[1], x[2], x[3];
  }
  static void read(const json& v, std::optional<double>& out) {
    if (v.is_null()) {
      out.reset();
      return;
    }
    double x = 0.0;
    read(v, x);
    out = x;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline FrictionModel read_friction(Section s) {
  std::string form;
  if (!s.get("form", form)) throw Error(ErrorKind::config, "field " + s.field("form") + " is required");
  FrictionModel out = no_friction();
  if (form == "none") {
    out = no_friction();
  } else if (form == "stribeck") {
    std::vector<double> a;
    if (!s.get("a", a) || a.size() != 5)
      throw Error(ErrorKind::config, "field " + s.field("a") + " needs five parameters");
    StribeckModel m = StribeckModel::from_array({a[0], a[1], a[2], a[3], a[4]});
    try {
      m.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::config, s.field("a") + ": " + e.what());
    }
    out = m;
  } else if (form == "library") {
    std::vector<std::string> labels;
    std::vector<double> coef;
    if (!s.get("labels", labels) || !s.get("coefficients", coef))
      throw Error(ErrorKind::config, s.field("") + "library form needs labels and coefficients");
    if (labels.size() != coef.size())
      throw Error(ErrorKind::config, s.field("coefficients") + " must match labels in length");
    out = LibraryModel{FunctionLibrary::from_labels(labels),
                       Eigen::Map<const Eigen::VectorXd>(coef.data(),
                                                         static_cast<Eigen::Index>(coef.size()))};
  } else {
    throw Error(ErrorKind::config, "field " + s.field("form") + " must be none, stribeck or library");
  }
  s.finish();
  return out;
}

inline void read_pair_of_models(Section& s, const char* key, std::array<FrictionModel, 2>& out) {
  if (!s.has(key)) return;
  const json& arr = s.raw(key);
  if (!arr.is_array() || arr.size() != 2)
    throw Error(ErrorKind::config, "field " + s.field(key) + " must list two joint models");
  for (int i = 0; i < 2; ++i)
    out[i] = read_friction(Section(arr[i], s.field(key) + "[" + std::to_string(i) + "]"));
}

inline void read_sine(Section& s, SineTrajectorySpec& t) {
  s.get("amplitude", t.amplitude);
  s.get("omega_start", t.omega_start);
  s.get("omega_end", t.omega_end);
  s.get("duration", t.duration);
  s.get("ramp_duration", t.ramp_duration);
  s.get("sample_dt", t.sample_dt);
}

inline void read_tvdiff(Section s, TVDiffConfig& c) {
  s.get("alpha", c.alpha);
  s.get("iterations", c.iterations);
  s.get("epsilon", c.epsilon);
  s.get("cg_max_iterations", c.cg_max_iterations);
  s.get("cg_tolerance", c.cg_tolerance);
  s.get("tolerance", c.tolerance);
  std::string guess;
  if (s.get("initial_guess", guess)) {
    if (guess == "finite_difference")
      c.initial_guess = TVDiffConfig::InitialGuess::finite_difference;
    else if (guess == "zero")
      c.initial_guess = TVDiffConfig::InitialGuess::zero;
    else
      throw Error(ErrorKind::config,
                  "field " + s.field("initial_guess") + " must be finite_difference or zero");
  }
  s.finish();
}

}  // namespace config_detail

/// Builds a configuration from JSON text. Unknown keys and wrong types are
/// config errors that name the offending field.
inline ExperimentConfig parse_config(const std::string& text) {
  using config_detail::Section;
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("configuration is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section top(root, "");
  top.get("seed", c.seed);

  {
    Section s = top.child("arm");
    s.get("link_mass", c.arm.link_mass);
    s.get("link_length", c.arm.link_length);
    s.get("link_com_distance", c.arm.link_com_distance);
    s.get("link_inertia", c.arm.link_inertia);
    s.get("gear_ratio", c.arm.gear_ratio);
    s.get("motor_constant", c.arm.motor_constant);
    s.get("gravity", c.arm.gravity);
    s.get("torque_limit", c.arm.torque_limit);
    s.get("velocity_limit", c.arm.velocity_limit);
    s.finish();
  }
  {
    Section s = top.child("plant");
    config_detail::read_pair_of_models(s, "friction", c.plant_friction);
    s.finish();
  }
  {
    Section s = top.child("trajectory");
    config_detail::read_sine(s, c.trajectory);
    s.get("base_pose", c.base_pose);
    s.get("joint_gain", c.joint_gain);
    s.finish();
  }
  {
    Section s = top.child("simulation");
    s.get("internal_dt", c.internal_dt);
    s.get("kp", c.kp);
    s.get("kd", c.kd);
    config_detail::read_pair_of_models(s, "feedforward_friction", c.feedforward_friction);
    s.finish();
  }
  {
    Section s = top.child("encoder");
    s.get("enabled", c.encoder_enabled);
    s.get("resolution", c.encoder.resolution);
    s.get("velocity_word_resolution", c.encoder.velocity_word_resolution);
    s.get("noise_std", c.encoder.noise_std);
    s.finish();
  }
  {
    Section s = top.child("tvdiff");
    s.get("enabled", c.tvdiff_enabled);
    config_detail::read_tvdiff(s.child("velocity"), c.tvdiff_velocity);
    config_detail::read_tvdiff(s.child("acceleration"), c.tvdiff_acceleration);
    s.finish();
  }
  {
    Section s = top.child("identification");
    s.get("link_mass_scale", c.nominal_link_mass_scale);
    if (s.has("joints")) {
      const auto& arr = s.raw("joints");
      if (!arr.is_array() || arr.size() != 2)
        throw Error(ErrorKind::config, "field identification.joints must have two entries");
      for (int i = 0; i < 2; ++i) {
        Section js(arr[i], "identification.joints[" + std::to_string(i) + "]");
        js.get("small_angle_threshold", c.identification[i].small_angle_threshold);
        int aj = c.identification[i].angle_joint + 1;
        js.get("angle_joint", aj);
        c.identification[i].angle_joint = aj - 1;
        js.finish();
      }
    }
    s.finish();
  }
  {
    Section s = top.child("solver");
    s.get("method", c.method);
    s.get("lambda", c.lambda);
    s.get("library", c.library);
    s.get("cv_folds", c.cv_folds);
    s.get("lambda_grid", c.lambda_grid);
    s.finish();
  }
  {
    Section s = top.child("nlreg");
    if (s.has("initial_guess")) {
      std::vector<double> a;
      s.get("initial_guess", a);
      if (a.size() != 5)
        throw Error(ErrorKind::config, "field nlreg.initial_guess needs five parameters");
      c.nlreg.initial_guess = StribeckModel::from_array({a[0], a[1], a[2], a[3], a[4]});
    }
    s.get("max_iterations", c.nlreg.max_iterations);
    s.get("gradient_tolerance", c.nlreg.gradient_tolerance);
    s.get("step_tolerance", c.nlreg.step_tolerance);
    s.get("damping_init", c.nlreg.damping_init);
    s.finish();
  }
  {
    Section s = top.child("mpc");
    s.get("horizon", c.mpc.horizon);
    Vec4 q = c.mpc.q.diagonal(), p = c.mpc.p.diagonal();
    Vec2 r = c.mpc.r.diagonal();
    if (s.get("q_diag", q)) c.mpc.q = q.asDiagonal();
    if (s.get("p_diag", p)) c.mpc.p = p.asDiagonal();
    if (s.get("r_diag", r)) c.mpc.r = r.asDiagonal();
    s.get("sample_dt", c.mpc.sample_dt);
    s.get("qp_tolerance", c.mpc.qp_tolerance);
    s.finish();
  }
  {
    Section s = top.child("control");
    {
      Section t = s.child("trajectory");
      config_detail::read_sine(t, c.control_trajectory);
      t.get("base_pose", c.control_base_pose);
      t.get("joint_gain", c.control_joint_gain);
      t.finish();
    }
    s.get("encoder", c.control_encoder);
    s.finish();
  }
  {
    Section s = top.child("compare");
    s.get("velocity_max", c.compare_velocity_max);
    s.get("points", c.compare_points);
    s.finish();
  }
  top.finish();
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, "cannot open configuration " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace frictionid
