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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frictionid/config.hpp"
#include "frictionid/csv.hpp"
#include "frictionid/model_io.hpp"
#include "frictionid/mpc.hpp"
#include "frictionid/nlreg.hpp"
#include "frictionid/signals.hpp"
#include "frictionid/sindy.hpp"
#include "frictionid/trajectory.hpp"
#include "frictionid/version.hpp"

namespace frictionid {

namespace fs = std::filesystem;

struct CommandOptions {
  fs::path config_path;  // empty: built-in defaults
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  fs::path out;
  std::vector<fs::path> inputs;
  unsigned jobs = 1;
};

struct CommandResult {
  std::vector<fs::path> outputs;
  std::vector<std::string> warnings;
  nlohmann::json summary = nlohmann::json::object();
  std::uint64_t seed = 0;
};

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = hex[h & 0xf];
  return out;
}

inline std::string read_file(const fs::path& path, ErrorKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kind, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline fs::path sidecar(const fs::path& out, const std::string& suffix) {
  return fs::path(out.string() + suffix);
}

namespace command_detail {

inline ExperimentConfig resolve_config(const CommandOptions& opt) {
  ExperimentConfig c =
      opt.config_path.empty() ? ExperimentConfig{} : load_config(opt.config_path);
  if (opt.seed) c.seed = *opt.seed;
  if (opt.method) {
    c.method = *opt.method;
    c.validate();
  }
  return c;
}

inline void require_out(const CommandOptions& opt) {
  if (opt.out.empty()) throw Error(ErrorKind::usage, "--out is required");
}

inline std::string to_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline void write(CommandResult& r, const fs::path& path, const std::string& content) {
  csv::write_file_atomic(path, content);
  r.outputs.push_back(path);
}

inline nlohmann::json labels_of(const FunctionLibrary& lib, const std::vector<Index>& support) {
  auto all = lib.labels();
  nlohmann::json out = nlohmann::json::array();
  for (Index i : support) out.push_back(all[static_cast<std::size_t>(i)]);
  return out;
}

inline nlohmann::json tvdiff_json(const TVDiffResult& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"objective_initial", r.objective.front()},
          {"objective_final", r.objective.back()},
          {"gradient_norm", r.gradient_norm}};
}

}  // namespace command_detail

/// Trajectory, feed-forward, stabilized plant run, optional encoder, CSV.
/// A rejected trajectory leaves no output behind.
inline CommandResult cmd_simulate(const CommandOptions& opt) {
  using namespace command_detail;
  require_out(opt);
  const ExperimentConfig c = resolve_config(opt);
  const PlantModel model{c.arm, c.feedforward_friction};
  ReferenceTrajectory ref = attach_feedforward(
      coordinated_trajectory(c.trajectory, c.base_pose, c.joint_gain, c.arm), model);
  TimeSeries ts = run_experiment(c.true_plant(), ref, c.kp, c.kd, c.internal_dt);
  if (c.encoder_enabled) ts = quantize_measurements(ts, c.encoder, c.seed);

  std::ostringstream os;
  csv::write_time_series(os, ts);
  CommandResult r;
  write(r, opt.out, os.str());
  r.summary = {{"rows", ts.size()}, {"encoder", c.encoder_enabled}};
  return r;
}

/// Differentiation, residual torque, preprocessing and the chosen solver on a
/// measured CSV. Writes the model file plus a JSON report and diagnostics.
inline CommandResult cmd_identify(const CommandOptions& opt) {
  using namespace command_detail;
  using nlohmann::json;
  require_out(opt);
  if (opt.inputs.size() != 1) throw Error(ErrorKind::usage, "identify takes exactly one input CSV");
  const ExperimentConfig c = resolve_config(opt);
  const fs::path& input = opt.inputs.front();
  TimeSeries ts = csv::read_time_series(input);
  const double dt = ts[1].t - ts[0].t;

  CommandResult r;
  json diff_log = json::object();
  if (c.tvdiff_enabled) {
    TVDiffConfig vel = c.tvdiff_velocity, acc = c.tvdiff_acceleration;
    vel.dt = acc.dt = dt;
    DifferentiationReport rep;
    ts = differentiate_measurements(ts, vel, acc, &rep);
    for (int j = 0; j < 2; ++j) {
      const std::string key = "joint" + std::to_string(j + 1);
      diff_log[key] = {{"velocity", tvdiff_json(rep.velocity[j])},
                       {"acceleration", tvdiff_json(rep.acceleration[j])}};
      if (!rep.velocity[j].converged)
        r.warnings.push_back(key + ": velocity tvdiff hit the iteration cap");
      if (!rep.acceleration[j].converged)
        r.warnings.push_back(key + ": acceleration tvdiff hit the iteration cap");
    }
  } else {
    for (const Sample& s : ts)
      if (!s.yd.allFinite() || !s.ydd.allFinite())
        throw Error(ErrorKind::data,
                    "input lacks velocity or acceleration and tvdiff is disabled");
  }

  auto datasets = residual_friction_torque(c.identification_model(), ts, input.string());
  const FunctionLibrary lib = c.function_library();
  ModelFile model;
  json joints = json::array();

  for (int j = 0; j < 2; ++j) {
    const std::string tag = "joint" + std::to_string(j + 1);
    IdentificationDataset ds = datasets[j];
    const std::size_t rows_total = ds.size();
    if (const auto& th = c.identification[j].small_angle_threshold) {
      const auto angle = ds.angle(c.identification[j].angle_joint);
      ds = preprocess_small_angle(ds, angle, *th);
    }
    json entry = {{"joint", j + 1}, {"rows", rows_total}, {"rows_used", ds.size()}};
    json steps = json::array();
    for (const auto& s : ds.preprocessing)
      steps.push_back({{"name", s.name}, {"threshold", s.threshold},
                       {"retained_fraction", s.retained_fraction}});
    entry["preprocessing"] = steps;
    std::vector<std::string> warnings;

    if (c.method == "nlreg") {
      NlRegResult fit = fit_stribeck(ds, c.nlreg);
      model.joints[j] = fit.model;
      const auto a = fit.model.to_array();
      entry["form"] = "stribeck";
      entry["a"] = std::vector<double>(a.begin(), a.end());
      entry["rmse"] = fit.rmse;
      entry["iterations"] = fit.iterations;
      entry["converged"] = fit.converged;
      entry["gradient_norm"] = fit.gradient_norm;
      warnings = fit.warnings;
      if (!velocities_span_both_signs(ds.velocity))
        warnings.push_back(
            "velocity data covers only one sign; odd and even terms are not separable");
      std::ostringstream os;
      os << "iteration,objective\n";
      for (std::size_t k = 0; k < fit.objective.size(); ++k)
        os << k << "," << csv::number(fit.objective[k]) << "\n";
      write(r, sidecar(opt.out, "." + tag + ".fit.csv"), os.str());
    } else {
      IdentifyOptions io;
      io.method = c.method == "lasso" ? IdentificationMethod::lasso_cv : IdentificationMethod::stls;
      io.lambda = c.lambda;
      io.cv_folds = c.cv_folds;
      io.lambda_grid = c.lambda_grid;
      io.seed = c.seed;
      io.jobs = opt.jobs;
      Identification id = identify_friction(ds, lib, io);
      model.joints[j] = id.model;
      entry["form"] = "library";
      entry["lambda"] = id.solution.lambda;
      entry["support"] = labels_of(lib, id.solution.support);
      entry["coefficients"] = std::vector<double>(id.solution.xi.data(),
                                                  id.solution.xi.data() + id.solution.xi.size());
      entry["rmse"] = id.rmse;
      entry["converged"] = id.solution.converged;
      warnings = id.warnings;

      std::ostringstream os;
      if (io.method == IdentificationMethod::lasso_cv) {
        csv::write_sweep(os, id.cv_curve);
      } else {
        std::vector<double> grid;
        for (int k = -10; k <= 10; ++k) grid.push_back(c.lambda * std::pow(10.0, k / 10.0));
        csv::write_sweep(os, pareto_sweep(friction_regression_problem(ds, lib), SolverTag::stls,
                                          grid, opt.jobs));
      }
      write(r, sidecar(opt.out, "." + tag + ".sweep.csv"), os.str());
    }
    for (const auto& w : warnings) r.warnings.push_back(tag + ": " + w);
    entry["warnings"] = warnings;
    joints.push_back(entry);
  }

  model.metadata = {{"method", c.method}, {"source", input.filename().string()}};
  write(r, opt.out, serialize_models(model));
  write(r, sidecar(opt.out, ".report.json"),
        to_text({{"method", c.method}, {"sample_dt", dt}, {"joints", joints}}));
  write(r, sidecar(opt.out, ".tvdiff.json"), to_text(diff_log));
  r.summary = {{"method", c.method}, {"joints", joints}};
  return r;
}

/// Feed-forward with the loaded friction model plus LTV-MPC on the true plant.
inline CommandResult cmd_control(const CommandOptions& opt) {
  using namespace command_detail;
  require_out(opt);
  if (opt.inputs.size() != 1) throw Error(ErrorKind::usage, "control takes exactly one model file");
  const ExperimentConfig c = resolve_config(opt);
  const ModelFile mf = load_models(opt.inputs.front());
  if (mf.velocity_unit != kVelocityUnit)
    throw Error(ErrorKind::structure, "model velocity unit '" + mf.velocity_unit +
                                          "' is not " + kVelocityUnit);
  const FunctionLibrary lib = c.function_library();
  for (int j = 0; j < 2; ++j)
    if (const auto* lm = std::get_if<LibraryModel>(&mf.joints[j]))
      if (lm->library.definition_hash() != lib.definition_hash())
        throw Error(ErrorKind::structure,
                    "joint " + std::to_string(j + 1) + " model library hash " +
                        lm->library.definition_hash() + " does not match the configured library " +
                        lib.definition_hash());

  const PlantModel nominal{c.arm, mf.joints};
  const ReferenceTrajectory ref = attach_feedforward(
      coordinated_trajectory(c.control_trajectory, c.control_base_pose, c.control_joint_gain, c.arm),
      nominal);
  ClosedLoopOptions clo;
  clo.internal_dt = c.internal_dt;
  clo.seed = c.seed;
  if (c.control_encoder) clo.encoder = c.encoder;
  const ClosedLoopLog log = run_closed_loop(c.true_plant(), nominal, ref, c.mpc, clo);

  CommandResult r;
  std::ostringstream os;
  csv::write_closed_loop(os, log);
  write(r, opt.out, os.str());
  r.summary = {{"steps", log.rows.size() - 1},
               {"mean_abs_umpc", log.mean_abs_umpc},
               {"max_abs_umpc", log.max_abs_umpc},
               {"max_abs_uff", log.max_abs_uff},
               {"tracking_rmse", log.tracking_rmse},
               {"max_abs_error", log.max_abs_error},
               {"constraint_activations", log.constraint_activations},
               {"qp_failures", log.qp_failures}};
  write(r, sidecar(opt.out, ".summary.json"), to_text(r.summary));
  if (log.qp_failures > 0)
    r.warnings.push_back(std::to_string(log.qp_failures) + " QP solves failed; previous input held");
  return r;
}

/// Evaluates every model on a symmetric velocity grid. Writes the curves
/// (columns m1..mN in input order) and pairwise RMS differences.
inline CommandResult cmd_compare(const CommandOptions& opt) {
  using namespace command_detail;
  require_out(opt);
  if (opt.inputs.size() < 2) throw Error(ErrorKind::usage, "compare needs at least two model files");
  const ExperimentConfig c = resolve_config(opt);
  std::vector<ModelFile> models;
  for (const auto& p : opt.inputs) models.push_back(load_models(p));
  for (std::size_t i = 1; i < models.size(); ++i)
    if (models[i].velocity_unit != models[0].velocity_unit)
      throw Error(ErrorKind::structure, "velocity units differ: " + opt.inputs[0].string() + " uses " +
                                            models[0].velocity_unit + ", " +
                                            opt.inputs[i].string() + " uses " +
                                            models[i].velocity_unit);

  const int n = c.compare_points;
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    grid[static_cast<std::size_t>(i)] = c.compare_velocity_max * (2.0 * i - (n - 1)) / (n - 1);

  const std::size_t nm = models.size();
  // curve[j][m][i]
  std::vector<std::vector<std::vector<double>>> curve(
      2, std::vector<std::vector<double>>(nm, std::vector<double>(grid.size())));
  for (int j = 0; j < 2; ++j)
    for (std::size_t m = 0; m < nm; ++m)
      for (std::size_t i = 0; i < grid.size(); ++i)
        curve[j][m][i] = eval_friction(models[m].joints[j], grid[i]);

  std::ostringstream os;
  os << "joint,v";
  for (std::size_t m = 0; m < nm; ++m) os << ",m" << m + 1;
  os << "\n";
  for (int j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      os << j + 1 << "," << csv::number(grid[i]);
      for (std::size_t m = 0; m < nm; ++m) os << "," << csv::number(curve[j][m][i]);
      os << "\n";
    }

  std::ostringstream pairs;
  pairs << "joint,model_a,model_b,rms\n";
  nlohmann::json table = nlohmann::json::array();
  for (int j = 0; j < 2; ++j)
    for (std::size_t a = 0; a < nm; ++a)
      for (std::size_t b = a + 1; b < nm; ++b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const double d = curve[j][a][i] - curve[j][b][i];
          sum += d * d;
        }
        const double rms = std::sqrt(sum / static_cast<double>(grid.size()));
        pairs << j + 1 << ",m" << a + 1 << ",m" << b + 1 << "," << csv::number(rms) << "\n";
        table.push_back({{"joint", j + 1}, {"a", a + 1}, {"b", b + 1}, {"rms", rms}});
      }

  CommandResult r;
  write(r, opt.out, os.str());
  write(r, sidecar(opt.out, ".pairs.csv"), pairs.str());
  nlohmann::json names = nlohmann::json::array();
  for (const auto& p : opt.inputs) names.push_back(p.string());
  r.summary = {{"models", names}, {"pairs", table}};
  return r;
}

/// Runs one command and writes `<out>.manifest.json` next to its outputs.
/// The manifest carries wall-clock timing, so it is the one file that
/// differs between otherwise identical runs.
inline CommandResult run_command(const std::string& name, const CommandOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  CommandResult r;
  if (name == "simulate")
    r = cmd_simulate(opt);
  else if (name == "identify")
    r = cmd_identify(opt);
  else if (name == "control")
    r = cmd_control(opt);
  else if (name == "compare")
    r = cmd_compare(opt);
  else
    throw Error(ErrorKind::usage, "unknown command '" + name + "'");
  r.seed = command_detail::resolve_config(opt).seed;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  using nlohmann::json;
  auto file_entry = [](const fs::path& p, ErrorKind kind) {
    return json{{"path", p.string()}, {"fnv1a", fnv1a_hex(read_file(p, kind))}};
  };
  json inputs = json::array();
  for (const auto& p : opt.inputs) inputs.push_back(file_entry(p, ErrorKind::data));
  json outputs = json::array();
  for (const auto& p : r.outputs) outputs.push_back(file_entry(p, ErrorKind::data));
  json components = json::object();
  for (const auto& cv : kComponentVersions)
    components[cv.name] = {{"revision", cv.revision},
                           {"hash", fnv1a_hex(std::string(cv.name) + "@" + cv.revision + "/" +
                                              kVersion)}};
  json manifest = {
      {"command", name},
      {"version", kVersion},
      {"config", opt.config_path.empty() ? json(nullptr) : file_entry(opt.config_path, ErrorKind::config)},
      {"seed", r.seed},
      {"method", opt.method ? json(*opt.method) : json(nullptr)},
      {"jobs", opt.jobs},
      {"inputs", inputs},
      {"outputs", outputs},
      {"components", components},
      {"warnings", r.warnings},
      {"wall_clock_seconds", seconds}};
  csv::write_file_atomic(sidecar(opt.out, ".manifest.json"), command_detail::to_text(manifest));
  return r;
}

}  // namespace frictionid
