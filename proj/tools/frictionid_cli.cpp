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

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frictionid/commands.hpp"

namespace {

void add_common(CLI::App* cmd, frictionid::CommandOptions& opt, std::uint64_t& seed) {
  cmd->add_option("--config", opt.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", seed, "Random seed (overrides the config)");
  cmd->add_option("--out", opt.out, "Primary output path")->required();
  cmd->add_option("--jobs", opt.jobs, "Worker threads for independent sub-experiments")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint friction identification and friction-aware tracking control"};
  app.set_version_flag("--version", frictionid::kVersion);
  app.require_subcommand(1);

  frictionid::CommandOptions opt;
  std::uint64_t seed = 0;
  std::string method;
  std::vector<std::string> inputs;

  auto* simulate = app.add_subcommand("simulate", "Simulate an identification experiment to CSV");
  add_common(simulate, opt, seed);

  auto* identify = app.add_subcommand("identify", "Identify friction models from a measured CSV");
  add_common(identify, opt, seed);
  identify->add_option("--method", method, "Regression method")
      ->check(CLI::IsMember({"stls", "lasso", "nlreg"}));
  identify->add_option("input,--in", inputs, "Measured time series CSV")->required();

  auto* control = app.add_subcommand("control", "Run feed-forward + MPC with a friction model");
  add_common(control, opt, seed);
  control->add_option("model,--in", inputs, "Friction model file")->required();

  auto* compare = app.add_subcommand("compare", "Compare friction model files on a velocity grid");
  add_common(compare, opt, seed);
  compare->add_option("models,--in", inputs, "Two or more model files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) opt.seed = seed;
  if (!method.empty()) opt.method = method;
  for (const auto& p : inputs) opt.inputs.emplace_back(p);

  try {
    const frictionid::CommandResult r = frictionid::run_command(chosen->get_name(), opt);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << r.summary.dump(2) << "\n";
    return 0;
  } catch (const frictionid::Error& e) {
    std::cerr << "error (" << frictionid::to_string(e.kind()) << "): " << e.what() << "\n";
    return frictionid::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error (unexpected): " << e.what() << "\n";
    return 1;
  }
}
