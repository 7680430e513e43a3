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
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frictionid/csv.hpp"
#include "frictionid/error.hpp"
#include "frictionid/friction.hpp"
#include "frictionid/library.hpp"

namespace frictionid {

inline constexpr const char* kModelFormat = "frictionid-model";
inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kVelocityUnit = "rad/s";
inline constexpr const char* kTorqueUnit = "N m";

/// Friction models of both joints plus free-form metadata.
struct ModelFile {
  std::array<FrictionModel, 2> joints{no_friction(), no_friction()};
  std::string velocity_unit = kVelocityUnit;
  nlohmann::json metadata = nlohmann::json::object();
};

inline nlohmann::json friction_to_json(const FrictionModel& m) {
  using nlohmann::json;
  if (const auto* s = std::get_if<StribeckModel>(&m)) {
    const auto a = s->to_array();
    return json{{"form", "stribeck"}, {"a", std::vector<double>(a.begin(), a.end())}};
  }
  const auto& lm = std::get<LibraryModel>(m);
  return json{{"form", "library"},
              {"labels", lm.library.labels()},
              {"coefficients",
               std::vector<double>(lm.coefficients.data(),
                                   lm.coefficients.data() + lm.coefficients.size())},
              {"library_hash", lm.library.definition_hash()}};
}

/// Parses one joint entry. Library entries must carry a hash that matches
/// their labels.
inline FrictionModel friction_from_json(const nlohmann::json& j, const std::string& where) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::structure, where + ": " + what);
  };
  if (!j.is_object() || !j.contains("form") || !j["form"].is_string()) fail("missing 'form'");
  const std::string form = j["form"].get<std::string>();
  try {
    if (form == "stribeck") {
      const auto a = j.at("a").get<std::vector<double>>();
      if (a.size() != 5) fail("stribeck model needs 5 parameters");
      StribeckModel m = StribeckModel::from_array({a[0], a[1], a[2], a[3], a[4]});
      m.validate();
      return m;
    }
    if (form == "library") {
      const auto labels = j.at("labels").get<std::vector<std::string>>();
      const auto coef = j.at("coefficients").get<std::vector<double>>();
      const auto hash = j.at("library_hash").get<std::string>();
      FunctionLibrary lib = FunctionLibrary::from_labels(labels);
      if (lib.definition_hash() != hash)
        fail("library_hash " + hash + " does not match labels (expected " +
             lib.definition_hash() + ")");
      LibraryModel m{lib, Eigen::Map<const Eigen::VectorXd>(coef.data(),
                                                           static_cast<Eigen::Index>(coef.size()))};
      m.validate();
      return m;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::structure) throw;
    fail(e.what());
  }
  fail("unknown form '" + form + "'");
  return no_friction();
}

inline std::string serialize_models(const ModelFile& f) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelFormatVersion;
  j["velocity_unit"] = f.velocity_unit;
  j["torque_unit"] = kTorqueUnit;
  j["joints"] = nlohmann::json::array({friction_to_json(f.joints[0]), friction_to_json(f.joints[1])});
  j["metadata"] = f.metadata;
  return j.dump(2) + "\n";
}

inline ModelFile parse_models(const std::string& text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::structure, source + ": not valid JSON: " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kModelFormat)
    throw Error(ErrorKind::structure, source + ": not a frictionid model file");
  if (j.value("version", 0) != kModelFormatVersion)
    throw Error(ErrorKind::structure, source + ": unsupported model file version");
  if (!j.contains("joints") || !j["joints"].is_array() || j["joints"].size() != 2)
    throw Error(ErrorKind::structure, source + ": expected exactly two joint models");
  ModelFile f;
  f.velocity_unit = j.value("velocity_unit", std::string(kVelocityUnit));
  for (int i = 0; i < 2; ++i)
    f.joints[i] = friction_from_json(j["joints"][i], source + ": joint " + std::to_string(i + 1));
  if (j.contains("metadata")) f.metadata = j["metadata"];
  return f;
}

inline void save_models(const std::filesystem::path& path, const ModelFile& f) {
  csv::write_file_atomic(path, serialize_models(f));
}

inline ModelFile load_models(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_models(ss.str(), path.string());
}

}  // namespace frictionid
