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

namespace frictionid {

inline constexpr const char* kVersion = "0.1.0";

/// Per-module revision tags recorded in run manifests. Bump a tag whenever a
/// change alters that module's numeric output.
struct ComponentVersion {
  const char* name;
  const char* revision;
};

inline constexpr ComponentVersion kComponentVersions[] = {
    {"dynamics", "1"}, {"friction", "1"}, {"trajectory", "1"},
    {"signals", "1"},  {"regression", "1"}, {"sindy", "1"},
    {"nlreg", "1"},    {"mpc", "1"},      {"cli", "1"},
};

}  // namespace frictionid
