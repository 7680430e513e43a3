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

#include <stdexcept>
#include <string>

namespace frictionid {

// Failure classes. Each maps onto one CLI exit code (see exit_code()).
enum class ErrorKind {
  usage,            // bad command line
  config,           // malformed or out-of-range configuration
  data,             // input file schema or sampling problems
  empty_selection,  // preprocessing removed every row
  numeric,          // divergence, singular matrices, solver failure
  structure,        // model/library mismatch, corrupt model files
  limit,            // trajectory or torque exceeds actuator limits
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 2;
    case ErrorKind::config: return 3;
    case ErrorKind::data: return 4;
    case ErrorKind::empty_selection: return 5;
    case ErrorKind::numeric: return 6;
    case ErrorKind::structure: return 7;
    case ErrorKind::limit: return 8;
  }
  return 1;
}

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::empty_selection: return "empty_selection";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::structure: return "structure";
    case ErrorKind::limit: return "limit";
  }
  return "unknown";
}

}  // namespace frictionid
