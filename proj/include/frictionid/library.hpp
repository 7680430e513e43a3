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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "frictionid/error.hpp"

namespace frictionid {

/// One unary candidate function of the joint velocity `yd`.
///
/// Terms are plain data rather than callables so that a library can be
/// hashed, written to disk and rebuilt from its labels. Supported labels:
/// `1`, `yd`, `sgn(yd)`, `tanh(<k>yd)` and `yd^<n>`.
struct LibraryTerm {
  enum class Kind { constant, linear, sign, tanh, power };

  Kind kind = Kind::constant;
  double scale = 1.0;  // tanh slope
  int exponent = 1;    // power exponent

  static LibraryTerm constant() { return {Kind::constant, 1.0, 0}; }
  static LibraryTerm linear() { return {Kind::linear, 1.0, 1}; }
  static LibraryTerm sign() { return {Kind::sign, 1.0, 0}; }
  static LibraryTerm hyperbolic_tangent(double k) { return {Kind::tanh, k, 0}; }
  static LibraryTerm power(int n) { return {Kind::power, 1.0, n}; }

  double value(double v) const {
    switch (kind) {
      case Kind::constant: return 1.0;
      case Kind::linear: return v;
      case Kind::sign: return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      case Kind::tanh: return std::tanh(scale * v);
      case Kind::power: return std::pow(v, exponent);
    }
    return 0.0;
  }

  // The sign column is treated as flat everywhere, including its jump at 0.
  double derivative(double v) const {
    switch (kind) {
      case Kind::constant: return 0.0;
      case Kind::linear: return 1.0;
      case Kind::sign: return 0.0;
      case Kind::tanh: {
        const double th = std::tanh(scale * v);
        return scale * (1.0 - th * th);
      }
      case Kind::power:
        return exponent == 0 ? 0.0 : exponent * std::pow(v, exponent - 1);
    }
    return 0.0;
  }

  bool is_nondifferentiable_at(double v) const {
    return kind == Kind::sign && v == 0.0;
  }

  std::string label() const {
    switch (kind) {
      case Kind::constant: return "1";
      case Kind::linear: return "yd";
      case Kind::sign: return "sgn(yd)";
      case Kind::tanh: return "tanh(" + format_number(scale) + "yd)";
      case Kind::power: return "yd^" + std::to_string(exponent);
    }
    return "?";
  }

  static LibraryTerm parse(std::string_view label) {
    if (label == "1") return constant();
    if (label == "yd") return linear();
    if (label == "sgn(yd)") return sign();
    if (label.starts_with("tanh(") && label.ends_with("yd)")) {
      const auto body = label.substr(5, label.size() - 5 - 3);
      double k = 0.0;
      const auto [ptr, ec] =
          std::from_chars(body.data(), body.data() + body.size(), k);
      if (ec != std::errc{} || ptr != body.data() + body.size() || !(k > 0.0))
        throw Error(ErrorKind::structure,
                    "bad tanh slope in library term '" + std::string(label) + "'");
      return hyperbolic_tangent(k);
    }
    if (label.starts_with("yd^")) {
      const auto body = label.substr(3);
      int n = 0;
      const auto [ptr, ec] =
          std::from_chars(body.data(), body.data() + body.size(), n);
      if (ec != std::errc{} || ptr != body.data() + body.size() || n < 0)
        throw Error(ErrorKind::structure,
                    "bad exponent in library term '" + std::string(label) + "'");
      return power(n);
    }
    throw Error(ErrorKind::structure,
                "unknown library term '" + std::string(label) + "'");
  }

  static std::string format_number(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
  }
};

/// Ordered set of candidate functions Theta(yd) used for sparse regression.
class FunctionLibrary {
 public:
  FunctionLibrary() = default;

  explicit FunctionLibrary(std::vector<LibraryTerm> terms) : terms_(std::move(terms)) {
    const auto names = labels();
    for (std::size_t i = 0; i < names.size(); ++i)
      for (std::size_t j = i + 1; j < names.size(); ++j)
        if (names[i] == names[j])
          throw Error(ErrorKind::structure, "duplicate library label '" + names[i] + "'");
  }

  static FunctionLibrary from_labels(const std::vector<std::string>& labels) {
    std::vector<LibraryTerm> terms;
    terms.reserve(labels.size());
    for (const auto& l : labels) terms.push_back(LibraryTerm::parse(l));
    return FunctionLibrary(std::move(terms));
  }

  std::size_t size() const { return terms_.size(); }
  const std::vector<LibraryTerm>& terms() const { return terms_; }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) out.push_back(t.label());
    return out;
  }

  Eigen::VectorXd evaluate(double v) const {
    Eigen::VectorXd row(terms_.size());
    for (std::size_t j = 0; j < terms_.size(); ++j) row(j) = terms_[j].value(v);
    return row;
  }

  Eigen::VectorXd derivative(double v) const {
    Eigen::VectorXd row(terms_.size());
    for (std::size_t j = 0; j < terms_.size(); ++j) row(j) = terms_[j].derivative(v);
    return row;
  }

  // Theta(X): one row per velocity sample.
  Eigen::MatrixXd design(std::span<const double> velocity) const {
    Eigen::MatrixXd theta(velocity.size(), terms_.size());
    for (std::size_t i = 0; i < velocity.size(); ++i)
      for (std::size_t j = 0; j < terms_.size(); ++j)
        theta(i, j) = terms_[j].value(velocity[i]);
    return theta;
  }

  /// FNV-1a over the `;`-joined labels, as 16 hex digits.
  std::string definition_hash() const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](unsigned char c) {
      h ^= c;
      h *= 1099511628211ull;
    };
    for (const auto& l : labels()) {
      for (unsigned char c : l) mix(c);
      mix(';');
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[i] = hex[h & 0xf];
    return out;
  }

  friend bool operator==(const FunctionLibrary& a, const FunctionLibrary& b) {
    return a.labels() == b.labels();
  }

 private:
  std::vector<LibraryTerm> terms_;
};

/// Theta(yd) = [1, yd, sgn(yd), tanh(5yd), tanh(10yd), tanh(20yd), tanh(100yd)].
inline FunctionLibrary default_friction_library() {
  return FunctionLibrary({LibraryTerm::constant(), LibraryTerm::linear(), LibraryTerm::sign(),
                          LibraryTerm::hyperbolic_tangent(5), LibraryTerm::hyperbolic_tangent(10),
                          LibraryTerm::hyperbolic_tangent(20),
                          LibraryTerm::hyperbolic_tangent(100)});
}

}  // namespace frictionid
