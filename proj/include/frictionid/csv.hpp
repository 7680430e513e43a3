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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "frictionid/error.hpp"
#include "frictionid/mpc.hpp"
#include "frictionid/regression.hpp"
#include "frictionid/simulation.hpp"

namespace frictionid::csv {

inline constexpr std::string_view kTimeSeriesHeader = "t,y1,y2,yd1,yd2,ydd1,ydd2,u1,u2";
inline constexpr std::string_view kClosedLoopHeader =
    "t,y1,y2,y1_des,y2_des,uff1,uff2,umpc1,umpc2,e1,e2";
inline constexpr std::string_view kSweepHeader = "lambda,support_size,residual,cv_mse";

/// Shortest text that reads back to the same double; NaN is written as `nan`.
inline std::string number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_row(std::ostream& os, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) os << ',';
    os << number(v);
    first = false;
  }
  os << '\n';
}

inline void write_time_series(std::ostream& os, const TimeSeries& ts) {
  os << kTimeSeriesHeader << '\n';
  for (const Sample& s : ts)
    write_row(os, {s.t, s.y(0), s.y(1), s.yd(0), s.yd(1), s.ydd(0), s.ydd(1), s.u(0), s.u(1)});
}

inline void write_closed_loop(std::ostream& os, const ClosedLoopLog& log) {
  os << kClosedLoopHeader << '\n';
  for (const ClosedLoopRow& r : log.rows)
    write_row(os, {r.t, r.y(0), r.y(1), r.y_des(0), r.y_des(1), r.uff(0), r.uff(1), r.umpc(0),
                   r.umpc(1), r.e(0), r.e(1)});
}

/// CV curve; cv_mse is nan for sweeps without cross-validation.
inline void write_sweep(std::ostream& os, const std::vector<CvPoint>& curve) {
  os << kSweepHeader << '\n';
  for (const CvPoint& p : curve)
    write_row(os, {p.lambda, static_cast<double>(p.support_size), p.residual_norm, p.cv_mse});
}

inline void write_sweep(std::ostream& os, const std::vector<ParetoPoint>& front) {
  os << kSweepHeader << '\n';
  for (const ParetoPoint& p : front)
    write_row(os, {p.lambda, static_cast<double>(p.support_size), p.residual_norm,
                   std::numeric_limits<double>::quiet_NaN()});
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_number(std::string_view field, std::size_t line_no, std::string_view column) {
  const std::string text(trim(field));
  if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    std::ostringstream msg;
    msg << "line " << line_no << ", column " << column << ": '" << text << "' is not a number";
    throw Error(ErrorKind::data, msg.str());
  }
  return v;
}

}  // namespace detail

/// Parses a time-series CSV. The header must name exactly the columns of
/// kTimeSeriesHeader (surrounding blanks are ignored).
inline TimeSeries read_time_series(std::istream& is, std::string_view source = "input") {
  std::string line;
  if (!std::getline(is, line))
    throw Error(ErrorKind::data, std::string(source) + ": empty file, expected a header row");
  const auto header = detail::split(line);
  const auto expected = detail::split(kTimeSeriesHeader);
  bool header_ok = header.size() == expected.size();
  for (std::size_t i = 0; header_ok && i < header.size(); ++i)
    header_ok = detail::trim(header[i]) == expected[i];
  if (!header_ok)
    throw Error(ErrorKind::data, std::string(source) + ": header must be '" +
                                     std::string(kTimeSeriesHeader) + "'");

  TimeSeries ts;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != expected.size()) {
      std::ostringstream msg;
      msg << source << ": line " << line_no << " has " << f.size() << " fields, expected "
          << expected.size();
      throw Error(ErrorKind::data, msg.str());
    }
    double v[9];
    for (std::size_t i = 0; i < 9; ++i) v[i] = detail::parse_number(f[i], line_no, expected[i]);
    Sample s;
    s.t = v[0];
    s.y << v[1], v[2];
    s.yd << v[3], v[4];
    s.ydd << v[5], v[6];
    s.u << v[7], v[8];
    if (!std::isfinite(s.t) || !s.y.allFinite() || !s.u.allFinite()) {
      std::ostringstream msg;
      msg << source << ": line " << line_no << " has a non-finite t, y or u";
      throw Error(ErrorKind::data, msg.str());
    }
    ts.push_back(s);
  }
  if (ts.size() < 3) throw Error(ErrorKind::data, std::string(source) + ": fewer than 3 samples");
  const double dt = ts[1].t - ts[0].t;
  if (!(dt > 0.0)) throw Error(ErrorKind::data, std::string(source) + ": time must increase");
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (std::abs(ts[i].t - ts[i - 1].t - dt) > 1e-6 * dt) {
      std::ostringstream msg;
      msg << source << ": non-uniform sampling at t = " << ts[i].t;
      throw Error(ErrorKind::data, msg.str());
    }
  }
  return ts;
}

inline TimeSeries read_time_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data, "cannot open " + path.string());
  return read_time_series(in, path.string());
}

/// Writes `content` next to `path` and renames it into place, so a failed
/// run never leaves a truncated file behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::data, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::data, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::data, "cannot move output into place: " + path.string());
}

}  // namespace frictionid::csv
