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
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "frictionid/error.hpp"

namespace frictionid {

/// min 1/2 x'Hx + g'x  subject to  lb <= x <= ub,  H symmetric positive definite.
struct QPProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  Eigen::Index dim() const { return g.size(); }

  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(H * x) + g.dot(x); }

  void validate() const {
    const auto n = dim();
    if (H.rows() != n || H.cols() != n || lb.size() != n || ub.size() != n)
      throw Error(ErrorKind::structure, "QP dimensions are inconsistent");
    if ((lb.array() > ub.array()).any()) throw Error(ErrorKind::structure, "QP has lb > ub");
  }
};

enum class BoundState : signed char { lower = -1, free = 0, upper = 1 };

struct QpSolution {
  Eigen::VectorXd x;
  std::vector<BoundState> active;
  Eigen::VectorXd multipliers;  // >= 0 on active bounds, 0 elsewhere
  int iterations = 0;
  double kkt_residual = 0.0;
};

/// Largest violation of the box-QP optimality conditions at (x, active set):
/// stationarity on free variables, multiplier signs on active ones, primal
/// feasibility and complementarity.
inline double kkt_residual(const QPProblem& qp, const Eigen::VectorXd& x,
                           const std::vector<BoundState>& active) {
  const Eigen::VectorXd grad = qp.H * x + qp.g;
  double r = 0.0;
  for (Eigen::Index i = 0; i < qp.dim(); ++i) {
    r = std::max({r, qp.lb(i) - x(i), x(i) - qp.ub(i)});
    switch (active[i]) {
      case BoundState::free: r = std::max(r, std::abs(grad(i))); break;
      case BoundState::lower:
        r = std::max({r, -grad(i), std::abs(grad(i) * (x(i) - qp.lb(i)))});
        break;
      case BoundState::upper:
        r = std::max({r, grad(i), std::abs(grad(i) * (qp.ub(i) - x(i)))});
        break;
    }
  }
  return r;
}

/// Primal active-set method for strictly convex box-constrained QPs.
///
/// Starts from the projection of `start` (default 0) onto the box and keeps
/// the iterate feasible. Each iteration solves the equality-constrained
/// subproblem on the free variables; a blocked step adds one bound, and an
/// optimal subproblem with a negative multiplier releases the most negative
/// one. More than 10 * dim iterations is reported as cycling.
inline QpSolution solve_qp(const QPProblem& qp, double tolerance = 1e-10,
                           const std::optional<Eigen::VectorXd>& start = std::nullopt) {
  qp.validate();
  const Eigen::Index n = qp.dim();
  using Eigen::VectorXd;

  VectorXd x = start && start->size() == n ? *start : VectorXd::Zero(n);
  x = x.cwiseMax(qp.lb).cwiseMin(qp.ub);
  std::vector<BoundState> active(static_cast<std::size_t>(n), BoundState::free);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (qp.lb(i) == qp.ub(i) || x(i) == qp.lb(i))
      active[i] = BoundState::lower;
    else if (x(i) == qp.ub(i))
      active[i] = BoundState::upper;
  }

  const int max_iterations = std::max<int>(10 * static_cast<int>(n), 10);
  QpSolution sol;
  for (int it = 0; it < max_iterations; ++it) {
    std::vector<Eigen::Index> fr, fixed;
    for (Eigen::Index i = 0; i < n; ++i)
      (active[i] == BoundState::free ? fr : fixed).push_back(i);

    VectorXd candidate = x;
    if (!fr.empty()) {
      const Eigen::MatrixXd hff = qp.H(fr, fr);
      VectorXd rhs = -qp.g(fr);
      if (!fixed.empty()) rhs -= qp.H(fr, fixed) * x(fixed);
      const Eigen::LLT<Eigen::MatrixXd> llt(hff);
      if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::numeric, "QP Hessian is not positive definite");
      {
        const Eigen::VectorXd sol = llt.solve(rhs);
        candidate(fr) = sol;
      }
    }

    // Longest feasible step toward the subproblem optimum.
    double step = 1.0;
    Eigen::Index blocking = -1;
    BoundState blocking_side = BoundState::free;
    for (Eigen::Index i : fr) {
      const double d = candidate(i) - x(i);
      if (d < 0.0 && candidate(i) < qp.lb(i)) {
        const double s = (qp.lb(i) - x(i)) / d;
        if (s < step) {
          step = s;
          blocking = i;
          blocking_side = BoundState::lower;
        }
      } else if (d > 0.0 && candidate(i) > qp.ub(i)) {
        const double s = (qp.ub(i) - x(i)) / d;
        if (s < step) {
          step = s;
          blocking = i;
          blocking_side = BoundState::upper;
        }
      }
    }

    if (blocking >= 0) {
      step = std::max(step, 0.0);
      for (Eigen::Index i : fr) x(i) += step * (candidate(i) - x(i));
      x(blocking) = blocking_side == BoundState::lower ? qp.lb(blocking) : qp.ub(blocking);
      active[blocking] = blocking_side;
      sol.iterations = it + 1;
      continue;
    }

    x = candidate;
    const VectorXd grad = qp.H * x + qp.g;
    Eigen::Index release = -1;
    double most_negative = -tolerance;
    for (Eigen::Index i : fixed) {
      if (qp.lb(i) == qp.ub(i)) continue;
      const double mu = active[i] == BoundState::lower ? grad(i) : -grad(i);
      if (mu < most_negative) {
        most_negative = mu;
        release = i;
      }
    }
    sol.iterations = it + 1;
    if (release < 0) {
      sol.x = x;
      sol.active = active;
      sol.multipliers = VectorXd::Zero(n);
      for (Eigen::Index i : fixed)
        sol.multipliers(i) = std::max(0.0, active[i] == BoundState::lower ? grad(i) : -grad(i));
      sol.kkt_residual = kkt_residual(qp, x, active);
      return sol;
    }
    active[release] = BoundState::free;
  }

  std::ostringstream msg;
  msg << "active-set QP cycling after " << max_iterations << " iterations; iterate = ["
      << x.transpose() << "]";
  throw Error(ErrorKind::numeric, msg.str());
}

}  // namespace frictionid
