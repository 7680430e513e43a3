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
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frictionid/error.hpp"
#include "frictionid/parallel.hpp"

// Sparse linear regression for one target column:
//
//   ols    min ||y - Theta w||^2
//   lasso  min ||y - Theta w||^2 + lambda ||w||_1   (no 1/(2m) factor)
//   stls   sequentially thresholded least squares
//
// LASSO and STLS work on unit-l2-norm columns internally. The LASSO penalty
// and the STLS threshold therefore act on |w_j| * ||theta_j||, and returned
// coefficients are in the original column scale.

namespace frictionid {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct RegressionProblem {
  MatrixXd design;  // Theta, m x r
  VectorXd target;  // one column of Xdot, length m
  std::vector<std::string> column_labels;

  void validate() const {
    if (design.rows() < 1 || design.cols() < 1)
      throw Error(ErrorKind::data, "regression design must be at least 1 x 1");
    if (target.size() != design.rows())
      throw Error(ErrorKind::data, "regression target length does not match design rows");
    if (!design.allFinite() || !target.allFinite())
      throw Error(ErrorKind::data, "regression data contains NaN or Inf");
    if (!column_labels.empty() && column_labels.size() != static_cast<std::size_t>(design.cols()))
      throw Error(ErrorKind::data, "column label count does not match design columns");
  }

  RegressionProblem rows(const std::vector<Index>& idx) const {
    RegressionProblem out;
    out.design = design(idx, Eigen::all);
    out.target = target(idx);
    out.column_labels = column_labels;
    return out;
  }
};

enum class SolverTag { ols, lasso, stls };

inline const char* to_string(SolverTag tag) {
  switch (tag) {
    case SolverTag::ols: return "ols";
    case SolverTag::lasso: return "lasso";
    case SolverTag::stls: return "stls";
  }
  return "?";
}

struct SparseSolution {
  VectorXd xi;
  std::vector<Index> support;  // indices of nonzero entries, ascending
  double lambda = 0.0;
  double residual_norm = 0.0;
  SolverTag solver_tag = SolverTag::ols;
  bool rank_deficient = false;
  bool converged = true;
  bool all_pruned = false;
  int iterations = 0;
  std::vector<double> objective_history;  // lasso: objective after each sweep
};

inline double residual_norm(const RegressionProblem& p, const VectorXd& xi) {
  return (p.target - p.design * xi).norm();
}

namespace detail {

inline void finalize(const RegressionProblem& p, SparseSolution& s) {
  s.support.clear();
  for (Index j = 0; j < s.xi.size(); ++j)
    if (s.xi(j) != 0.0) s.support.push_back(j);
  s.residual_norm = residual_norm(p, s.xi);
}

struct LeastSquares {
  VectorXd w;
  bool rank_deficient = false;
};

// Minimum-norm least squares through a complete orthogonal decomposition.
inline LeastSquares least_squares(const MatrixXd& a, const VectorXd& b) {
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod;
  cod.setThreshold(1e-10);
  cod.compute(a);
  return {cod.solve(b), cod.rank() < a.cols()};
}

inline VectorXd column_scales(const MatrixXd& design, bool standardize) {
  VectorXd s = VectorXd::Ones(design.cols());
  if (!standardize) return s;
  for (Index j = 0; j < design.cols(); ++j) {
    const double n = design.col(j).norm();
    s(j) = n > 0.0 ? n : 1.0;
  }
  return s;
}

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

}  // namespace detail

inline SparseSolution solve_ols(const RegressionProblem& p) {
  p.validate();
  SparseSolution s;
  const auto ls = detail::least_squares(p.design, p.target);
  s.xi = ls.w;
  s.rank_deficient = ls.rank_deficient;
  s.solver_tag = SolverTag::ols;
  s.iterations = 1;
  detail::finalize(p, s);
  // OLS reports every column, including exact zeros.
  s.support.resize(static_cast<std::size_t>(p.design.cols()));
  for (Index j = 0; j < p.design.cols(); ++j) s.support[j] = j;
  return s;
}

struct LassoOptions {
  bool standardize = true;
  int max_sweeps = 100000;
  double tolerance = 1e-10;  // max coefficient change per sweep (normalized scale)
  bool record_objective = false;
  std::optional<VectorXd> warm_start;  // original scale
};

/// Cyclic coordinate descent with soft-thresholding.
inline SparseSolution solve_lasso(const RegressionProblem& p, double lambda,
                                  const LassoOptions& opt = {}) {
  p.validate();
  if (!(lambda >= 0.0)) throw Error(ErrorKind::config, "lasso lambda must be >= 0");
  const Index r = p.design.cols();
  const VectorXd scale = detail::column_scales(p.design, opt.standardize);
  const MatrixXd x = p.design * scale.cwiseInverse().asDiagonal();
  VectorXd sq(r);
  for (Index j = 0; j < r; ++j) sq(j) = x.col(j).squaredNorm();

  VectorXd w = VectorXd::Zero(r);
  if (opt.warm_start && opt.warm_start->size() == r) w = opt.warm_start->cwiseProduct(scale);
  VectorXd resid = p.target - x * w;

  auto objective = [&] { return resid.squaredNorm() + lambda * w.lpNorm<1>(); };

  SparseSolution s;
  s.solver_tag = SolverTag::lasso;
  s.lambda = lambda;
  s.converged = false;
  const double half = 0.5 * lambda;
  int sweep = 0;
  for (; sweep < opt.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < r; ++j) {
      if (sq(j) == 0.0) continue;
      const double rho = x.col(j).dot(resid) + sq(j) * w(j);
      const double next = detail::soft_threshold(rho, half) / sq(j);
      const double change = next - w(j);
      if (change != 0.0) {
        resid.noalias() -= change * x.col(j);
        w(j) = next;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    if (opt.record_objective) s.objective_history.push_back(objective());
    if (max_change < opt.tolerance) {
      s.converged = true;
      ++sweep;
      break;
    }
  }
  s.iterations = sweep;
  s.xi = w.cwiseQuotient(scale);
  detail::finalize(p, s);
  return s;
}

struct StlsOptions {
  bool standardize = true;
  int max_iterations = 1000;
};

/// Sequential thresholded least squares:
///   1. least squares over the full library;
///   2. zero every coefficient with |w_j| ||theta_j|| < lambda and drop its column;
///   3. re-solve least squares on the surviving columns;
/// repeated until no surviving coefficient falls below the threshold.
inline SparseSolution solve_stls(const RegressionProblem& p, double lambda,
                                 const StlsOptions& opt = {}) {
  p.validate();
  if (!(lambda > 0.0)) throw Error(ErrorKind::config, "stls lambda must be > 0");
  const Index r = p.design.cols();
  const VectorXd scale = detail::column_scales(p.design, opt.standardize);

  SparseSolution s;
  s.solver_tag = SolverTag::stls;
  s.lambda = lambda;
  s.xi = VectorXd::Zero(r);

  std::vector<Index> active(static_cast<std::size_t>(r));
  for (Index j = 0; j < r; ++j) active[j] = j;

  auto ls = detail::least_squares(p.design, p.target);
  s.xi = ls.w;
  s.rank_deficient = ls.rank_deficient;
  s.iterations = 1;

  while (s.iterations <= opt.max_iterations) {
    std::vector<Index> keep;
    for (Index j : active) {
      if (std::abs(s.xi(j)) * scale(j) < lambda)
        s.xi(j) = 0.0;
      else
        keep.push_back(j);
    }
    if (keep.size() == active.size()) break;
    active = std::move(keep);
    if (active.empty()) {
      s.all_pruned = true;
      break;
    }
    ls = detail::least_squares(p.design(Eigen::all, active), p.target);
    s.rank_deficient = ls.rank_deficient;
    for (std::size_t k = 0; k < active.size(); ++k) s.xi(active[k]) = ls.w(static_cast<Index>(k));
    ++s.iterations;
  }
  s.converged = s.iterations <= opt.max_iterations;
  detail::finalize(p, s);
  return s;
}

/// Smallest lambda for which the LASSO solution is identically zero.
inline double lasso_lambda_max(const RegressionProblem& p, bool standardize = true) {
  const VectorXd scale = detail::column_scales(p.design, standardize);
  return 2.0 * (p.design.transpose() * p.target).cwiseQuotient(scale).lpNorm<Eigen::Infinity>();
}

/// `count` log-spaced values from ratio * lambda_max up to lambda_max, ascending.
inline std::vector<double> default_lambda_grid(const RegressionProblem& p, int count = 50,
                                               double ratio = 1e-4, bool standardize = true) {
  const double hi = lasso_lambda_max(p, standardize);
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = hi;
    return grid;
  }
  for (int i = 0; i < count; ++i)
    grid[i] = hi * std::pow(ratio, 1.0 - static_cast<double>(i) / (count - 1));
  return grid;
}

/// Fold of every row: rows are cut into contiguous blocks, the block order is
/// shuffled with the seed, and blocks are dealt to folds round-robin.
inline std::vector<int> assign_folds(Index rows, int k, std::uint64_t seed) {
  const Index blocks = std::min<Index>(rows, 10 * static_cast<Index>(k));
  std::vector<Index> order(static_cast<std::size_t>(blocks));
  for (Index b = 0; b < blocks; ++b) order[b] = b;
  std::mt19937_64 rng(seed);
  for (Index i = blocks - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<int> fold_of_block(static_cast<std::size_t>(blocks));
  for (Index q = 0; q < blocks; ++q) fold_of_block[order[q]] = static_cast<int>(q % k);
  std::vector<int> fold(static_cast<std::size_t>(rows));
  for (Index b = 0; b < blocks; ++b) {
    const Index lo = b * rows / blocks;
    const Index hi = (b + 1) * rows / blocks;
    for (Index i = lo; i < hi; ++i) fold[i] = fold_of_block[b];
  }
  return fold;
}

struct CvPoint {
  double lambda = 0.0;
  std::size_t support_size = 0;  // full-data fit
  double residual_norm = 0.0;    // full-data fit
  double cv_mse = 0.0;           // mean validation MSE over folds
};

struct CvResult {
  double best_lambda = 0.0;
  std::size_t best_index = 0;
  SparseSolution solution;  // refit on all rows at best_lambda
  std::vector<CvPoint> curve;  // ascending lambda
};

/// k-fold cross-validated LASSO. An empty grid selects default_lambda_grid.
/// Ties in validation error go to the larger (sparser) lambda.
inline CvResult lasso_cv(const RegressionProblem& p, std::vector<double> lambdas, int k,
                         std::uint64_t seed, unsigned jobs = 1, const LassoOptions& opt = {}) {
  p.validate();
  if (k < 2) throw Error(ErrorKind::config, "cross validation needs k >= 2");
  if (p.design.rows() < k) throw Error(ErrorKind::data, "fewer rows than folds");
  if (lambdas.empty()) lambdas = default_lambda_grid(p, 50, 1e-4, opt.standardize);
  std::sort(lambdas.begin(), lambdas.end());
  const std::size_t nl = lambdas.size();

  const auto fold = assign_folds(p.design.rows(), k, seed);
  std::vector<std::vector<double>> mse(static_cast<std::size_t>(k), std::vector<double>(nl, 0.0));
  parallel_for(static_cast<std::size_t>(k), jobs, [&](std::size_t f) {
    std::vector<Index> train, valid;
    for (Index i = 0; i < p.design.rows(); ++i)
      (fold[i] == static_cast<int>(f) ? valid : train).push_back(i);
    const RegressionProblem tp = p.rows(train);
    const RegressionProblem vp = p.rows(valid);
    LassoOptions o = opt;
    o.record_objective = false;
    o.warm_start.reset();
    // Descend the path with warm starts.
    for (std::size_t li = nl; li-- > 0;) {
      const SparseSolution s = solve_lasso(tp, lambdas[li], o);
      o.warm_start = s.xi;
      mse[f][li] = (vp.target - vp.design * s.xi).squaredNorm() / static_cast<double>(valid.size());
    }
  });

  CvResult out;
  out.curve.resize(nl);
  std::vector<SparseSolution> full(nl);
  parallel_for(nl, jobs, [&](std::size_t li) {
    LassoOptions o = opt;
    o.record_objective = false;
    full[li] = solve_lasso(p, lambdas[li], o);
  });
  for (std::size_t li = 0; li < nl; ++li) {
    double m = 0.0;
    for (int f = 0; f < k; ++f) m += mse[f][li];
    out.curve[li] = {lambdas[li], full[li].support.size(), full[li].residual_norm, m / k};
  }
  std::size_t best = 0;
  for (std::size_t li = 1; li < nl; ++li)
    if (out.curve[li].cv_mse <= out.curve[best].cv_mse) best = li;
  out.best_index = best;
  out.best_lambda = lambdas[best];
  out.solution = full[best];
  return out;
}

struct ParetoPoint {
  double lambda = 0.0;
  std::size_t support_size = 0;
  double residual_norm = 0.0;
};

/// One sparse fit per lambda, sorted by lambda; the aid for picking an STLS
/// model by hand.
inline std::vector<ParetoPoint> pareto_sweep(const RegressionProblem& p, SolverTag solver,
                                             std::vector<double> lambdas, unsigned jobs = 1) {
  if (lambdas.empty()) throw Error(ErrorKind::config, "pareto sweep needs a nonempty grid");
  if (solver == SolverTag::ols) throw Error(ErrorKind::config, "pareto sweep needs lasso or stls");
  std::sort(lambdas.begin(), lambdas.end());
  std::vector<ParetoPoint> out(lambdas.size());
  parallel_for(lambdas.size(), jobs, [&](std::size_t i) {
    const SparseSolution s =
        solver == SolverTag::stls ? solve_stls(p, lambdas[i]) : solve_lasso(p, lambdas[i]);
    out[i] = {lambdas[i], s.support.size(), s.residual_norm};
  });
  return out;
}

}  // namespace frictionid
