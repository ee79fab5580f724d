#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "vaxalloc/qp_form.hpp"
#include "vaxalloc/rng.hpp"
#include "vaxalloc/types.hpp"

namespace vaxalloc {

struct SolverOptions {
  int starts = 16;
  double gradient_tol = 1e-8;
  int max_iterations = 10000;
  double budget_tol = 1e-9;
  double enumeration_limit = 1e5;
};

struct SolverReport {
  Vec solution;
  double objective = 0.0;
  int starts_used = 0;
  bool converged = false;
  bool fallback_used = false;
};

/// Water-filling for min sum_i D_i x_i^2 + d_i x_i subject to
/// lower <= x <= upper and sum x = budget (or <= budget).
///
/// Coordinates with D_i > 0 follow the KKT level x_i = clamp((lambda - d_i) / (2 D_i)),
/// with lambda found by bisection. Coordinates with D_i == 0 are linear; they
/// sit at their lower bound and only absorb budget the quadratic coordinates
/// cannot take (exact mode) or when d_i < 0 (at-most mode), cheapest first.
template <typename Scalar>
Vector<Scalar> solve_diag_qp_waterfill(const Vector<Scalar>& quad_diag, const Vector<Scalar>& lin, Scalar budget,
                                       BudgetMode mode, const Vector<Scalar>& lower, const Vector<Scalar>& upper,
                                       Scalar tol = Scalar(1e-9)) {
  const Index n = quad_diag.size();
  require(lin.size() == n && lower.size() == n && upper.size() == n, "water-filling dimension mismatch");
  require((quad_diag.array() >= 0).all(), "water-filling needs a nonnegative diagonal");
  require((lower.array() <= upper.array()).all(), "water-filling bounds cross");
  require(budget >= 0, "budget must be nonnegative");

  Vector<Scalar> x = lower;
  const Scalar lower_sum = lower.sum();
  if (lower_sum > budget + tol) {
    throw std::invalid_argument("lower bounds exceed the budget");
  }
  Scalar remaining = budget - lower_sum;

  std::vector<Index> quadratic;
  std::vector<Index> linear;
  for (Index i = 0; i < n; ++i) (quad_diag(i) > 0 ? quadratic : linear).push_back(i);

  auto level = [&](Index i, Scalar lambda) {
    return std::clamp((lambda - lin(i)) / (2 * quad_diag(i)), lower(i), upper(i));
  };
  auto fill_at = [&](Scalar lambda) {
    Scalar total = 0;
    for (Index i : quadratic) total += level(i, lambda) - lower(i);
    return total;
  };

  if (!quadratic.empty()) {
    Scalar capacity = 0;
    for (Index i : quadratic) capacity += upper(i) - lower(i);
    Scalar target = std::min(remaining, capacity);
    Scalar lambda_lo = std::numeric_limits<Scalar>::infinity();
    Scalar lambda_hi = -std::numeric_limits<Scalar>::infinity();
    for (Index i : quadratic) {
      lambda_lo = std::min(lambda_lo, lin(i) + 2 * quad_diag(i) * lower(i));
      const Scalar top = std::isfinite(upper(i)) ? upper(i) : lower(i) + target;
      lambda_hi = std::max(lambda_hi, lin(i) + 2 * quad_diag(i) * top);
    }
    Scalar lambda;
    if (mode == BudgetMode::kAtMost && fill_at(Scalar(0)) <= target) {
      lambda = 0;
    } else {
      if (mode == BudgetMode::kAtMost) lambda_hi = std::min(lambda_hi, Scalar(0));
      for (int iter = 0; iter < 400 && lambda_hi - lambda_lo > 0; ++iter) {
        const Scalar mid = lambda_lo + (lambda_hi - lambda_lo) / 2;
        if (mid == lambda_lo || mid == lambda_hi) break;
        (fill_at(mid) < target ? lambda_lo : lambda_hi) = mid;
      }
      lambda = lambda_hi;
    }
    Scalar used = 0;
    for (Index i : quadratic) {
      x(i) = level(i, lambda);
      used += x(i) - lower(i);
    }
    // Push the bisection residual onto coordinates strictly inside their box.
    if (mode == BudgetMode::kExactly || lambda != 0) {
      Scalar residual = target - used;
      for (Index i : quadratic) {
        if (std::abs(residual) <= Scalar(0)) break;
        const Scalar moved = std::clamp(x(i) + residual, lower(i), upper(i)) - x(i);
        x(i) += moved;
        residual -= moved;
        used += moved;
      }
    }
    remaining -= used;
  }

  if (remaining > tol) {
    std::sort(linear.begin(), linear.end(), [&](Index a, Index b) {
      return lin(a) < lin(b) || (lin(a) == lin(b) && a < b);
    });
    for (Index i : linear) {
      if (remaining <= 0) break;
      if (mode == BudgetMode::kAtMost && !(lin(i) < 0)) break;
      const Scalar take = std::min(remaining, upper(i) - lower(i));
      x(i) += take;
      remaining -= take;
    }
  }
  if (mode == BudgetMode::kExactly && remaining > tol * (1 + budget)) {
    throw std::invalid_argument("budget exceeds the total upper bounds");
  }
  return x;
}

template <typename Scalar>
Vector<Scalar> solve_diag_qp_waterfill(const Vector<Scalar>& quad_diag, const Vector<Scalar>& lin, Scalar budget) {
  const Index n = quad_diag.size();
  return solve_diag_qp_waterfill<Scalar>(quad_diag, lin, budget, BudgetMode::kExactly, Vector<Scalar>::Zero(n),
                                         unbounded<Scalar>(n));
}

/// Floors plus largest-remainder distribution of the leftover units; ties go
/// to the lowest index. Coordinates never exceed `upper` when given.
CountVec round_to_integer_budget(const Vec& fractional, Count budget, const CountVec* upper = nullptr);

/// Exact integer minimizer of a separable convex quadratic under a budget:
/// water-filling, floors, then marginal-cost completion and pairwise
/// exchanges until no unit move improves the objective.
CountVec solve_separable_integer(const Vec& quad_diag, const Vec& lin, Count budget, BudgetMode mode,
                                 const CountVec& upper);

/// Multi-start alternating block minimization for the two-block bilinear
/// forms produced by the lookahead policy (Q22 = 0, diagonal blocks,
/// K = [[I, 0], [diag(k), I]]). Returns an integer-feasible point.
SolverReport solve_bilinear_qp(const QpFormd& form, Rng& rng, const SolverOptions& options = {});

/// Exhaustive search over grid points of the form. Throws std::length_error
/// above 1e6 points and std::runtime_error when nothing is feasible.
SolverReport brute_force_qp(const QpFormd& form, double grid_step = 1.0);

}  // namespace vaxalloc
