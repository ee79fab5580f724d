#pragma once

#include <cmath>
#include <limits>

#include "vaxalloc/types.hpp"

namespace vaxalloc {

enum class BudgetMode { kAtMost, kExactly };
enum class Sense { kMinimize, kMaximize };

/// Quadratic objective x'Qx + q'x over x >= 0, x <= upper, Kx <= h, with a
/// budget on each consecutive block of `block_size` variables.
template <typename Scalar>
struct QpForm {
  Matrix<Scalar> quad;
  Vector<Scalar> lin;
  Matrix<Scalar> ineq_matrix;
  Vector<Scalar> ineq_rhs;
  Vector<Scalar> upper;
  Scalar budget = 0;
  Index block_size = 0;
  BudgetMode budget_mode = BudgetMode::kAtMost;
  Sense sense = Sense::kMinimize;

  Index size() const { return lin.size(); }
  Index blocks() const { return block_size > 0 ? size() / block_size : 0; }

  Scalar objective(const Vector<Scalar>& x) const { return x.dot(quad * x) + lin.dot(x); }

  /// +1 when the form is minimized, -1 when maximized.
  Scalar sign() const { return sense == Sense::kMinimize ? Scalar(1) : Scalar(-1); }

  void validate() const {
    const Index n = size();
    require(quad.rows() == n && quad.cols() == n, "QP matrix dimension mismatch");
    require(ineq_matrix.rows() == ineq_rhs.size(), "constraint rows and right-hand side differ");
    require(ineq_matrix.rows() == 0 || ineq_matrix.cols() == n, "constraint matrix column mismatch");
    require(upper.size() == n, "upper bound dimension mismatch");
    require(block_size > 0 && n % block_size == 0, "variables do not split into budget blocks");
    require(budget >= 0, "budget must be nonnegative");
    require(quad.isApprox(quad.transpose()) || quad.isZero(), "QP matrix must be symmetric");
  }

  bool feasible(const Vector<Scalar>& x, Scalar tol = Scalar(1e-9)) const {
    if (x.size() != size()) return false;
    if ((x.array() < -tol).any()) return false;
    if (((x - upper).array() > tol).any()) return false;
    if (ineq_matrix.rows() > 0 && ((ineq_matrix * x - ineq_rhs).array() > tol * (1 + ineq_rhs.cwiseAbs().array())).any()) {
      return false;
    }
    for (Index b = 0; b < blocks(); ++b) {
      const Scalar total = x.segment(b * block_size, block_size).sum();
      const Scalar slack = tol * (1 + budget);
      if (total > budget + slack) return false;
      if (budget_mode == BudgetMode::kExactly && total < budget - slack) return false;
    }
    return true;
  }
};

using QpFormd = QpForm<double>;

template <typename Scalar>
Vector<Scalar> unbounded(Index n) {
  return Vector<Scalar>::Constant(n, std::numeric_limits<Scalar>::infinity());
}

}  // namespace vaxalloc
