#include "vaxalloc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <vector>

namespace vaxalloc {

CountVec round_to_integer_budget(const Vec& fractional, Count budget, const CountVec* upper) {
  const Index n = fractional.size();
  require(budget >= 0, "budget must be nonnegative");
  require(upper == nullptr || upper->size() == n, "upper bound dimension mismatch");
  require(fractional.sum() <= static_cast<double>(budget) + 1e-6, "fractional allocation exceeds the budget");

  CountVec out(n);
  Vec remainder(n);
  for (Index i = 0; i < n; ++i) {
    const double v = std::max(0.0, fractional(i));
    Count fl = static_cast<Count>(std::floor(v + 1e-9));
    if (upper != nullptr) fl = std::min(fl, (*upper)(i));
    out(i) = fl;
    remainder(i) = v - static_cast<double>(fl);
  }
  const Count target = std::min<Count>(budget, static_cast<Count>(std::floor(fractional.cwiseMax(0.0).sum() + 1e-6)));
  Count leftover = target - out.sum();
  if (leftover <= 0) return out;

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return remainder(a) > remainder(b); });
  for (Index i : order) {
    if (leftover == 0) break;
    if (upper != nullptr && out(i) >= (*upper)(i)) continue;
    ++out(i);
    --leftover;
  }
  return out;
}

CountVec solve_separable_integer(const Vec& quad_diag, const Vec& lin, Count budget, BudgetMode mode,
                                 const CountVec& upper) {
  const Index n = quad_diag.size();
  require(lin.size() == n && upper.size() == n, "dimension mismatch");
  require((upper.array() >= 0).all(), "upper bounds must be nonnegative");
  const Vec upper_d = upper.cast<double>();
  const Count effective = mode == BudgetMode::kExactly ? std::min(budget, upper.sum()) : budget;

  const Vec relaxed = solve_diag_qp_waterfill<double>(quad_diag, lin, static_cast<double>(effective), mode,
                                                      Vec::Zero(n), upper_d);
  CountVec x(n);
  for (Index i = 0; i < n; ++i) {
    x(i) = std::clamp<Count>(static_cast<Count>(std::floor(relaxed(i) + 1e-9)), 0, upper(i));
  }

  auto add_cost = [&](Index i) { return quad_diag(i) * (2.0 * static_cast<double>(x(i)) + 1.0) + lin(i); };
  auto drop_gain = [&](Index i) { return quad_diag(i) * (2.0 * static_cast<double>(x(i)) - 1.0) + lin(i); };

  // Marginal-cost completion from the floors.
  Count remaining = effective - x.sum();
  while (remaining > 0) {
    Index best = -1;
    for (Index i = 0; i < n; ++i) {
      if (x(i) >= upper(i)) continue;
      if (best < 0 || add_cost(i) < add_cost(best)) best = i;
    }
    if (best < 0) break;
    if (mode == BudgetMode::kAtMost && add_cost(best) >= 0.0) break;
    ++x(best);
    --remaining;
  }

  // Unit exchanges until pairwise optimal, which for a separable convex
  // objective is globally optimal.
  const double eps = 1e-12;
  for (int guard = 0; guard < 1000000; ++guard) {
    Index giver = -1;
    Index taker = -1;
    for (Index i = 0; i < n; ++i) {
      if (x(i) > 0 && (giver < 0 || drop_gain(i) > drop_gain(giver))) giver = i;
      if (x(i) < upper(i) && (taker < 0 || add_cost(i) < add_cost(taker))) taker = i;
    }
    if (mode == BudgetMode::kAtMost) {
      if (giver >= 0 && drop_gain(giver) > eps) {
        --x(giver);
        continue;
      }
      if (taker >= 0 && x.sum() < effective && add_cost(taker) < -eps) {
        ++x(taker);
        continue;
      }
    }
    if (giver < 0 || taker < 0 || giver == taker) break;
    if (add_cost(taker) - drop_gain(giver) < -eps * (1.0 + std::abs(drop_gain(giver)))) {
      // Apply the pair as a single move; evaluate the combined change exactly.
      --x(giver);
      const double change = add_cost(taker) - (quad_diag(giver) * (2.0 * static_cast<double>(x(giver)) + 1.0) + lin(giver));
      if (change < 0.0) {
        ++x(taker);
      } else {
        ++x(giver);
        break;
      }
    } else {
      break;
    }
  }
  return x;
}

namespace {

// Two-block view of a bilinear form, already turned into a minimization.
struct Bilinear {
  Index n = 0;
  Vec diag1;    // Q11 diagonal
  Vec cross;    // Q12 diagonal; objective carries 2 * cross_i * x1_i * x2_i
  Vec lin1;
  Vec lin2;
  Vec cap1;     // K11 = I rows, combined with upper bounds
  Vec rhs2;     // h2
  Vec coupling; // K21 diagonal
  Vec upper2;
  double budget = 0.0;
  BudgetMode mode = BudgetMode::kAtMost;

  double value(const Vec& x1, const Vec& x2) const {
    return (diag1.array() * x1.array().square() + 2.0 * cross.array() * x1.array() * x2.array() +
            lin1.array() * x1.array() + lin2.array() * x2.array())
        .sum();
  }

  // Largest x1_i allowed with x2_i = 0.
  double first_block_cap(Index i) const {
    double cap = cap1(i);
    if (coupling(i) > 0.0) cap = std::min(cap, rhs2(i) / coupling(i));
    return std::max(0.0, cap);
  }

  Vec second_block(const Vec& x1, bool integer) const {
    Vec coef = lin2 + 2.0 * cross.cwiseProduct(x1);
    Vec cap(n);
    for (Index i = 0; i < n; ++i) {
      double c = std::min(upper2(i), rhs2(i) - coupling(i) * x1(i));
      c = std::max(0.0, c);
      cap(i) = integer ? std::floor(c + 1e-9) : c;
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return coef(a) < coef(b); });
    Vec x2 = Vec::Zero(n);
    double left = integer ? std::floor(budget + 1e-9) : budget;
    for (Index i : order) {
      if (left <= 0.0) break;
      if (mode == BudgetMode::kAtMost && !(coef(i) < 0.0)) break;
      const double take = std::min(left, cap(i));
      x2(i) = take;
      left -= take;
    }
    return x2;
  }

  Vec first_block(const Vec& x2) const {
    Vec lo = Vec::Zero(n);
    Vec hi(n);
    for (Index i = 0; i < n; ++i) {
      hi(i) = cap1(i);
      const double room = rhs2(i) - x2(i);
      if (coupling(i) > 0.0) {
        hi(i) = std::min(hi(i), room / coupling(i));
      } else if (coupling(i) < 0.0) {
        lo(i) = std::max(0.0, room / coupling(i));
      }
      hi(i) = std::max(hi(i), lo(i));
    }
    if (lo.sum() > budget) return Vec();
    return solve_diag_qp_waterfill<double>(diag1.cwiseMax(0.0), lin1 + 2.0 * cross.cwiseProduct(x2), budget, mode,
                                           lo, hi);
  }

  double integer_value(const Vec& x1) const { return value(x1, second_block(x1, true)); }
};

bool is_diagonal(const Mat& m, double tol) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (i != j && std::abs(m(i, j)) > tol) return false;
    }
  }
  return true;
}

Bilinear extract_bilinear(const QpFormd& form) {
  form.validate();
  require(form.blocks() == 2, "bilinear solver expects two decision blocks");
  const Index n = form.block_size;
  const Mat& q = form.quad;
  const Mat& k = form.ineq_matrix;
  const double tol = 1e-12 * (1.0 + q.cwiseAbs().maxCoeff());
  require(k.rows() == 2 * n, "bilinear solver expects one constraint row per variable");
  const bool shaped = is_diagonal(q.topLeftCorner(n, n), tol) && is_diagonal(q.topRightCorner(n, n), tol) &&
                      q.bottomRightCorner(n, n).cwiseAbs().maxCoeff() <= tol &&
                      k.topLeftCorner(n, n).isIdentity() && k.topRightCorner(n, n).isZero() &&
                      is_diagonal(k.bottomLeftCorner(n, n), 0.0) && k.bottomRightCorner(n, n).isIdentity();
  require(shaped, "form is not in the two-block bilinear shape");

  const double s = form.sign();
  Bilinear b;
  b.n = n;
  b.diag1 = s * q.topLeftCorner(n, n).diagonal();
  b.cross = s * q.topRightCorner(n, n).diagonal();
  b.lin1 = s * form.lin.head(n);
  b.lin2 = s * form.lin.tail(n);
  b.cap1 = form.ineq_rhs.head(n).cwiseMin(form.upper.head(n));
  b.rhs2 = form.ineq_rhs.tail(n);
  b.coupling = k.bottomLeftCorner(n, n).diagonal();
  b.upper2 = form.upper.tail(n);
  b.budget = form.budget;
  b.mode = form.budget_mode;
  return b;
}

// Number of integer points 0 <= x <= caps with the block budget, saturating
// just above `limit`.
double count_points(const std::vector<Count>& caps, Count budget, BudgetMode mode, double limit) {
  double product = 1.0;
  for (Count c : caps) {
    product *= static_cast<double>(c + 1);
    if (product > limit) break;
  }
  Count cap_sum = 0;
  for (Count c : caps) cap_sum += c;
  if (mode == BudgetMode::kAtMost && cap_sum <= budget) return product;
  if (static_cast<double>(budget) > limit) {
    return product <= limit ? product : limit + 1;
  }
  // ways[s] = number of points with block sum s; sliding-window sums keep
  // each zone O(budget).
  const auto width = static_cast<std::size_t>(budget + 1);
  std::vector<double> ways(width, 0.0);
  ways[0] = 1.0;
  for (Count c : caps) {
    std::vector<double> prefix(width + 1, 0.0);
    for (std::size_t s = 0; s < width; ++s) prefix[s + 1] = prefix[s] + ways[s];
    for (std::size_t s = 0; s < width; ++s) {
      const std::size_t lo = s >= static_cast<std::size_t>(c) ? s - static_cast<std::size_t>(c) : 0;
      ways[s] = std::min(limit + 1, prefix[s + 1] - prefix[lo]);
    }
  }
  if (mode == BudgetMode::kExactly) return ways.back();
  double total = 0.0;
  for (double w : ways) total = std::min(limit + 1, total + w);
  return total;
}

// Integer local search over the first block with the second block solved
// exactly. Moves add, drop or transfer `step` units; the step halves down to 1.
Vec local_search(const Bilinear& b, Vec x1, const std::vector<Count>& caps, Count budget, int max_passes) {
  const Index n = b.n;
  double best = b.integer_value(x1);
  Count step = std::max<Count>(1, budget / (2 * std::max<Index>(n, 1)));
  int passes = 0;
  while (step >= 1 && passes < max_passes) {
    bool improved = true;
    while (improved && passes < max_passes) {
      improved = false;
      ++passes;
      const double used = x1.sum();
      for (Index j = 0; j < n && !improved; ++j) {
        const double room_j = static_cast<double>(caps[static_cast<std::size_t>(j)]) - x1(j);
        // add to j
        if (b.mode == BudgetMode::kAtMost && room_j >= static_cast<double>(step) &&
            used + static_cast<double>(step) <= static_cast<double>(budget)) {
          x1(j) += static_cast<double>(step);
          const double v = b.integer_value(x1);
          if (v < best - 1e-12 * (1.0 + std::abs(best))) {
            best = v;
            improved = true;
            break;
          }
          x1(j) -= static_cast<double>(step);
        }
        // drop from j
        if (b.mode == BudgetMode::kAtMost && x1(j) >= static_cast<double>(step)) {
          x1(j) -= static_cast<double>(step);
          const double v = b.integer_value(x1);
          if (v < best - 1e-12 * (1.0 + std::abs(best))) {
            best = v;
            improved = true;
            break;
          }
          x1(j) += static_cast<double>(step);
        }
        // transfer i -> j
        if (room_j < static_cast<double>(step)) continue;
        for (Index i = 0; i < n; ++i) {
          if (i == j || x1(i) < static_cast<double>(step)) continue;
          x1(i) -= static_cast<double>(step);
          x1(j) += static_cast<double>(step);
          const double v = b.integer_value(x1);
          if (v < best - 1e-12 * (1.0 + std::abs(best))) {
            best = v;
            improved = true;
            break;
          }
          x1(i) += static_cast<double>(step);
          x1(j) -= static_cast<double>(step);
        }
      }
    }
    step /= 2;
  }
  return x1;
}

Vec integer_start(const Vec& x1, const std::vector<Count>& caps, Count budget) {
  CountVec upper(static_cast<Index>(caps.size()));
  for (std::size_t i = 0; i < caps.size(); ++i) upper(static_cast<Index>(i)) = caps[i];
  Vec clipped = x1.cwiseMax(0.0).cwiseMin(upper.cast<double>());
  const double total = clipped.sum();
  if (total > static_cast<double>(budget)) clipped *= static_cast<double>(budget) / total;
  return round_to_integer_budget(clipped, budget, &upper).cast<double>();
}

}  // namespace

SolverReport solve_bilinear_qp(const QpFormd& form, Rng& rng, const SolverOptions& options) {
  const Bilinear b = extract_bilinear(form);
  const Index n = b.n;
  const Count budget = static_cast<Count>(std::floor(b.budget + options.budget_tol));

  std::vector<Count> caps(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    caps[static_cast<std::size_t>(i)] =
        std::min<Count>(budget, static_cast<Count>(std::floor(b.first_block_cap(i) + 1e-9)));
  }

  SolverReport report;
  auto finish = [&](const Vec& x1) {
    const Vec x2 = b.second_block(x1, true);
    report.solution.resize(2 * n);
    report.solution << x1, x2;
    report.objective = form.objective(report.solution);
    if (!form.feasible(report.solution, 1e-7)) {
      report.converged = false;
      report.fallback_used = true;
    }
    return report;
  };

  if (b.mode == BudgetMode::kExactly) {
    Count cap_sum = 0;
    for (Count c : caps) cap_sum += c;
    if (cap_sum < budget) {
      report.fallback_used = true;
      report.solution = Vec::Zero(2 * n);
      report.objective = form.objective(report.solution);
      return report;
    }
  }

  // Exhaustive search over the first block when small; the second block is
  // linear given the first and solved exactly by the greedy fill.
  if (count_points(caps, budget, b.mode, options.enumeration_limit) <= options.enumeration_limit) {
    Vec x1 = Vec::Zero(n);
    Vec best_x1;
    double best = std::numeric_limits<double>::infinity();
    std::function<void(Index, Count)> visit = [&](Index i, Count left) {
      if (i == n) {
        if (b.mode == BudgetMode::kExactly && left != 0) return;
        const double v = b.integer_value(x1);
        if (v < best) {
          best = v;
          best_x1 = x1;
        }
        return;
      }
      const Count top = std::min(caps[static_cast<std::size_t>(i)], left);
      for (Count v = 0; v <= top; ++v) {
        x1(i) = static_cast<double>(v);
        visit(i + 1, left - v);
      }
      x1(i) = 0.0;
    };
    visit(0, budget);
    report.starts_used = 0;
    report.converged = true;
    if (best_x1.size() == 0) {
      report.fallback_used = true;
      report.solution = Vec::Zero(2 * n);
      report.objective = form.objective(report.solution);
      return report;
    }
    return finish(best_x1);
  }

  // Starting points: proportional to the first-block caps, then random
  // fractions of the budget spread by a flat Dirichlet draw.
  std::vector<Vec> starts;
  {
    Vec cap_vec(n);
    for (Index i = 0; i < n; ++i) cap_vec(i) = b.first_block_cap(i);
    Vec prop = cap_vec;
    if (prop.sum() > b.budget && prop.sum() > 0.0) prop *= b.budget / prop.sum();
    starts.push_back(prop);
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int s = 0; s < options.starts; ++s) {
      Vec w(n);
      for (Index i = 0; i < n; ++i) w(i) = expo(rng);
      const double scale = b.mode == BudgetMode::kExactly ? 1.0 : unif(rng);
      Vec x = (w / std::max(w.sum(), 1e-300)) * (scale * b.budget);
      starts.push_back(x.cwiseMin(cap_vec));
    }
  }

  double best_value = std::numeric_limits<double>::infinity();
  Vec best_x1;
  Vec best_relaxed;
  double best_relaxed_value = std::numeric_limits<double>::infinity();
  bool best_converged = false;
  for (const Vec& start : starts) {
    const Vec int_start = integer_start(start, caps, budget);
    const double int_value = b.integer_value(int_start);
    if (int_value < best_value) {
      best_value = int_value;
      best_x1 = int_start;
    }

    Vec x1 = start;
    Vec x2 = b.second_block(x1, false);
    double value = b.value(x1, x2);
    bool converged = false;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      const Vec next1 = b.first_block(x2);
      if (next1.size() == 0) break;
      const Vec next2 = b.second_block(next1, false);
      const double next_value = b.value(next1, next2);
      const bool stalled = value - next_value <= options.gradient_tol * (1.0 + std::abs(value));
      if (next_value <= value) {
        x1 = next1;
        x2 = next2;
        value = next_value;
      }
      if (stalled) {
        converged = true;
        break;
      }
    }
    if (value < best_relaxed_value) {
      best_relaxed_value = value;
      best_relaxed = x1;
      best_converged = converged;
    }
  }
  report.starts_used = static_cast<int>(starts.size());
  report.converged = best_converged;

  if (best_relaxed.size() == n) {
    const Vec rounded = integer_start(best_relaxed, caps, budget);
    const Vec polished = local_search(b, rounded, caps, budget, 200);
    const double v = b.integer_value(polished);
    if (v < best_value) {
      best_value = v;
      best_x1 = polished;
    }
  }
  if (best_x1.size() != n) {
    report.fallback_used = true;
    report.converged = false;
    report.solution = Vec::Zero(2 * n);
    report.objective = form.objective(report.solution);
    return report;
  }
  return finish(best_x1);
}

SolverReport brute_force_qp(const QpFormd& form, double grid_step) {
  form.validate();
  require(grid_step > 0.0, "grid step must be positive");
  const Index n = form.size();
  const Index block = form.block_size;
  const Count units = static_cast<Count>(std::floor(form.budget / grid_step + 1e-9));

  std::vector<Count> caps(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double up = std::min(form.upper(i), form.budget);
    caps[static_cast<std::size_t>(i)] = std::min<Count>(units, static_cast<Count>(std::floor(up / grid_step + 1e-9)));
  }
  constexpr double kLimit = 1e6;
  double space = 1.0;
  for (Index bidx = 0; bidx < form.blocks(); ++bidx) {
    std::vector<Count> block_caps(caps.begin() + bidx * block, caps.begin() + (bidx + 1) * block);
    space *= count_points(block_caps, units, form.budget_mode, kLimit);
    if (space > kLimit) throw std::length_error("search space too large for brute force");
  }

  const double s = form.sign();
  Vec x = Vec::Zero(n);
  Vec best_x;
  double best = std::numeric_limits<double>::infinity();
  std::function<void(Index, Count)> visit = [&](Index i, Count left) {
    if (i == n || (i % block == 0 && i > 0)) {
      if (form.budget_mode == BudgetMode::kExactly && left != 0) return;
      if (i == n) {
        if (form.ineq_matrix.rows() > 0 &&
            ((form.ineq_matrix * x - form.ineq_rhs).array() > 1e-9 * (1.0 + form.ineq_rhs.cwiseAbs().array())).any()) {
          return;
        }
        const double v = s * form.objective(x);
        if (v < best) {
          best = v;
          best_x = x;
        }
        return;
      }
      left = units;
    }
    const Count top = std::min(caps[static_cast<std::size_t>(i)], left);
    for (Count v = 0; v <= top; ++v) {
      x(i) = static_cast<double>(v) * grid_step;
      visit(i + 1, left - v);
    }
    x(i) = 0.0;
  };
  visit(0, units);
  if (best_x.size() == 0) throw std::runtime_error("empty feasible set");

  SolverReport report;
  report.solution = best_x;
  report.objective = form.objective(best_x);
  report.starts_used = 0;
  report.converged = true;
  return report;
}

}  // namespace vaxalloc
