#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

/// P(test positive | tested) by summing the outcome tree
/// {infected, healthy} x {symptomatic, not} x {seeks test, not} x {result}.
inline double enumerate_test_positive(double p_inf, double a, double b, double c, double d, double fp, double fn) {
  double tested = 0.0;
  double positive = 0.0;
  for (int infected = 0; infected < 2; ++infected) {
    const double p_state = infected ? p_inf : 1.0 - p_inf;
    const double p_symp = infected ? a : b;
    for (int symp = 0; symp < 2; ++symp) {
      const double p_s = symp ? p_symp : 1.0 - p_symp;
      const double p_seek = symp ? c : d;
      for (int seeks = 0; seeks < 2; ++seeks) {
        if (!seeks) continue;  // untested people never produce a result
        const double mass = p_state * p_s * p_seek;
        tested += mass;
        const double p_pos_result = infected ? 1.0 - fn : fp;
        positive += mass * p_pos_result;
      }
    }
  }
  return positive / tested;
}

/// Adaptive Simpson quadrature on [lo, hi].
inline double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol,
                               int depth = 60) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double a, double b, double fa, double fm, double fb, double whole, double eps, int left) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const double flm = f(lm);
        const double frm = f(rm);
        const double left_part = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right_part = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left_part + right_part - whole;
        if (left <= 0 || std::abs(delta) <= 15.0 * eps) return left_part + right_part + delta / 15.0;
        return rec(a, m, fa, flm, fm, left_part, eps / 2.0, left - 1) +
               rec(m, b, fm, frm, fb, right_part, eps / 2.0, left - 1);
      };
  const double fa = f(lo);
  const double fb = f(hi);
  const double fm = f(0.5 * (lo + hi));
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  return rec(lo, hi, fa, fm, fb, whole, tol, depth);
}

/// Posterior mean of p under a Beta(alpha, beta) prior after `positives` of
/// `trials`, by integrating the unnormalized posterior density. The
/// substitution p = (1 - cos(pi s)) / 2 tames the endpoint behavior; the
/// density is scaled by its mode to stay in range.
inline double posterior_mean_by_quadrature(double alpha, double beta, long trials, long positives) {
  const double a = static_cast<double>(positives) + alpha - 1.0;
  const double b = static_cast<double>(trials - positives) + beta - 1.0;
  const double mode = (a + b) > 0.0 ? std::clamp(a / (a + b), 1e-300, 1.0 - 1e-16) : 0.5;
  const double log_peak = a * std::log(mode) + b * std::log1p(-mode);
  auto density = [&](double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return std::exp(a * std::log(p) + b * std::log1p(-p) - log_peak);
  };
  const double pi = 3.14159265358979323846;
  auto mass = [&](double s) {
    const double p = 0.5 * (1.0 - std::cos(pi * s));
    return density(p) * 0.5 * pi * std::sin(pi * s);
  };
  auto moment = [&](double s) {
    const double p = 0.5 * (1.0 - std::cos(pi * s));
    return p * density(p) * 0.5 * pi * std::sin(pi * s);
  };
  // Fixed panels first so a narrow peak cannot slip between the initial nodes.
  const int panels = 256;
  double z = 0.0;
  double m = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = static_cast<double>(k) / panels;
    const double hi = static_cast<double>(k + 1) / panels;
    z += adaptive_simpson(mass, lo, hi, 1e-13);
    m += adaptive_simpson(moment, lo, hi, 1e-13);
  }
  return m / z;
}

/// Two weeks of the controller's deterministic SIR model from (S, I) with
/// vaccine decisions x1 then x2; returns I after week one plus I after week two.
inline double two_step_infections(double s, double i, double beta, double gamma, double n, double x1, double x2) {
  double total = 0.0;
  for (double x : {x1, x2}) {
    const double remaining = s - x > 0.0 ? s - x : 0.0;
    const double rate = std::min(1.0, beta * i / n);
    const double fresh = rate * remaining;
    s = remaining - fresh;
    i = (1.0 - gamma) * i + fresh;
    total += i;
  }
  return total;
}

/// Visits every nonnegative integer vector with entries <= caps and sum
/// <= budget (or == budget when `exact`).
inline void for_each_allocation(const std::vector<long>& caps, long budget, bool exact,
                                const std::function<void(const std::vector<long>&)>& visit) {
  std::vector<long> x(caps.size(), 0);
  std::function<void(std::size_t, long)> rec = [&](std::size_t k, long left) {
    if (k == caps.size()) {
      if (!exact || left == 0) visit(x);
      return;
    }
    for (long v = 0; v <= std::min(caps[k], left); ++v) {
      x[k] = v;
      rec(k + 1, left - v);
    }
    x[k] = 0;
  };
  rec(0, budget);
}

/// Grid-search Euclidean projection of (s, r) onto {s' + r' = mass, s', r' >= 0}.
inline std::pair<double, double> project_by_grid(double s, double r, double mass, int points = 200001) {
  double best = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  for (int k = 0; k < points; ++k) {
    const double cand = mass * k / (points - 1);
    const double dist = (cand - s) * (cand - s) + (mass - cand - r) * (mass - cand - r);
    if (dist < best) {
      best = dist;
      best_s = cand;
    }
  }
  return {best_s, mass - best_s};
}

/// Multinomial draw of (S, I) for N people with probabilities (ps, pi).
template <typename Rng>
std::pair<long, long> multinomial_si(Rng& rng, long n, double ps, double pi) {
  std::binomial_distribution<long> s_dist(n, ps);
  const long s = s_dist(rng);
  const double cond = ps < 1.0 ? std::min(1.0, pi / (1.0 - ps)) : 0.0;
  std::binomial_distribution<long> i_dist(n - s, cond);
  return {s, i_dist(rng)};
}

}  // namespace oracle
