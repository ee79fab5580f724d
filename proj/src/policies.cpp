#include "vaxalloc/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vaxalloc/normal.hpp"

namespace vaxalloc {

void PfaParams::validate() const { require(theta0 > 0.0, "PFA exponent must be positive"); }

void TestPolicyParams::validate() const { require(rho >= 0.0 && rho <= 1.0, "rho must lie in [0, 1]"); }

CountVec null_policy(Index n_zones) { return CountVec::Zero(n_zones); }

namespace {

// log sigmoid(s) = -log1p(exp(-s)), evaluated without overflow.
Vec log_pfa_response(const Vec& p_susc, const PfaParams& params) {
  params.validate();
  Vec log_g(p_susc.size());
  for (Index z = 0; z < p_susc.size(); ++z) {
    const double s = params.theta1 * p_susc(z);
    const double log_sig = s >= 0 ? -std::log1p(std::exp(-s)) : s - std::log1p(std::exp(s));
    log_g(z) = params.theta0 * log_sig;
  }
  return log_g;
}

}  // namespace

Vec pfa_response(const Vec& p_susc, const PfaParams& params) {
  return log_pfa_response(p_susc, params).array().exp();
}

CountVec pfa_policy(const BeliefState& belief, const PfaParams& params) {
  const Index n = belief.zones();
  if (n == 0) return CountVec();
  // The exponent can push g below double range; only ratios matter.
  const Vec log_g = log_pfa_response(belief.p_susc, params);
  const Vec share = (log_g.array() - log_g.maxCoeff()).exp();
  const double total = share.sum();
  CountVec out(n);
  for (Index z = 0; z < n; ++z) {
    out(z) = static_cast<Count>(std::floor(static_cast<double>(belief.n_vac) * share(z) / total));
  }
  // Floating error in the shares must never overspend.
  while (out.sum() > belief.n_vac) {
    Index top = 0;
    out.maxCoeff(&top);
    --out(top);
  }
  return out;
}

LookaheadState build_lookahead_state(const BeliefState& belief, const CountVec& populations, double theta_risk) {
  require(theta_risk > 0.0 && theta_risk < 1.0, "risk quantile must lie in (0, 1)");
  const Index n = belief.zones();
  require(populations.size() == n, "population dimension mismatch");
  const double z_theta = normal::quantile(1.0 - theta_risk);
  LookaheadState look;
  look.s_risk.resize(n);
  look.i_mean.resize(n);
  look.r_resid.resize(n);
  for (Index z = 0; z < n; ++z) {
    const double pop = static_cast<double>(populations(z));
    const double ps = belief.p_susc(z);
    const double sd = std::sqrt(std::max(0.0, pop * ps * (1.0 - ps)));
    look.i_mean(z) = pop * belief.p_inf(z);
    look.s_risk(z) = std::clamp(pop * ps - z_theta * sd, 0.0, pop - look.i_mean(z));
    look.r_resid(z) = pop - look.s_risk(z) - look.i_mean(z);
  }
  return look;
}

DlaForm assemble_dla_qp(const LookaheadState& look, const ControllerParams& params, Count n_vac) {
  params.validate();
  const Index n = params.zones();
  require(look.s_risk.size() == n && look.i_mean.size() == n, "lookahead dimension mismatch");
  if (look.s_risk.sum() <= static_cast<double>(n_vac)) {
    throw TrivialBranch("supply covers every pessimistic susceptible");
  }
  const Vec pop = params.populations.cast<double>();

  DlaVectors vec;
  vec.b = params.beta.cwiseQuotient(pop);
  const Vec bi = vec.b.cwiseProduct(look.i_mean);
  vec.u = -bi;
  vec.w = bi.array() - 1.0;
  vec.v = (1.0 - params.gamma) * look.i_mean + bi.cwiseProduct(look.s_risk);
  vec.z = look.s_risk - bi.cwiseProduct(look.s_risk);

  // Two-step infections I1 + I2 with I1 = v + u x1 and
  // I2 = (1 - gamma) I1 + b I1 (z + w x1 - x2), minimized.
  const Vec bu = vec.b.cwiseProduct(vec.u);
  QpFormd form;
  form.quad = Mat::Zero(2 * n, 2 * n);
  form.quad.topLeftCorner(n, n).diagonal() = bu.cwiseProduct(vec.w);
  form.quad.topRightCorner(n, n).diagonal() = -0.5 * bu;
  form.quad.bottomLeftCorner(n, n).diagonal() = -0.5 * bu;
  form.lin.resize(2 * n);
  form.lin.head(n) = (2.0 - params.gamma) * vec.u +
                     vec.b.cwiseProduct(vec.u.cwiseProduct(vec.z) + vec.w.cwiseProduct(vec.v));
  form.lin.tail(n) = -vec.b.cwiseProduct(vec.v);

  form.ineq_matrix = Mat::Zero(2 * n, 2 * n);
  form.ineq_matrix.topLeftCorner(n, n).setIdentity();
  form.ineq_matrix.bottomLeftCorner(n, n).diagonal() = -vec.w;
  form.ineq_matrix.bottomRightCorner(n, n).setIdentity();
  form.ineq_rhs.resize(2 * n);
  form.ineq_rhs << look.s_risk, vec.z;
  form.upper = unbounded<double>(2 * n);
  form.budget = static_cast<double>(n_vac);
  form.block_size = n;
  form.budget_mode = BudgetMode::kAtMost;
  form.sense = Sense::kMinimize;
  return {std::move(form), std::move(vec)};
}

double lookahead_two_step_cost(const LookaheadState& look, const ControllerParams& params, const Vec& x1,
                               const Vec& x2) {
  double total = 0.0;
  for (Index z = 0; z < params.zones(); ++z) {
    const double pop = static_cast<double>(params.populations(z));
    double s = look.s_risk(z);
    double i = look.i_mean(z);
    for (double x : {x1(z), x2(z)}) {
      const double s_x = std::max(0.0, s - x);
      const double infection = std::min(1.0, params.beta(z) * i / pop);
      const double fresh = infection * s_x;
      s = s_x - fresh;
      i = (1.0 - params.gamma) * i + fresh;
      total += i;
    }
  }
  return total;
}

CountVec proportional_allocation(Count budget, const CountVec& populations) {
  const double total = static_cast<double>(populations.sum());
  CountVec out(populations.size());
  for (Index z = 0; z < populations.size(); ++z) {
    out(z) = static_cast<Count>(std::floor(static_cast<double>(budget) * static_cast<double>(populations(z)) / total));
  }
  return out;
}

DlaDecision dla_policy(const BeliefState& belief, const ControllerParams& params, double theta_risk, Rng& rng,
                       const SolverOptions& options) {
  const LookaheadState look = build_lookahead_state(belief, params.populations, theta_risk);
  DlaDecision out;
  if (look.s_risk.sum() <= static_cast<double>(belief.n_vac)) {
    out.trivial = true;
    out.allocation = look.s_risk.array().floor().cast<Count>();
    return out;
  }
  const DlaForm dla = assemble_dla_qp(look, params, belief.n_vac);
  out.report = solve_bilinear_qp(dla.form, rng, options);
  const Index n = params.zones();
  if (out.report.fallback_used || out.report.solution.size() != 2 * n) {
    out.fallback = true;
    out.allocation = proportional_allocation(belief.n_vac, params.populations);
    return out;
  }
  out.allocation = out.report.solution.head(n).array().round().cast<Count>();
  return out;
}

QpFormd testing_variance_qp(const std::vector<BetaPrior>& priors, const CountVec& populations, Count budget) {
  const Index n = populations.size();
  require(static_cast<Index>(priors.size()) == n, "prior count does not match the zones");
  QpFormd form;
  Vec diag(n);
  form.lin.resize(n);
  for (Index z = 0; z < n; ++z) {
    const double pop = static_cast<double>(populations(z));
    const double ab = priors[static_cast<std::size_t>(z)].alpha * priors[static_cast<std::size_t>(z)].beta;
    diag(z) = ab / (pop * pop * (pop + 1.0));
    form.lin(z) = ab / (pop * (pop + 1.0));
  }
  form.quad = diag.asDiagonal();
  form.ineq_matrix = Mat(0, n);
  form.ineq_rhs = Vec(0);
  form.upper = populations.cast<double>();
  form.budget = static_cast<double>(budget);
  form.block_size = n;
  form.budget_mode = BudgetMode::kExactly;
  form.sense = Sense::kMinimize;
  return form;
}

CountVec cfa_test_policy(const BeliefState& belief, const std::vector<BetaPrior>& priors, const CountVec& populations,
                         const TestPolicyParams& params) {
  params.validate();
  const Index n = populations.size();
  const Count kits = std::min(belief.n_test, populations.sum());
  const Count share = static_cast<Count>(std::floor(params.rho * static_cast<double>(kits)));
  const CountVec proportional = proportional_allocation(share, populations);
  const Count greedy_budget = kits - share;
  const QpFormd form = testing_variance_qp(priors, populations, greedy_budget);
  const CountVec room = populations - proportional;
  const CountVec greedy = greedy_budget > 0
                              ? solve_separable_integer(form.quad.diagonal(), form.lin, greedy_budget,
                                                        BudgetMode::kExactly, room)
                              : CountVec::Zero(n);
  return proportional + greedy;
}

std::string policy_name(const VaccinePolicy& policy) {
  if (std::holds_alternative<NullPolicy>(policy)) return "null";
  if (std::holds_alternative<PfaPolicy>(policy)) return "pfa";
  return "dla";
}

VaccinePolicy policy_from_name(const std::string& name) {
  if (name == "null") return NullPolicy{};
  if (name == "pfa") return PfaPolicy{};
  if (name == "dla") return DlaPolicy{};
  throw std::invalid_argument("unknown policy '" + name + "'");
}

VaccineDecision decide_vaccines(const VaccinePolicy& policy, const BeliefState& belief, const ControllerParams& params,
                                Rng& solver_rng, const SolverOptions& options) {
  VaccineDecision out;
  if (std::holds_alternative<NullPolicy>(policy)) {
    out.allocation = null_policy(belief.zones());
  } else if (const auto* pfa = std::get_if<PfaPolicy>(&policy)) {
    out.allocation = pfa_policy(belief, pfa->params);
  } else {
    const DlaDecision d = dla_policy(belief, params, std::get<DlaPolicy>(policy).theta_risk, solver_rng, options);
    out.allocation = d.allocation;
    out.fallback = d.fallback;
  }
  return out;
}

}  // namespace vaxalloc
