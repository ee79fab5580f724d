#include "vaxalloc/belief.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vaxalloc/normal.hpp"

namespace vaxalloc {

void BeliefState::validate(double tol) const {
  require(p_susc.size() == p_inf.size() && p_rec.size() == p_inf.size(), "belief dimension mismatch");
  for (Index z = 0; z < zones(); ++z) {
    const bool in_range = p_susc(z) >= -tol && p_susc(z) <= 1 + tol && p_inf(z) >= -tol && p_inf(z) <= 1 + tol &&
                          p_rec(z) >= -tol && p_rec(z) <= 1 + tol;
    require(in_range, "belief fraction out of [0, 1] in zone " + std::to_string(z));
    require(std::abs(p_susc(z) + p_inf(z) + p_rec(z) - 1.0) <= tol,
            "belief fractions of zone " + std::to_string(z) + " do not sum to 1");
  }
  require(n_vac >= 0 && n_test >= 0, "budgets must be nonnegative");
}

void ControllerParams::validate() const {
  require(beta.size() == populations.size(), "controller beta dimension mismatch");
  require((beta.array() >= 0.0).all(), "believed transmission rates must be nonnegative");
  require(gamma > 0.0 && gamma <= 1.0, "believed recovery rate must lie in (0, 1]");
  require((populations.array() >= 1).all(), "populations must be positive");
}

double expected_post_vaccination_susceptible(double mean, double sd, double x_vac) {
  require(sd >= 0.0, "standard deviation must be nonnegative");
  return normal::expected_positive_part(mean, sd, x_vac);
}

ZonePrediction propagate_zone(double p_susc, double p_inf, double p_rec, double beta, double gamma, Count population,
                              double x_vac) {
  const double n = static_cast<double>(population);
  const double s_mean = n * p_susc;
  const double i_mean = n * p_inf;
  const double r_mean = n * p_rec;
  const double s_sd = std::sqrt(std::max(0.0, n * p_susc * (1.0 - p_susc)));

  ZonePrediction out;
  out.post_vaccination = expected_post_vaccination_susceptible(s_mean, s_sd, x_vac);
  double infection = beta * p_inf;
  if (infection > 1.0) {
    infection = 1.0;
    out.clamped = true;
  }
  const double new_infections = infection * out.post_vaccination;
  out.susceptible = out.post_vaccination - new_infections;
  out.infected = (1.0 - gamma) * i_mean + new_infections;
  out.removed = r_mean + gamma * i_mean + s_mean - out.post_vaccination;
  return out;
}

BeliefPrediction propagate_belief(const BeliefState& belief, const ControllerParams& params, const CountVec& x_vac) {
  const Index n = params.zones();
  require(belief.zones() == n && x_vac.size() == n, "belief/decision dimension mismatch");
  BeliefPrediction out;
  out.susceptible.resize(n);
  out.infected.resize(n);
  out.removed.resize(n);
  for (Index z = 0; z < n; ++z) {
    const ZonePrediction zp = propagate_zone(belief.p_susc(z), belief.p_inf(z), belief.p_rec(z), params.beta(z),
                                             params.gamma, params.populations(z), static_cast<double>(x_vac(z)));
    out.susceptible(z) = zp.susceptible;
    out.infected(z) = zp.infected;
    out.removed(z) = zp.removed;
    out.clamps += zp.clamped ? 1 : 0;
  }
  return out;
}

BetaPrior beta_prior_from_belief(double expected_infected, Count population) {
  const double n = static_cast<double>(population);
  // Tolerate round-off from the propagation arithmetic.
  const double tol = 1e-9 * std::max(1.0, n);
  require(expected_infected >= -tol && expected_infected <= n + tol, "expected infected out of [0, N]");
  const double alpha = std::clamp(expected_infected, 0.0, n);
  return {alpha, n - alpha};
}

double update_infected_belief(Count observed, Count x_test, const BetaPrior& prior) {
  require(observed >= 0 && observed <= x_test, "observed positives must lie in [0, x_test]");
  require(prior.alpha >= 0.0 && prior.beta >= 0.0, "beta prior parameters must be nonnegative");
  const double denom = static_cast<double>(x_test) + prior.alpha + prior.beta;
  if (!(denom > 0.0)) {
    throw std::invalid_argument("empty beta prior and no observations");
  }
  return (static_cast<double>(observed) + prior.alpha) / denom;
}

std::pair<double, double> project_onto_simplex_slice(double p_susc, double p_rec, double p_inf_new) {
  require(p_inf_new >= 0.0 && p_inf_new <= 1.0, "infected fraction must lie in [0, 1]");
  const double mass = 1.0 - p_inf_new;
  const double shift = ((p_susc + p_rec) - mass) / 2.0;
  double s = std::clamp(p_susc - shift, 0.0, mass);
  return {s, mass - s};
}

std::vector<BetaPrior> priors_for_decision(const BeliefState& belief, const ControllerParams& params,
                                           const CountVec& x_vac) {
  const BeliefPrediction pred = propagate_belief(belief, params, x_vac);
  std::vector<BetaPrior> priors;
  priors.reserve(static_cast<std::size_t>(params.zones()));
  for (Index z = 0; z < params.zones(); ++z) {
    priors.push_back(beta_prior_from_belief(pred.infected(z), params.populations(z)));
  }
  return priors;
}

BeliefUpdate update_belief_state(const BeliefState& belief, const ControllerParams& params, const CountVec& x_vac,
                                 const CountVec& x_test, const CountVec& observed, Count next_vaccine_supply,
                                 Count next_test_supply) {
  const Index n = params.zones();
  require(x_test.size() == n && observed.size() == n, "observation dimension mismatch");
  require((x_vac.array() >= 0).all() && (x_test.array() >= 0).all(), "decisions must be nonnegative");
  require(x_vac.sum() <= belief.n_vac, "vaccine allocation exceeds the available supply");
  require(x_test.sum() <= belief.n_test, "test allocation exceeds the available kits");

  const BeliefPrediction pred = propagate_belief(belief, params, x_vac);

  BeliefUpdate out;
  out.clamps = pred.clamps;
  out.belief.p_susc.resize(n);
  out.belief.p_inf.resize(n);
  out.belief.p_rec.resize(n);
  out.priors.reserve(static_cast<std::size_t>(n));
  for (Index z = 0; z < n; ++z) {
    const double pop = static_cast<double>(params.populations(z));
    const BetaPrior prior = beta_prior_from_belief(pred.infected(z), params.populations(z));
    out.priors.push_back(prior);
    const double p_inf = update_infected_belief(observed(z), x_test(z), prior);
    const auto [s, r] = project_onto_simplex_slice(pred.susceptible(z) / pop, pred.removed(z) / pop, p_inf);
    out.belief.p_inf(z) = p_inf;
    out.belief.p_susc(z) = s;
    out.belief.p_rec(z) = r;
  }
  out.belief.n_vac = next_vaccine_supply;
  out.belief.n_test = next_test_supply;
  return out;
}

}  // namespace vaxalloc
