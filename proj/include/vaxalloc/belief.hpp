#pragma once

#include <utility>
#include <vector>

#include "vaxalloc/types.hpp"

namespace vaxalloc {

/// The controller's entire knowledge: multinomial fractions per zone plus the
/// budgets revealed for this week.
struct BeliefState {
  Vec p_susc;
  Vec p_inf;
  Vec p_rec;
  Count n_vac = 0;
  Count n_test = 0;

  Index zones() const { return p_inf.size(); }
  void validate(double tol = 1e-9) const;
};

/// What the controller assumes about the transitions: a plain per-zone SIR
/// with no mobility and perfectly effective vaccines.
struct ControllerParams {
  Vec beta;
  double gamma = 0.5;
  CountVec populations;

  Index zones() const { return populations.size(); }
  void validate() const;
};

struct BetaPrior {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Predicted means for one zone one step ahead.
struct ZonePrediction {
  double susceptible = 0.0;
  double infected = 0.0;
  double removed = 0.0;
  double post_vaccination = 0.0;  // expected (S - x)^+
  bool clamped = false;           // beta * p_inf exceeded 1
};

double expected_post_vaccination_susceptible(double mean, double sd, double x_vac);

ZonePrediction propagate_zone(double p_susc, double p_inf, double p_rec, double beta, double gamma, Count population,
                              double x_vac);

struct BeliefPrediction {
  Vec susceptible;
  Vec infected;
  Vec removed;
  int clamps = 0;
};

BeliefPrediction propagate_belief(const BeliefState& belief, const ControllerParams& params, const CountVec& x_vac);

BetaPrior beta_prior_from_belief(double expected_infected, Count population);

double update_infected_belief(Count observed, Count x_test, const BetaPrior& prior);

/// Euclidean projection of (p_susc, p_rec) onto the segment
/// {s + r = 1 - p_inf_new, s, r in [0, 1]}.
std::pair<double, double> project_onto_simplex_slice(double p_susc, double p_rec, double p_inf_new);

struct BeliefUpdate {
  BeliefState belief;
  std::vector<BetaPrior> priors;
  int clamps = 0;
};

/// Propagate, form the beta prior, fold in the observed positives, and
/// project susceptible/removed back onto the simplex slice.
BeliefUpdate update_belief_state(const BeliefState& belief, const ControllerParams& params, const CountVec& x_vac,
                                 const CountVec& x_test, const CountVec& observed, Count next_vaccine_supply,
                                 Count next_test_supply);

std::vector<BetaPrior> priors_for_decision(const BeliefState& belief, const ControllerParams& params,
                                           const CountVec& x_vac);

}  // namespace vaxalloc
