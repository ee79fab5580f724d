#pragma once

#include "vaxalloc/rng.hpp"
#include "vaxalloc/types.hpp"

namespace vaxalloc {

/// True (hidden) pandemic state. Only the simulator owns one of these.
struct EnvState {
  Vec susceptible;
  Vec infected;
  Vec removed;
  double mobility_rate = 0.0;
  Vec transmission_rates;

  Index zones() const { return susceptible.size(); }
};

struct EnvParams {
  CountVec populations;
  double recovery_rate = 0.5;
  double vaccine_success = 1.0;
  Vec mean_transmission;
  Vec transmission_noise_sd;
  Mat mobility_base;

  Index zones() const { return populations.size(); }
};

/// Everything that arrives between t and t+1 from outside the simulator,
/// including the controller's vaccine decision.
struct EnvExogenous {
  CountVec vaccine_alloc;
  Mat mobility_matrix;
  Vec transmission_noise;
  double next_mobility_rate = 0.0;
  Count next_vaccine_supply = 0;
  Count next_test_supply = 0;
};

struct EnvTransition {
  EnvState state;
  Vec new_infections;
  Vec vaccinated;  // effective S -> R moves, min(xi * x, S)
  int cap_events = 0;
};

/// Inverse Euclidean distance weights with zero self-weight, rows normalized.
Mat inverse_distance_weights(const Vec& x, const Vec& y);

/// Perturbs each entry of `mobility_base` by i.i.d. lognormal(0, noise_scale)
/// factors and renormalizes rows. Throws on an all-zero row.
Mat sample_mobility_matrix(Rng& rng, const Mat& mobility_base, double noise_scale);

/// Draws epsilon ~ Normal(0, sd_z) per zone.
Vec sample_transmission_noise(Rng& rng, const Vec& transmission_noise_sd);

/// (mean + noise)^+ elementwise.
Vec realized_transmission(const Vec& mean_transmission, const Vec& noise);

Vec sample_transmission_rates(Rng& rng, const Vec& mean_transmission, const Vec& transmission_noise_sd);

/// Checks the compartment invariants against `populations`; throws
/// std::invalid_argument with a description of the first violation.
void validate_state(const EnvState& state, const CountVec& populations);

/// One week of the stochastic spatial SIR dynamics. Vaccination moves
/// min(xi * x, S) people from S to R; new infections are capped at the
/// post-vaccination susceptibles.
EnvTransition step_environment(const EnvState& state, const EnvParams& params, const EnvExogenous& exog);

/// Sum of infected after the step.
double true_step_cost(const EnvState& next_state);

}  // namespace vaxalloc
