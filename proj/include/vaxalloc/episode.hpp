#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vaxalloc/policies.hpp"
#include "vaxalloc/scenario.hpp"

namespace vaxalloc {

/// Vaccine policy plus the testing policy; no testing when `testing` is empty.
struct PolicyPair {
  VaccinePolicy vaccine = NullPolicy{};
  std::optional<TestPolicyParams> testing;
  std::string label;

  std::string name() const { return label.empty() ? policy_name(vaccine) : label; }
};

/// "null", "pfa" or "dla" with the scenario's tuned parameters and its
/// testing policy.
PolicyPair default_policy_pair(const std::string& name, const Scenario& scenario);

/// One week of the closed loop. State and belief are taken at the start of
/// the week; `observed` are the positives reported at its end.
struct StepRecord {
  int t = 0;
  Vec susceptible;
  Vec infected;
  Vec removed;
  Vec p_susc;
  Vec p_inf;
  Vec p_rec;
  CountVec x_vac;
  CountVec x_test;
  CountVec observed;
  Count n_vac = 0;
  Count n_test = 0;
  Vec new_infections;
};

struct EpisodeResult {
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  EnvState final_state;
  double cumulative_infections = 0.0;
  int cap_events = 0;
  int belief_clamps = 0;
  int solver_fallbacks = 0;
  std::uint64_t exogenous_hash = 0;  // FNV-1a over every exogenous draw
};

/// Runs one closed-loop episode. Policies only see the belief state; the
/// exogenous draws depend on the seed alone.
EpisodeResult run_episode(const Scenario& scenario, const PolicyPair& policy, std::uint64_t seed);

struct PolicySummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> per_rep;
  std::vector<double> mean_new_infections;  // per week
  std::vector<double> mean_cumulative;      // per week
  std::vector<double> mean_vaccine_supply;  // per week
  int solver_fallbacks = 0;
  int cap_events = 0;
};

/// Seeds base_seed .. base_seed + n_reps - 1; `jobs` worker threads, with
/// results aggregated in seed order.
PolicySummary evaluate_policy(const Scenario& scenario, const PolicyPair& policy, int n_reps, std::uint64_t base_seed,
                              int jobs = 1);

/// Standard error of the paired differences a_i - b_i.
double paired_standard_error(const std::vector<double>& a, const std::vector<double>& b);

struct TuneRow {
  PolicyPair policy;
  double mean = 0.0;
  double sd = 0.0;
};

struct TuneResult {
  std::vector<TuneRow> rows;
  std::size_t best = 0;
};

/// Evaluates every grid point; ties go to the first listed.
TuneResult grid_search_tune(const Scenario& scenario, const std::vector<PolicyPair>& grid, int n_reps,
                            std::uint64_t base_seed, int jobs = 1);

}  // namespace vaxalloc
