#include "vaxalloc/episode.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "vaxalloc/firewall.hpp"

namespace vaxalloc {

namespace {

class Fnv1a {
 public:
  void add(double value) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &value, sizeof bits);
    add_bits(bits);
  }
  void add(Count value) { add_bits(static_cast<std::uint64_t>(value)); }
  template <typename Derived>
  void add(const Eigen::MatrixBase<Derived>& m) {
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) add(m(i, j));
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  void add_bits(std::uint64_t bits) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= (bits >> (8 * i)) & 0xffu;
      hash_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

struct InitialConditions {
  EnvState state;
  BeliefState belief;
};

InitialConditions draw_initial(const Scenario& scenario, const EnvParams& env, std::uint64_t seed) {
  Rng rng = make_stream(seed, Stream::kInitialState);
  const Index n = scenario.size();
  std::uniform_real_distribution<double> frac(scenario.initial.infected_low, scenario.initial.infected_high);
  std::normal_distribution<double> prior_error(0.0, 1.0);

  InitialConditions out;
  EnvState& s = out.state;
  s.susceptible.resize(n);
  s.infected.resize(n);
  s.removed = Vec::Zero(n);
  BeliefState& b = out.belief;
  b.p_susc.resize(n);
  b.p_inf.resize(n);
  b.p_rec = Vec::Zero(n);
  for (Index z = 0; z < n; ++z) {
    const Zone& zone = scenario.zones[static_cast<std::size_t>(z)];
    const double drawn = frac(rng);
    const double f = zone.init_inf_frac >= 0.0 ? zone.init_inf_frac : drawn;
    const double pop = static_cast<double>(zone.population);
    s.infected(z) = std::round(f * pop);
    s.susceptible(z) = pop - s.infected(z);
    const double noise = prior_error(rng);
    b.p_inf(z) = std::clamp(s.infected(z) / pop + scenario.initial.prior_error_sd * noise, 0.0, 1.0);
    b.p_susc(z) = 1.0 - b.p_inf(z);
  }
  s.mobility_rate = scenario.mobility.rate;
  s.transmission_rates = sample_transmission_rates(rng, env.mean_transmission, env.transmission_noise_sd);
  b.n_vac = scenario.supply.vaccines_initial;
  b.n_test = scenario.supply.tests_initial;
  return out;
}

}  // namespace

PolicyPair default_policy_pair(const std::string& name, const Scenario& scenario) {
  PolicyPair p;
  VaccinePolicy v = policy_from_name(name);
  if (auto* pfa = std::get_if<PfaPolicy>(&v)) pfa->params = scenario.policies.pfa;
  if (auto* dla = std::get_if<DlaPolicy>(&v)) dla->theta_risk = scenario.policies.theta_risk;
  p.vaccine = v;
  p.testing = scenario.policies.test;
  return p;
}

EpisodeResult run_episode(const Scenario& scenario, const PolicyPair& policy, std::uint64_t seed) {
  const EnvParams env = environment_params(scenario);
  const ControllerParams ctrl = controller_params(scenario);
  const Index n = scenario.size();

  Rng env_rng = make_stream(seed, Stream::kEnvironment);
  Rng obs_rng = make_stream(seed, Stream::kObservation);
  Rng solver_rng = make_stream(seed, Stream::kSolver);

  InitialConditions init = draw_initial(scenario, env, seed);
  EnvState state = std::move(init.state);
  BeliefState belief = std::move(init.belief);

  EpisodeResult result;
  result.seed = seed;
  Fnv1a hash;
  hash.add(state.infected);
  hash.add(state.transmission_rates);
  std::normal_distribution<double> rate_noise(0.0, 1.0);

  for (int t = 0; t < scenario.horizon; ++t) {
    StepRecord rec;
    rec.t = t;
    rec.susceptible = state.susceptible;
    rec.infected = state.infected;
    rec.removed = state.removed;
    rec.p_susc = belief.p_susc;
    rec.p_inf = belief.p_inf;
    rec.p_rec = belief.p_rec;
    rec.n_vac = belief.n_vac;
    rec.n_test = belief.n_test;

    // Controller: decisions from the belief alone.
    CountVec x_vac;
    CountVec x_test = CountVec::Zero(n);
    {
      firewall::ControllerScope scope;
      const VaccineDecision decision = decide_vaccines(policy.vaccine, belief, ctrl, solver_rng, scenario.solver);
      x_vac = decision.allocation;
      result.solver_fallbacks += decision.fallback ? 1 : 0;
      if (policy.testing) {
        x_test = cfa_test_policy(belief, priors_for_decision(belief, ctrl, x_vac), ctrl.populations, *policy.testing);
      }
    }

    // Exogenous information for t -> t+1.
    EnvExogenous exog;
    exog.vaccine_alloc = x_vac;
    exog.mobility_matrix = sample_mobility_matrix(env_rng, env.mobility_base, scenario.mobility.noise_scale);
    exog.transmission_noise = sample_transmission_noise(env_rng, env.transmission_noise_sd);
    exog.next_mobility_rate =
        std::clamp(scenario.mobility.rate + scenario.mobility.rate_sd * rate_noise(env_rng), 0.0, 1.0);
    exog.next_vaccine_supply = next_supply(env_rng, belief.n_vac, scenario.supply.vaccines_drift);
    exog.next_test_supply = next_supply(env_rng, belief.n_test, scenario.supply.tests_drift);
    hash.add(exog.mobility_matrix);
    hash.add(exog.transmission_noise);
    hash.add(exog.next_mobility_rate);
    hash.add(exog.next_vaccine_supply);
    hash.add(exog.next_test_supply);

    const EnvTransition tr = step_environment(state, env, exog);
    result.cap_events += tr.cap_events;

    // Positives are drawn from the true infected fraction after the step.
    CountVec observed = CountVec::Zero(n);
    for (Index z = 0; z < n; ++z) {
      if (x_test(z) == 0) continue;
      const auto [c, d] = seek_probabilities(scenario.testing, x_test(z), env.populations(z));
      const double p_inf = std::clamp(tr.state.infected(z) / static_cast<double>(env.populations(z)), 0.0, 1.0);
      observed(z) = sample_positive_tests(obs_rng, x_test(z), prob_test_positive(p_inf, scenario.testing, c, d));
    }

    {
      firewall::ControllerScope scope;
      BeliefUpdate up = update_belief_state(belief, ctrl, x_vac, x_test, observed, exog.next_vaccine_supply,
                                            exog.next_test_supply);
      result.belief_clamps += up.clamps;
      belief = std::move(up.belief);
    }

    rec.x_vac = x_vac;
    rec.x_test = x_test;
    rec.observed = observed;
    rec.new_infections = tr.new_infections;
    result.cumulative_infections += tr.new_infections.sum();
    result.steps.push_back(std::move(rec));
    state = tr.state;
  }
  result.final_state = state;
  result.exogenous_hash = hash.value();
  return result;
}

PolicySummary evaluate_policy(const Scenario& scenario, const PolicyPair& policy, int n_reps, std::uint64_t base_seed,
                              int jobs) {
  require(n_reps >= 1, "need at least one replication");
  jobs = std::max(1, std::min(jobs, n_reps));
  std::vector<EpisodeResult> results(static_cast<std::size_t>(n_reps));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < n_reps; i = next++) {
      try {
        results[static_cast<std::size_t>(i)] = run_episode(scenario, policy, base_seed + static_cast<std::uint64_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  PolicySummary s;
  s.name = policy.name();
  const auto horizon = static_cast<std::size_t>(scenario.horizon);
  s.mean_new_infections.assign(horizon, 0.0);
  s.mean_cumulative.assign(horizon, 0.0);
  s.mean_vaccine_supply.assign(horizon, 0.0);
  for (const EpisodeResult& r : results) {
    s.per_rep.push_back(r.cumulative_infections);
    s.solver_fallbacks += r.solver_fallbacks;
    s.cap_events += r.cap_events;
    double running = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const double fresh = r.steps[t].new_infections.sum();
      running += fresh;
      s.mean_new_infections[t] += fresh / n_reps;
      s.mean_cumulative[t] += running / n_reps;
      s.mean_vaccine_supply[t] += static_cast<double>(r.steps[t].n_vac) / n_reps;
    }
  }
  double sum = 0.0;
  for (double v : s.per_rep) sum += v;
  s.mean = sum / n_reps;
  double ss = 0.0;
  for (double v : s.per_rep) ss += (v - s.mean) * (v - s.mean);
  s.sd = n_reps > 1 ? std::sqrt(ss / (n_reps - 1)) : 0.0;
  return s;
}

double paired_standard_error(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size() && a.size() >= 2, "paired samples need equal sizes of at least two");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += (a[i] - b[i]) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  return std::sqrt(ss / (n - 1.0) / n);
}

TuneResult grid_search_tune(const Scenario& scenario, const std::vector<PolicyPair>& grid, int n_reps,
                            std::uint64_t base_seed, int jobs) {
  require(!grid.empty(), "tuning grid is empty");
  TuneResult out;
  for (const PolicyPair& p : grid) {
    const PolicySummary s = evaluate_policy(scenario, p, n_reps, base_seed, jobs);
    out.rows.push_back({p, s.mean, s.sd});
    if (s.mean < out.rows[out.best].mean) out.best = out.rows.size() - 1;
  }
  return out;
}

}  // namespace vaxalloc
