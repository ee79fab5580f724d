// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Heavier than the unit tests; ctest gives it a long timeout.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "suites.hpp"
#include "vaxalloc/belief.hpp"
#include "vaxalloc/environment.hpp"
#include "vaxalloc/episode.hpp"
#include "vaxalloc/testing_oracle.hpp"

using namespace vaxalloc;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Ordering and reduction bands for one scenario.
void ordering(const std::string& name, const fs::path& config, int reps, double pfa_target, double dla_target,
              double max_seconds) {
  const Scenario s = load_scenario(config);
  const auto start = std::chrono::steady_clock::now();
  const PolicySummary null = evaluate_policy(s, default_policy_pair("null", s), reps, 1);
  const PolicySummary pfa = evaluate_policy(s, default_policy_pair("pfa", s), reps, 1);
  const PolicySummary dla = evaluate_policy(s, default_policy_pair("dla", s), reps, 1);
  const double elapsed = seconds_since(start);

  const double se_null_pfa = paired_standard_error(null.per_rep, pfa.per_rep);
  const double se_pfa_dla = paired_standard_error(pfa.per_rep, dla.per_rep);
  const double gap_null_pfa = null.mean - pfa.mean;
  const double gap_pfa_dla = pfa.mean - dla.mean;
  const double red_pfa = 100.0 * (1.0 - pfa.mean / null.mean);
  const double red_dla = 100.0 * (1.0 - dla.mean / null.mean);

  std::cout << "  " << name << " means over " << reps << " reps: null " << null.mean << ", pfa " << pfa.mean
            << ", dla " << dla.mean << std::endl;
  report(gap_null_pfa > 2.0 * se_null_pfa && gap_pfa_dla > 2.0 * se_pfa_dla, name + " ordering DLA < PFA < null",
         fmt("null-pfa gap %.1f (2SE %.1f), pfa-dla gap %.1f (2SE %.1f)", gap_null_pfa, 2 * se_null_pfa, gap_pfa_dla,
             2 * se_pfa_dla));
  report(std::abs(red_pfa - pfa_target) <= 15.0, name + " PFA reduction",
         fmt("%.1f%% vs null (target %.1f +- 15)", red_pfa, pfa_target));
  report(std::abs(red_dla - dla_target) <= 15.0, name + " DLA reduction",
         fmt("%.1f%% vs null (target %.1f +- 15)", red_dla, dla_target));
  report(elapsed <= max_seconds, name + " runtime", fmt("%.1f s (limit %.0f s)", elapsed, max_seconds));
}

void test_positivity() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    TestingParams p;
    p.p_symp_given_pos = u(rng);
    p.p_symp_given_neg = u(rng);
    p.false_positive = u(rng);
    p.false_negative = u(rng);
    const double pi = u(rng), c = 0.01 + 0.99 * u(rng), d = 0.01 + 0.99 * u(rng);
    const double tree = oracle::enumerate_test_positive(pi, p.p_symp_given_pos, p.p_symp_given_neg, c, d,
                                                        p.false_positive, p.false_negative);
    worst = std::max(worst, std::abs(prob_test_positive(pi, p, c, d) - tree));
  }
  report(worst <= 1e-12, "Test positivity closed form vs outcome tree", fmt("max error %.2e over 1000 draws", worst));

  double collapse = 0.0;
  for (int k = 0; k < 1000; ++k) {
    TestingParams p;
    p.p_symp_given_pos = u(rng);
    p.p_symp_given_neg = u(rng);
    p.false_positive = u(rng);
    p.false_negative = u(rng);
    const double pi = u(rng), c = 0.01 + 0.99 * u(rng);
    const double want = (1.0 - p.false_negative) * pi + p.false_positive * (1.0 - pi);
    collapse = std::max(collapse, std::abs(prob_test_positive(pi, p, c, c) - want));
  }
  report(collapse <= 4.0 * std::numeric_limits<double>::epsilon(), "Test positivity with equal seeking",
         fmt("max error %.2e (rounding only)", collapse));
}

void posterior_mean() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.5, 500.0);
  std::uniform_int_distribution<long> trials(0, 300);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double alpha = u(rng), beta = u(rng);
    const long x = trials(rng);
    std::uniform_int_distribution<long> pos(0, x);
    const long obs = pos(rng);
    const double closed = update_infected_belief(obs, x, {alpha, beta});
    worst = std::max(worst, std::abs(closed - oracle::posterior_mean_by_quadrature(alpha, beta, x, obs)));
  }
  report(worst <= 1e-8, "Posterior mean vs quadrature", fmt("max error %.2e over 1000 instances", worst));
}

void propagation() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Truncated expectation E[(S - x)^+] for S ~ Normal.
  bool trunc_ok = true;
  double worst_z = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double mean = 100.0 + 5000.0 * u(rng);
    const double sd = std::sqrt(mean * (0.1 + 0.8 * u(rng)));
    const double x = mean + sd * (4.0 * u(rng) - 2.0);
    std::normal_distribution<double> g(mean, sd);
    const int draws = 1000000;
    double sum = 0.0, sq = 0.0;
    for (int d = 0; d < draws; ++d) {
      const double v = std::max(0.0, g(rng) - x);
      sum += v;
      sq += v * v;
    }
    const double mc = sum / draws;
    const double se = std::sqrt((sq / draws - mc * mc) / draws);
    const double zscore = std::abs(expected_post_vaccination_susceptible(mean, sd, x) - mc) / se;
    worst_z = std::max(worst_z, zscore);
    trunc_ok = trunc_ok && zscore <= 3.0;
  }
  report(trunc_ok, "Truncated expectation vs Monte Carlo", fmt("worst |diff| = %.2f SE over 5 cases", worst_z));

  // |Cov(S, I)| / E[S I] for multinomial counts, by moments and by sampling.
  bool cov_ok = true;
  double worst_cov_z = 0.0;
  double worst_analytic = 0.0;
  for (int k = 0; k < 3; ++k) {
    const long n = 50 + static_cast<long>(u(rng) * 200);
    const double ps = 0.2 + 0.5 * u(rng);
    const double pi = (1.0 - ps) * (0.2 + 0.6 * u(rng));
    const double nn = static_cast<double>(n);
    const double analytic = (nn * ps * pi) / (nn * (nn - 1.0) * ps * pi);
    worst_analytic = std::max(worst_analytic, std::abs(analytic - 1.0 / (nn - 1.0)));
    // Batch means give a standard error for the ratio estimate.
    const int batches = 50, per_batch = 20000;
    std::vector<double> ratios;
    for (int b = 0; b < batches; ++b) {
      double s_sum = 0.0, i_sum = 0.0, si_sum = 0.0;
      for (int d = 0; d < per_batch; ++d) {
        const auto [s, i] = oracle::multinomial_si(rng, n, ps, pi);
        s_sum += static_cast<double>(s);
        i_sum += static_cast<double>(i);
        si_sum += static_cast<double>(s) * static_cast<double>(i);
      }
      const double es = s_sum / per_batch, ei = i_sum / per_batch, esi = si_sum / per_batch;
      ratios.push_back(std::abs(esi - es * ei) / esi);
    }
    double mean = 0.0, var = 0.0;
    for (double r : ratios) mean += r / batches;
    for (double r : ratios) var += (r - mean) * (r - mean) / (batches - 1);
    const double zscore = std::abs(mean - 1.0 / (nn - 1.0)) / std::sqrt(var / batches);
    worst_cov_z = std::max(worst_cov_z, zscore);
    cov_ok = cov_ok && zscore <= 3.0;
  }
  report(cov_ok && worst_analytic <= 1e-15, "Multinomial covariance ratio 1/(N-1)",
         fmt("analytic error %.1e, empirical worst %.2f SE", worst_analytic, worst_cov_z));

  double worst_sum = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const double ps = a / (a + b + c), pi = b / (a + b + c);
    const Count n = 1 + static_cast<Count>(u(rng) * 1e6);
    const ZonePrediction z = propagate_zone(ps, pi, 1.0 - ps - pi, 3.0 * u(rng), 0.05 + 0.95 * u(rng), n,
                                            u(rng) * static_cast<double>(n));
    worst_sum = std::max(worst_sum, std::abs(z.susceptible + z.infected + z.removed - static_cast<double>(n)));
  }
  report(worst_sum <= 1e-9, "Predicted compartments sum to N", fmt("max |sum - N| %.2e", worst_sum));
}

void dla_equivalence() {
  std::mt19937_64 rng(404);
  const suites::EquivalenceResult r = suites::dla_equivalence(rng, 200, 15);
  report(r.worst_difference_error <= 1e-8, "DLA objective differences vs simulated two-step cost",
         fmt("max error %.2e over %.0f instances", r.worst_difference_error, r.instances));
  report(r.solver_mismatches == 0, "DLA solver vs brute force",
         fmt("%.0f mismatches, worst gap %.2e", r.solver_mismatches, r.worst_solver_gap));
}

void testing_allocation() {
  std::mt19937_64 rng(505);
  const suites::TestingResult r = suites::testing_suite(rng, 200);
  report(r.waterfill_mismatches == 0, "Testing allocation vs brute force",
         fmt("%.0f mismatches over %.0f instances", r.waterfill_mismatches, r.instances));
  report(r.rho_one_mismatches == 0 && r.rho_zero_mismatches == 0, "Testing rho limits",
         fmt("rho=1 mismatches %.0f, rho=0 mismatches %.0f", r.rho_one_mismatches, r.rho_zero_mismatches));
}

bool state_ok(const Vec& s, const Vec& i, const Vec& r, const CountVec& pop) {
  for (Index z = 0; z < pop.size(); ++z) {
    const double n = static_cast<double>(pop(z));
    if (s(z) < -1e-9 || i(z) < -1e-9 || r(z) < -1e-9) return false;
    if (std::abs(s(z) + i(z) + r(z) - n) > 1e-9 * n) return false;
  }
  return true;
}

void conservation() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad_steps = 0;
  for (int k = 0; k < 10000; ++k) {
    const Index n = 2 + k % 6;
    EnvParams p;
    p.populations.resize(n);
    EnvState st;
    st.susceptible.resize(n);
    st.infected.resize(n);
    st.removed.resize(n);
    for (Index z = 0; z < n; ++z) {
      p.populations(z) = 1 + static_cast<Count>(u(rng) * 1e5);
      const double a = u(rng), b = u(rng), c = u(rng), pop = static_cast<double>(p.populations(z));
      st.susceptible(z) = pop * a / (a + b + c);
      st.infected(z) = pop * b / (a + b + c);
      st.removed(z) = pop - st.susceptible(z) - st.infected(z);
    }
    st.mobility_rate = u(rng);
    st.transmission_rates = Vec::Zero(n);
    p.recovery_rate = 0.05 + 0.95 * u(rng);
    p.vaccine_success = u(rng);
    p.mean_transmission = Vec::Random(n).cwiseAbs() * 3.0;
    p.transmission_noise_sd = Vec::Random(n).cwiseAbs();
    p.mobility_base = inverse_distance_weights(Vec::Random(n), Vec::Random(n));
    EnvExogenous e;
    e.vaccine_alloc.resize(n);
    for (Index z = 0; z < n; ++z) e.vaccine_alloc(z) = static_cast<Count>(u(rng) * 0.5 * p.populations(z));
    Rng r(static_cast<std::uint64_t>(k));
    e.mobility_matrix = sample_mobility_matrix(r, p.mobility_base, 0.5);
    e.transmission_noise = sample_transmission_noise(r, p.transmission_noise_sd);
    e.next_mobility_rate = u(rng);
    const EnvTransition t = step_environment(st, p, e);
    if (!state_ok(t.state.susceptible, t.state.infected, t.state.removed, p.populations)) ++bad_steps;
  }

  const Scenario s = load_scenario(fs::path(VAXALLOC_SOURCE_DIR) / "data/toy/scenario.json");
  const CountVec pop = s.populations();
  const char* names[] = {"null", "pfa", "dla"};
  int bad_episodes = 0;
  for (int k = 0; k < 1000; ++k) {
    PolicyPair p = default_policy_pair(names[k % 3], s);
    if (k % 7 == 0) p.testing.reset();
    const EpisodeResult ep = run_episode(s, p, 10000 + static_cast<std::uint64_t>(k));
    bool ok = state_ok(ep.final_state.susceptible, ep.final_state.infected, ep.final_state.removed, pop);
    double total = 0.0;
    for (const StepRecord& r : ep.steps) {
      ok = ok && state_ok(r.susceptible, r.infected, r.removed, pop);
      ok = ok && (r.x_vac.array() >= 0).all() && r.x_vac.sum() <= r.n_vac;
      ok = ok && (r.x_test.array() >= 0).all() && r.x_test.sum() <= r.n_test;
      ok = ok && (r.x_test.array() <= pop.array()).all();
      ok = ok && (r.observed.array() >= 0).all() && (r.observed.array() <= r.x_test.array()).all();
      ok = ok && (r.p_susc + r.p_inf + r.p_rec - Vec::Ones(pop.size())).cwiseAbs().maxCoeff() <= 1e-9;
      ok = ok && (r.p_susc.array() >= 0).all() && (r.p_inf.array() >= 0).all() && (r.p_rec.array() >= 0).all();
      total += r.new_infections.sum();
    }
    ok = ok && total == ep.cumulative_infections;
    if (!ok) ++bad_episodes;
  }
  report(bad_steps == 0 && bad_episodes == 0, "Conservation and feasibility",
         fmt("%.0f bad of 10000 steps, %.0f bad of 1000 episodes", bad_steps, bad_episodes));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / "vaxalloc_acceptance";
  fs::remove_all(root);
  const std::string config = (fs::path(VAXALLOC_SOURCE_DIR) / "data/toy/scenario.json").string();
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string("\"") + VAXALLOC_CLI + "\" compare --scenario \"" + config +
                            "\" --reps 4 --traces 2 --seed 11 --jobs 1 --out \"" + (root / run).string() +
                            "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) {
      report(false, "Determinism", "CLI run failed: " + cmd);
      return;
    }
  }
  int files = 0, differ = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("trace_", 0) != 0) continue;
    ++files;
    if (!fs::exists(root / "b" / name) || slurp(entry.path()) != slurp(root / "b" / name)) ++differ;
  }
  report(files == 6 && differ == 0, "Determinism of trace CSVs",
         fmt("%.0f trace files compared, %.0f differ", files, differ));
}

}  // namespace

int main() {
  const fs::path data = fs::path(VAXALLOC_SOURCE_DIR) / "data";
  test_positivity();
  posterior_mean();
  propagation();
  dla_equivalence();
  testing_allocation();
  conservation();
  determinism();
  ordering("toy", data / "toy/scenario.json", 100, 62.2, 69.0, 600.0);
  ordering("US", data / "us/scenario.json", 50, 45.0, 54.0, 1800.0);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
