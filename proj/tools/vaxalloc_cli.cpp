// Command-line front end: generate, simulate, compare, tune.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vaxalloc/episode.hpp"
#include "vaxalloc/scenario.hpp"
#include "vaxalloc/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vaxalloc;

namespace {

constexpr int kExitFlags = 2;
constexpr int kExitData = 3;
constexpr int kExitFallback = 4;

struct Overrides {
  std::optional<int> horizon;
  std::optional<double> theta0;
  std::optional<double> theta1;
  std::optional<double> risk;
  std::optional<double> rho;
  std::optional<int> starts;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--horizon", horizon, "Weeks to simulate")->check(CLI::PositiveNumber);
    cmd->add_option("--theta0", theta0, "PFA exponent");
    cmd->add_option("--theta1", theta1, "PFA slope");
    cmd->add_option("--risk", risk, "DLA risk quantile")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--rho", rho, "Share of test kits split by population")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--starts", starts, "Random starts of the lookahead solver")->check(CLI::NonNegativeNumber);
  }

  void apply(Scenario& s) const {
    if (horizon) s.horizon = *horizon;
    if (theta0) s.policies.pfa.theta0 = *theta0;
    if (theta1) s.policies.pfa.theta1 = *theta1;
    if (risk) s.policies.theta_risk = *risk;
    if (rho) s.policies.test.rho = *rho;
    if (starts) s.solver.starts = *starts;
    s.validate();
  }
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json summary_json(const PolicySummary& s) {
  return {{"policy", s.name},
          {"mean", s.mean},
          {"sd", s.sd},
          {"reps", s.per_rep.size()},
          {"per_rep", s.per_rep},
          {"solver_fallbacks", s.solver_fallbacks},
          {"cap_events", s.cap_events}};
}

json effective_config(const CLI::App& app, const Scenario& s) {
  json j;
  j["command"] = app.get_name();
  std::istringstream flags(app.config_to_str(true, false));
  std::string line;
  json parsed = json::object();
  while (std::getline(flags, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());
    parsed[key] = value;
  }
  j["flags"] = parsed;
  j["scenario"] = scenario_to_json(s, "");
  return j;
}

std::vector<double> parse_grid(const std::vector<double>& given, std::vector<double> fallback) {
  return given.empty() ? fallback : given;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vaccine and test-kit allocation under a partially observed spatial SIR epidemic"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // generate
  auto* gen = app.add_subcommand("generate", "Write a random toy scenario (config + zone CSV)");
  bool toy = false;
  int zones = 25;
  std::uint64_t gen_seed = 7;
  std::string gen_out = ".";
  gen->add_flag("--toy", toy, "Random zones on the unit square")->required();
  gen->add_option("--zones", zones, "Number of zones")->check(CLI::Range(2, 100000));
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Output folder");

  // shared by simulate / compare / tune
  std::string scenario_path;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int jobs = 1;
  Overrides overrides;

  auto* sim = app.add_subcommand("simulate", "Run one episode and write its trace");
  std::string sim_policy = "dla";
  bool no_testing = false;
  sim->add_option("--scenario", scenario_path, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--policy", sim_policy, "null | pfa | dla")->check(CLI::IsMember({"null", "pfa", "dla"}));
  sim->add_flag("--no-testing", no_testing, "Allocate no test kits");
  sim->add_option("--seed", seed, "Master seed");
  sim->add_option("--out", out_dir, "Output folder");
  overrides.add_to(sim);

  auto* cmp = app.add_subcommand("compare", "Evaluate policies under common random numbers");
  int reps = 100;
  int traces = 1;
  std::vector<std::string> policies = {"null", "pfa", "dla"};
  cmp->add_option("--scenario", scenario_path, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  cmp->add_option("--reps", reps, "Replications per policy")->check(CLI::PositiveNumber);
  cmp->add_option("--seed", seed, "First seed; replications use seed .. seed + reps - 1");
  cmp->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmp->add_option("--traces", traces, "Write trace CSVs for the first N seeds")->check(CLI::NonNegativeNumber);
  cmp->add_option("--policies", policies, "Subset of null, pfa, dla")
      ->check(CLI::IsMember({"null", "pfa", "dla"}))
      ->delimiter(',');
  cmp->add_option("--out", out_dir, "Output folder");
  overrides.add_to(cmp);

  auto* tune = app.add_subcommand("tune", "Grid search of one policy parameter set");
  std::string tune_policy = "pfa";
  std::vector<double> theta0_grid;
  std::vector<double> theta1_grid;
  std::vector<double> risk_grid;
  std::vector<double> rho_grid;
  int tune_reps = 50;
  tune->add_option("--scenario", scenario_path, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  tune->add_option("--policy", tune_policy, "pfa | dla | test")->check(CLI::IsMember({"pfa", "dla", "test"}));
  tune->add_option("--theta0-grid", theta0_grid, "PFA exponents")->delimiter(',');
  tune->add_option("--theta1-grid", theta1_grid, "PFA slopes")->delimiter(',');
  tune->add_option("--risk-grid", risk_grid, "DLA risk quantiles")->delimiter(',');
  tune->add_option("--rho-grid", rho_grid, "Proportional test shares")->delimiter(',');
  tune->add_option("--reps", tune_reps, "Replications per grid point")->check(CLI::PositiveNumber);
  tune->add_option("--seed", seed, "First seed");
  tune->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  tune->add_option("--out", out_dir, "Output folder");
  overrides.add_to(tune);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitFlags;
  }

  try {
    if (gen->parsed()) {
      (void)toy;
      Rng rng = make_stream(gen_seed, Stream::kScenario);
      const Scenario s = generate_toy_scenario(rng, zones);
      fs::create_directories(gen_out);
      save_scenario(s, fs::path(gen_out) / "scenario.json", fs::path(gen_out) / "zones.csv");
      std::cout << "wrote " << (fs::path(gen_out) / "scenario.json").string() << " and "
                << (fs::path(gen_out) / "zones.csv").string() << '\n';
      return 0;
    }

    Scenario scenario = load_scenario(scenario_path);
    overrides.apply(scenario);
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    if (sim->parsed()) {
      PolicyPair p = default_policy_pair(sim_policy, scenario);
      if (no_testing) p.testing.reset();
      const EpisodeResult r = run_episode(scenario, p, seed);
      write_trace_csv(out / ("trace_" + p.name() + "_" + std::to_string(seed) + ".csv"), r);
      json summary = {{"policy", p.name()},
                      {"seed", seed},
                      {"cumulative_infections", r.cumulative_infections},
                      {"cap_events", r.cap_events},
                      {"belief_clamps", r.belief_clamps},
                      {"solver_fallbacks", r.solver_fallbacks}};
      write_json(out / "summary.json", summary);
      write_json(out / "effective_config.json", effective_config(*sim, scenario));
      std::cout << p.name() << " seed " << seed << ": cumulative infections "
                << format_double(r.cumulative_infections) << '\n';
      return r.solver_fallbacks > 0 ? kExitFallback : 0;
    }

    if (cmp->parsed()) {
      std::vector<PolicySummary> summaries;
      int fallbacks = 0;
      for (const std::string& name : policies) {
        const PolicyPair p = default_policy_pair(name, scenario);
        summaries.push_back(evaluate_policy(scenario, p, reps, seed, jobs));
        fallbacks += summaries.back().solver_fallbacks;
        for (int i = 0; i < std::min(traces, reps); ++i) {
          const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
          write_trace_csv(out / ("trace_" + p.name() + "_" + std::to_string(s) + ".csv"),
                          run_episode(scenario, p, s));
        }
      }
      json summary;
      summary["scenario"] = scenario.name;
      summary["reps"] = reps;
      summary["seed"] = seed;
      summary["policies"] = json::array();
      for (const PolicySummary& s : summaries) summary["policies"].push_back(summary_json(s));
      const auto null_it = std::find_if(summaries.begin(), summaries.end(),
                                        [](const PolicySummary& s) { return s.name == "null"; });
      if (null_it != summaries.end()) {
        json reductions = json::object();
        for (const PolicySummary& s : summaries) {
          if (s.name == "null") continue;
          json row = {{"reduction", 1.0 - s.mean / null_it->mean}};
          if (reps >= 2) row["paired_se"] = paired_standard_error(null_it->per_rep, s.per_rep);
          reductions[s.name] = row;
        }
        summary["versus_null"] = reductions;
      }
      write_json(out / "summary.json", summary);
      write_curves_csv(out / "curves.csv", summaries);
      write_json(out / "effective_config.json", effective_config(*cmp, scenario));
      for (const PolicySummary& s : summaries) {
        std::cout << s.name << ": mean " << format_double(s.mean) << " sd " << format_double(s.sd) << '\n';
      }
      return fallbacks > 0 ? kExitFallback : 0;
    }

    if (tune->parsed()) {
      std::vector<PolicyPair> grid;
      if (tune_policy == "pfa") {
        for (double t0 : parse_grid(theta0_grid, {1, 10, 25, 50, 100}))
          for (double t1 : parse_grid(theta1_grid, {1, 5, 10, 20})) {
            PolicyPair p = default_policy_pair("pfa", scenario);
            std::get<PfaPolicy>(p.vaccine).params = {t0, t1};
            grid.push_back(p);
          }
      } else if (tune_policy == "dla") {
        for (double r : parse_grid(risk_grid, {0.05, 0.15, 0.3, 0.5, 0.7})) {
          PolicyPair p = default_policy_pair("dla", scenario);
          std::get<DlaPolicy>(p.vaccine).theta_risk = r;
          grid.push_back(p);
        }
      } else {
        for (double r : parse_grid(rho_grid, {0.0, 0.3, 0.5, 0.7, 0.9, 1.0})) {
          PolicyPair p = default_policy_pair("dla", scenario);
          p.testing = TestPolicyParams{r};
          grid.push_back(p);
        }
      }
      const TuneResult result = grid_search_tune(scenario, grid, tune_reps, seed, jobs);
      write_tuning_csv(out / "tuning.csv", result);
      write_json(out / "effective_config.json", effective_config(*tune, scenario));
      const TuneRow& best = result.rows[result.best];
      std::cout << "best " << best.policy.name() << " mean " << format_double(best.mean) << " (row "
                << result.best << " of " << result.rows.size() << ")\n";
      return 0;
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitFlags;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
