#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "vaxalloc/belief.hpp"
#include "vaxalloc/environment.hpp"
#include "vaxalloc/policies.hpp"
#include "vaxalloc/rng.hpp"
#include "vaxalloc/solvers.hpp"
#include "vaxalloc/testing_oracle.hpp"
#include "vaxalloc/types.hpp"

namespace vaxalloc {

struct Zone {
  std::string id;
  std::string name;
  Count population = 1;
  double area = 1.0;
  double x = 0.0;
  double y = 0.0;
  double init_inf_frac = -1.0;  // negative when the CSV leaves it blank
};

enum class TransmissionRule { kExplicit, kLogDensity };

struct DiseaseConfig {
  double recovery_rate = 0.5;
  double vaccine_success = 0.9;
  TransmissionRule rule = TransmissionRule::kExplicit;
  double beta_min = 0.35;
  double beta_max = 0.95;
  std::vector<double> beta_values;  // explicit rule, one per zone
  double transmission_noise_cv = 0.1;
};

struct SupplyConfig {
  Count vaccines_initial = 0;
  double vaccines_drift = 0.0;
  Count tests_initial = 0;
  double tests_drift = 0.0;
};

struct MobilityConfig {
  double rate = 0.1;
  double rate_sd = 0.02;
  double noise_scale = 0.2;
};

struct InitialConfig {
  double infected_low = 0.05;
  double infected_high = 0.15;
  double prior_error_sd = 0.0;
};

struct ControllerConfig {
  double beta_multiplier = 1.0;
  double gamma_multiplier = 1.0;
};

struct PolicyDefaults {
  PfaParams pfa;
  double theta_risk = 0.15;
  TestPolicyParams test;
};

struct Scenario {
  std::string name = "scenario";
  std::vector<Zone> zones;
  int horizon = 30;
  DiseaseConfig disease;
  TestingParams testing;
  SupplyConfig supply;
  MobilityConfig mobility;
  InitialConfig initial;
  ControllerConfig controller;
  PolicyDefaults policies;
  SolverOptions solver;

  Index size() const { return static_cast<Index>(zones.size()); }
  CountVec populations() const;
  Vec mean_transmission() const;
  void validate() const;
};

struct ToyOptions {
  Count population_min = 5000;
  Count population_max = 15000;
  double vaccine_share = 0.08;  // initial weekly vaccines per person
  double vaccine_drift_share = 0.006;
  double test_share = 0.01;
  double test_drift_share = 0.0;
};

/// Random zones on the unit square with uniform populations and uniform
/// mean transmission rates in [beta_min, beta_max].
Scenario generate_toy_scenario(Rng& rng, int n_zones, const ToyOptions& options = {});

/// Reads `zone_id,name,population,area,x,y[,init_inf_frac]`. Throws DataError
/// naming the offending line.
std::vector<Zone> load_zones_csv(const std::filesystem::path& path);
void write_zones_csv(const std::filesystem::path& path, const std::vector<Zone>& zones);

/// beta_min + (beta_max - beta_min) * rescaled log density.
Vec transmission_from_density(const std::vector<Zone>& zones, double beta_min, double beta_max);

nlohmann::json scenario_to_json(const Scenario& scenario, const std::string& zones_csv);
Scenario scenario_from_json(const nlohmann::json& config, const std::filesystem::path& base_dir);

/// Loads a JSON scenario config; `zones_csv` is resolved against its folder.
Scenario load_scenario(const std::filesystem::path& config_path);

/// Writes the config and its zone CSV next to each other.
void save_scenario(const Scenario& scenario, const std::filesystem::path& config_path,
                   const std::filesystem::path& csv_path);

EnvParams environment_params(const Scenario& scenario);
ControllerParams controller_params(const Scenario& scenario);

/// Supply random walk: n + max(0, round(Normal(drift, drift / 2))).
Count next_supply(Rng& rng, Count current, double drift);

}  // namespace vaxalloc
