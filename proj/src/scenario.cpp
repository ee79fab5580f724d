#include "vaxalloc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "vaxalloc/trace_io.hpp"

namespace vaxalloc {

using nlohmann::json;

CountVec Scenario::populations() const {
  CountVec out(size());
  for (Index z = 0; z < size(); ++z) out(z) = zones[static_cast<std::size_t>(z)].population;
  return out;
}

Vec Scenario::mean_transmission() const {
  if (disease.rule == TransmissionRule::kLogDensity) {
    return transmission_from_density(zones, disease.beta_min, disease.beta_max);
  }
  if (disease.beta_values.size() != zones.size()) {
    throw DataError("explicit transmission rule needs one value per zone");
  }
  return Eigen::Map<const Vec>(disease.beta_values.data(), size());
}

void Scenario::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw DataError("invalid scenario: " + what);
  };
  check(zones.size() >= 2, "need at least two zones");
  check(horizon >= 1, "horizon must be positive");
  for (const Zone& z : zones) {
    check(z.population >= 1, "zone " + z.id + " has no population");
    check(z.area > 0.0, "zone " + z.id + " has nonpositive area");
    check(z.init_inf_frac <= 1.0, "zone " + z.id + " initial infected fraction above 1");
  }
  check(disease.recovery_rate > 0.0 && disease.recovery_rate <= 1.0, "recovery_rate must lie in (0, 1]");
  check(disease.vaccine_success > 0.0 && disease.vaccine_success <= 1.0, "vaccine_success must lie in (0, 1]");
  check(disease.beta_min >= 0.0 && disease.beta_min <= disease.beta_max, "transmission range is invalid");
  check(disease.transmission_noise_cv >= 0.0, "transmission noise must be nonnegative");
  check(0.0 <= initial.infected_low && initial.infected_low <= initial.infected_high && initial.infected_high <= 1.0,
        "initial infected range must satisfy 0 <= low <= high <= 1");
  check(initial.prior_error_sd >= 0.0, "prior error sd must be nonnegative");
  check(mobility.rate >= 0.0 && mobility.rate <= 1.0, "mobility rate must lie in [0, 1]");
  check(mobility.rate_sd >= 0.0 && mobility.noise_scale >= 0.0, "mobility noise must be nonnegative");
  check(supply.vaccines_initial >= 0 && supply.tests_initial >= 0, "supplies must be nonnegative");
  check(supply.vaccines_drift >= 0.0 && supply.tests_drift >= 0.0, "supply drifts must be nonnegative");
  check(controller.beta_multiplier >= 0.0 && controller.gamma_multiplier > 0.0, "controller multipliers invalid");
  try {
    testing.validate();
    policies.pfa.validate();
    policies.test.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid scenario: ") + e.what());
  }
  check(policies.theta_risk > 0.0 && policies.theta_risk < 1.0, "theta_risk must lie in (0, 1)");
  const Vec beta = mean_transmission();
  check((beta.array() >= 0.0).all(), "transmission rates must be nonnegative");
  std::set<std::pair<double, double>> seen;
  for (const Zone& z : zones) {
    check(seen.insert({z.x, z.y}).second, "zone " + z.id + " shares coordinates with another zone");
  }
}

Scenario generate_toy_scenario(Rng& rng, int n_zones, const ToyOptions& options) {
  require(n_zones >= 2, "a toy scenario needs at least two zones");
  require(options.population_min >= 1 && options.population_min <= options.population_max,
          "population range is invalid");
  Scenario s;
  s.name = "toy";
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Count> pop(options.population_min, options.population_max);
  for (int i = 0; i < n_zones; ++i) {
    Zone z;
    z.id = "z" + std::to_string(i);
    z.name = "zone " + std::to_string(i);
    z.x = unit(rng);
    z.y = unit(rng);
    z.population = pop(rng);
    z.area = 1.0;
    s.zones.push_back(z);
  }
  std::uniform_real_distribution<double> beta(s.disease.beta_min, s.disease.beta_max);
  for (int i = 0; i < n_zones; ++i) s.disease.beta_values.push_back(beta(rng));

  const double total = static_cast<double>(s.populations().sum());
  s.supply.vaccines_initial = static_cast<Count>(std::llround(options.vaccine_share * total));
  s.supply.vaccines_drift = options.vaccine_drift_share * total;
  s.supply.tests_initial = static_cast<Count>(std::llround(options.test_share * total));
  s.supply.tests_drift = options.test_drift_share * total;
  return s;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  // Double quotes protect commas; "" inside quotes is a literal quote.
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(trim(field));
  return fields;
}

double parse_number(const std::string& text, const std::string& column, std::size_t line_no) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value)) {
    throw DataError("line " + std::to_string(line_no) + ": bad " + column + " '" + text + "'");
  }
  return value;
}

}  // namespace

std::vector<Zone> load_zones_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open zone file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);
  const std::vector<std::string> expected = {"zone_id", "name", "population", "area", "x", "y"};
  if (header.size() < expected.size() || !std::equal(expected.begin(), expected.end(), header.begin()) ||
      header.size() > 7 || (header.size() == 7 && header[6] != "init_inf_frac")) {
    throw DataError("line " + std::to_string(line_no) +
                    ": header must be zone_id,name,population,area,x,y[,init_inf_frac]");
  }
  const bool has_init = header.size() == 7;

  std::vector<Zone> zones;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(f.size()));
    }
    Zone z;
    z.id = f[0];
    z.name = f[1];
    if (z.id.empty()) throw DataError("line " + std::to_string(line_no) + ": empty zone_id");
    if (!ids.insert(z.id).second) throw DataError("line " + std::to_string(line_no) + ": duplicate zone_id " + z.id);
    const double pop = parse_number(f[2], "population", line_no);
    if (pop < 1.0 || pop != std::floor(pop)) {
      throw DataError("line " + std::to_string(line_no) + ": population must be a positive integer");
    }
    z.population = static_cast<Count>(pop);
    z.area = parse_number(f[3], "area", line_no);
    if (z.area <= 0.0) throw DataError("line " + std::to_string(line_no) + ": area must be positive");
    z.x = parse_number(f[4], "x", line_no);
    z.y = parse_number(f[5], "y", line_no);
    if (has_init && !f[6].empty()) {
      z.init_inf_frac = parse_number(f[6], "init_inf_frac", line_no);
      if (z.init_inf_frac < 0.0 || z.init_inf_frac > 1.0) {
        throw DataError("line " + std::to_string(line_no) + ": init_inf_frac must lie in [0, 1]");
      }
    }
    zones.push_back(std::move(z));
  }
  if (zones.empty()) throw DataError("zone file " + path.string() + " has no rows");
  return zones;
}

void write_zones_csv(const std::filesystem::path& path, const std::vector<Zone>& zones) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const bool has_init =
      std::any_of(zones.begin(), zones.end(), [](const Zone& z) { return z.init_inf_frac >= 0.0; });
  out << "zone_id,name,population,area,x,y" << (has_init ? ",init_inf_frac" : "") << '\n';
  for (const Zone& z : zones) {
    const bool quote = z.name.find_first_of(",\"") != std::string::npos;
    std::string name = z.name;
    if (quote) {
      for (std::size_t at = name.find('"'); at != std::string::npos; at = name.find('"', at + 2)) name.insert(at, 1, '"');
      name = '"' + name + '"';
    }
    out << z.id << ',' << name << ',' << z.population << ',' << format_double(z.area) << ','
        << format_double(z.x) << ',' << format_double(z.y);
    if (has_init) {
      out << ',';
      if (z.init_inf_frac >= 0.0) out << format_double(z.init_inf_frac);
    }
    out << '\n';
  }
}

Vec transmission_from_density(const std::vector<Zone>& zones, double beta_min, double beta_max) {
  const Index n = static_cast<Index>(zones.size());
  Vec log_density(n);
  for (Index z = 0; z < n; ++z) {
    const Zone& zone = zones[static_cast<std::size_t>(z)];
    log_density(z) = std::log(static_cast<double>(zone.population) / zone.area);
  }
  const double lo = log_density.minCoeff();
  const double hi = log_density.maxCoeff();
  if (hi - lo <= 0.0) return Vec::Constant(n, beta_max);
  return (beta_min + (beta_max - beta_min) * (log_density.array() - lo) / (hi - lo)).matrix();
}

json scenario_to_json(const Scenario& s, const std::string& zones_csv) {
  json j;
  j["name"] = s.name;
  j["zones_csv"] = zones_csv;
  j["horizon"] = s.horizon;
  json transmission;
  transmission["rule"] = s.disease.rule == TransmissionRule::kExplicit ? "explicit" : "log_density";
  transmission["beta_min"] = s.disease.beta_min;
  transmission["beta_max"] = s.disease.beta_max;
  if (s.disease.rule == TransmissionRule::kExplicit) transmission["values"] = s.disease.beta_values;
  j["disease"] = {{"recovery_rate", s.disease.recovery_rate},
                  {"vaccine_success", s.disease.vaccine_success},
                  {"transmission", transmission},
                  {"transmission_noise_cv", s.disease.transmission_noise_cv}};
  j["testing"] = {{"p_symp_given_pos", s.testing.p_symp_given_pos},
                  {"p_symp_given_neg", s.testing.p_symp_given_neg},
                  {"base_seek_symp", s.testing.base_seek_symp},
                  {"base_seek_asymp", s.testing.base_seek_asymp},
                  {"false_positive", s.testing.false_positive},
                  {"false_negative", s.testing.false_negative}};
  j["supply"] = {{"vaccines_initial", s.supply.vaccines_initial},
                 {"vaccines_drift", s.supply.vaccines_drift},
                 {"tests_initial", s.supply.tests_initial},
                 {"tests_drift", s.supply.tests_drift}};
  j["mobility"] = {{"rate", s.mobility.rate}, {"rate_sd", s.mobility.rate_sd}, {"noise_scale", s.mobility.noise_scale}};
  j["initial"] = {{"infected_low", s.initial.infected_low},
                  {"infected_high", s.initial.infected_high},
                  {"prior_error_sd", s.initial.prior_error_sd}};
  j["controller"] = {{"beta_multiplier", s.controller.beta_multiplier},
                     {"gamma_multiplier", s.controller.gamma_multiplier}};
  j["policies"] = {{"pfa_theta", {s.policies.pfa.theta0, s.policies.pfa.theta1}},
                   {"theta_risk", s.policies.theta_risk},
                   {"test_rho", s.policies.test.rho}};
  j["solver"] = {{"starts", s.solver.starts},
                 {"gradient_tol", s.solver.gradient_tol},
                 {"max_iterations", s.solver.max_iterations},
                 {"budget_tol", s.solver.budget_tol},
                 {"enumeration_limit", s.solver.enumeration_limit}};
  return j;
}

namespace {

template <typename T>
void read_opt(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

}  // namespace

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  Scenario s;
  try {
    read_opt(j, "name", s.name);
    read_opt(j, "horizon", s.horizon);
    const std::filesystem::path csv = base_dir / j.at("zones_csv").get<std::string>();
    s.zones = load_zones_csv(csv);
    if (j.contains("disease")) {
      const json& d = j.at("disease");
      read_opt(d, "recovery_rate", s.disease.recovery_rate);
      read_opt(d, "vaccine_success", s.disease.vaccine_success);
      read_opt(d, "transmission_noise_cv", s.disease.transmission_noise_cv);
      if (d.contains("transmission")) {
        const json& t = d.at("transmission");
        const std::string rule = t.value("rule", std::string("explicit"));
        if (rule == "explicit") {
          s.disease.rule = TransmissionRule::kExplicit;
        } else if (rule == "log_density") {
          s.disease.rule = TransmissionRule::kLogDensity;
        } else {
          throw DataError("unknown transmission rule '" + rule + "'");
        }
        read_opt(t, "beta_min", s.disease.beta_min);
        read_opt(t, "beta_max", s.disease.beta_max);
        read_opt(t, "values", s.disease.beta_values);
      }
    }
    if (j.contains("testing")) {
      const json& t = j.at("testing");
      read_opt(t, "p_symp_given_pos", s.testing.p_symp_given_pos);
      read_opt(t, "p_symp_given_neg", s.testing.p_symp_given_neg);
      read_opt(t, "base_seek_symp", s.testing.base_seek_symp);
      read_opt(t, "base_seek_asymp", s.testing.base_seek_asymp);
      read_opt(t, "false_positive", s.testing.false_positive);
      read_opt(t, "false_negative", s.testing.false_negative);
    }
    if (j.contains("supply")) {
      const json& t = j.at("supply");
      read_opt(t, "vaccines_initial", s.supply.vaccines_initial);
      read_opt(t, "vaccines_drift", s.supply.vaccines_drift);
      read_opt(t, "tests_initial", s.supply.tests_initial);
      read_opt(t, "tests_drift", s.supply.tests_drift);
    }
    if (j.contains("mobility")) {
      const json& t = j.at("mobility");
      read_opt(t, "rate", s.mobility.rate);
      read_opt(t, "rate_sd", s.mobility.rate_sd);
      read_opt(t, "noise_scale", s.mobility.noise_scale);
    }
    if (j.contains("initial")) {
      const json& t = j.at("initial");
      read_opt(t, "infected_low", s.initial.infected_low);
      read_opt(t, "infected_high", s.initial.infected_high);
      read_opt(t, "prior_error_sd", s.initial.prior_error_sd);
    }
    if (j.contains("controller")) {
      read_opt(j.at("controller"), "beta_multiplier", s.controller.beta_multiplier);
      read_opt(j.at("controller"), "gamma_multiplier", s.controller.gamma_multiplier);
    }
    if (j.contains("policies")) {
      const json& t = j.at("policies");
      if (t.contains("pfa_theta")) {
        const auto theta = t.at("pfa_theta").get<std::vector<double>>();
        if (theta.size() != 2) throw DataError("pfa_theta needs two values");
        s.policies.pfa = {theta[0], theta[1]};
      }
      read_opt(t, "theta_risk", s.policies.theta_risk);
      read_opt(t, "test_rho", s.policies.test.rho);
    }
    if (j.contains("solver")) {
      const json& t = j.at("solver");
      read_opt(t, "starts", s.solver.starts);
      read_opt(t, "gradient_tol", s.solver.gradient_tol);
      read_opt(t, "max_iterations", s.solver.max_iterations);
      read_opt(t, "budget_tol", s.solver.budget_tol);
      read_opt(t, "enumeration_limit", s.solver.enumeration_limit);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("scenario config: ") + e.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& config_path) {
  std::ifstream in(config_path);
  if (!in) throw DataError("cannot open scenario config " + config_path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(config_path.string() + ": " + e.what());
  }
  return scenario_from_json(j, config_path.parent_path());
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& config_path,
                   const std::filesystem::path& csv_path) {
  const std::filesystem::path rel = std::filesystem::relative(csv_path, config_path.parent_path().empty()
                                                                             ? std::filesystem::path(".")
                                                                             : config_path.parent_path());
  std::ofstream out(config_path);
  if (!out) throw std::runtime_error("cannot write " + config_path.string());
  out << scenario_to_json(scenario, rel.generic_string()).dump(2) << '\n';
  write_zones_csv(csv_path, scenario.zones);
}

EnvParams environment_params(const Scenario& scenario) {
  EnvParams p;
  p.populations = scenario.populations();
  p.recovery_rate = scenario.disease.recovery_rate;
  p.vaccine_success = scenario.disease.vaccine_success;
  p.mean_transmission = scenario.mean_transmission();
  p.transmission_noise_sd = scenario.disease.transmission_noise_cv * p.mean_transmission;
  Vec x(scenario.size());
  Vec y(scenario.size());
  for (Index z = 0; z < scenario.size(); ++z) {
    x(z) = scenario.zones[static_cast<std::size_t>(z)].x;
    y(z) = scenario.zones[static_cast<std::size_t>(z)].y;
  }
  p.mobility_base = inverse_distance_weights(x, y);
  return p;
}

ControllerParams controller_params(const Scenario& scenario) {
  ControllerParams p;
  p.populations = scenario.populations();
  p.beta = scenario.controller.beta_multiplier * scenario.mean_transmission();
  p.gamma = std::min(1.0, scenario.controller.gamma_multiplier * scenario.disease.recovery_rate);
  return p;
}

Count next_supply(Rng& rng, Count current, double drift) {
  if (drift <= 0.0) return current;
  std::normal_distribution<double> step(drift, drift / 2.0);
  return current + std::max<Count>(0, static_cast<Count>(std::llround(step(rng))));
}

}  // namespace vaxalloc
