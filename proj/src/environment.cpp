#include "vaxalloc/environment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "vaxalloc/firewall.hpp"

namespace vaxalloc {

Mat inverse_distance_weights(const Vec& x, const Vec& y) {
  require(x.size() == y.size(), "coordinate vectors differ in length");
  const Index n = x.size();
  Mat weights = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dist = std::hypot(x(i) - x(j), y(i) - y(j));
      if (dist <= 0.0) {
        throw DataError("zones " + std::to_string(i) + " and " + std::to_string(j) + " share coordinates");
      }
      weights(i, j) = 1.0 / dist;
    }
    const double total = weights.row(i).sum();
    if (total > 0.0) weights.row(i) /= total;
  }
  return weights;
}

Mat sample_mobility_matrix(Rng& rng, const Mat& mobility_base, double noise_scale) {
  require(mobility_base.rows() == mobility_base.cols(), "mobility base must be square");
  require(noise_scale >= 0.0, "mobility noise scale must be nonnegative");
  require((mobility_base.array() >= 0.0).all(), "mobility base must be nonnegative");

  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat out = mobility_base;
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) {
      // Always draw so the stream position does not depend on the weights.
      const double factor = std::exp(noise_scale * gauss(rng));
      out(i, j) *= factor;
    }
    const double total = out.row(i).sum();
    if (out.rows() == 1) break;  // a lone zone has nobody to visit
    if (!(total > 0.0)) {
      throw std::invalid_argument("isolated zone " + std::to_string(i));
    }
    out.row(i) /= total;
  }
  return out;
}

Vec sample_transmission_noise(Rng& rng, const Vec& transmission_noise_sd) {
  Vec noise(transmission_noise_sd.size());
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index z = 0; z < noise.size(); ++z) {
    require(transmission_noise_sd(z) >= 0.0, "transmission noise sd must be nonnegative");
    noise(z) = transmission_noise_sd(z) * gauss(rng);
  }
  return noise;
}

Vec realized_transmission(const Vec& mean_transmission, const Vec& noise) {
  require(mean_transmission.size() == noise.size(), "transmission noise dimension mismatch");
  return (mean_transmission + noise).cwiseMax(0.0);
}

Vec sample_transmission_rates(Rng& rng, const Vec& mean_transmission, const Vec& transmission_noise_sd) {
  require(mean_transmission.size() == transmission_noise_sd.size(), "transmission dimension mismatch");
  return realized_transmission(mean_transmission, sample_transmission_noise(rng, transmission_noise_sd));
}

void validate_state(const EnvState& state, const CountVec& populations) {
  const Index n = populations.size();
  require(state.susceptible.size() == n && state.infected.size() == n && state.removed.size() == n,
          "state dimension does not match the number of zones");
  for (Index z = 0; z < n; ++z) {
    const double pop = static_cast<double>(populations(z));
    const double tol = 1e-9 * pop;
    if (state.susceptible(z) < -tol || state.infected(z) < -tol || state.removed(z) < -tol) {
      throw std::invalid_argument("negative compartment in zone " + std::to_string(z));
    }
    const double total = state.susceptible(z) + state.infected(z) + state.removed(z);
    if (std::abs(total - pop) > tol) {
      throw std::invalid_argument("compartments of zone " + std::to_string(z) + " do not sum to its population");
    }
  }
}

EnvTransition step_environment(const EnvState& state, const EnvParams& params, const EnvExogenous& exog) {
  firewall::check_environment_access();

  const Index n = params.zones();
  require(params.mean_transmission.size() == n && exog.transmission_noise.size() == n &&
              exog.vaccine_alloc.size() == n,
          "exogenous dimension mismatch");
  require(exog.mobility_matrix.rows() == n && exog.mobility_matrix.cols() == n, "mobility matrix dimension mismatch");
  require((exog.vaccine_alloc.array() >= 0).all(), "vaccine allocation must be nonnegative");
  validate_state(state, params.populations);

  const Vec pop = params.populations.cast<double>();
  const Vec doses = params.vaccine_success * exog.vaccine_alloc.cast<double>();
  const Vec vaccinated = doses.cwiseMin(state.susceptible).cwiseMax(0.0);
  const Vec post_vaccination = (state.susceptible - vaccinated).cwiseMax(0.0);

  const Vec rates = realized_transmission(params.mean_transmission, exog.transmission_noise);
  const Vec force = rates.cwiseProduct(state.infected).cwiseQuotient(pop);
  const Vec imported = exog.mobility_matrix * force;

  EnvTransition out;
  out.new_infections.resize(n);
  for (Index z = 0; z < n; ++z) {
    const double raw = force(z) * post_vaccination(z) + state.mobility_rate * post_vaccination(z) * imported(z);
    if (raw > post_vaccination(z)) {
      ++out.cap_events;
      out.new_infections(z) = post_vaccination(z);
    } else {
      out.new_infections(z) = raw;
    }
  }

  const double gamma = params.recovery_rate;
  out.state.susceptible = post_vaccination - out.new_infections;
  out.state.infected = (1.0 - gamma) * state.infected + out.new_infections;
  out.state.removed = state.removed + gamma * state.infected + vaccinated;
  out.state.mobility_rate = exog.next_mobility_rate;
  out.state.transmission_rates = rates;
  out.vaccinated = vaccinated;
  return out;
}

double true_step_cost(const EnvState& next_state) {
  return next_state.infected.sum();
}

}  // namespace vaxalloc
