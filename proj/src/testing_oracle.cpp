#include "vaxalloc/testing_oracle.hpp"

#include <random>
#include <stdexcept>

namespace vaxalloc {

namespace {
bool unit(double v) { return v >= 0.0 && v <= 1.0; }
}  // namespace

void TestingParams::validate() const {
  require(unit(p_symp_given_pos) && unit(p_symp_given_neg) && unit(base_seek_symp) && unit(base_seek_asymp) &&
              unit(false_positive) && unit(false_negative),
          "testing probabilities must lie in [0, 1]");
}

std::pair<double, double> seek_probabilities(const TestingParams& params, Count x_test, Count population) {
  require(population >= 1, "population must be positive");
  require(x_test >= 0, "test allocation must be nonnegative");
  require(x_test <= population, "more tests allocated than people in the zone");
  const double coverage = static_cast<double>(x_test) / static_cast<double>(population);
  const double c = params.base_seek_symp + coverage * (1.0 - params.base_seek_symp);
  const double d = params.base_seek_asymp + coverage * (1.0 - params.base_seek_asymp);
  return {c, d};
}

double prob_test_positive(double p_inf, const TestingParams& params, double c, double d) {
  require(unit(p_inf) && unit(c) && unit(d), "probabilities must lie in [0, 1]");
  const double a = params.p_symp_given_pos;
  const double b = params.p_symp_given_neg;
  const double denom = (c - d) * ((a - b) * p_inf + b) + d;
  if (!(denom > 0.0)) {
    throw std::domain_error("nobody seeks testing");
  }
  const double pos_given_test = ((a * c + (1.0 - a) * d) * p_inf) / denom;
  return (1.0 - params.false_negative) * pos_given_test + params.false_positive * (1.0 - pos_given_test);
}

Count sample_positive_tests(Rng& rng, Count x_test, double p_test) {
  require(x_test >= 0, "test count must be nonnegative");
  require(unit(p_test), "test positivity must lie in [0, 1]");
  if (x_test == 0) return 0;
  std::binomial_distribution<Count> dist(x_test, p_test);
  return dist(rng);
}

}  // namespace vaxalloc
