#pragma once

#include <utility>

#include "vaxalloc/rng.hpp"
#include "vaxalloc/types.hpp"

namespace vaxalloc {

/// Symptom, test-seeking and test-error probabilities of the sampling oracle.
struct TestingParams {
  double p_symp_given_pos = 0.7;   // a
  double p_symp_given_neg = 0.1;   // b
  double base_seek_symp = 0.6;     // c0
  double base_seek_asymp = 0.1;    // d0
  double false_positive = 0.02;
  double false_negative = 0.1;

  void validate() const;
};

/// Probability of seeking a test when symptomatic (c) and asymptomatic (d),
/// both rising linearly to 1 as the kits allocated approach the population.
std::pair<double, double> seek_probabilities(const TestingParams& params, Count x_test, Count population);

/// Probability that an administered test comes back positive, given the true
/// infected fraction. Throws std::domain_error when nobody seeks testing.
double prob_test_positive(double p_inf, const TestingParams& params, double c, double d);

/// Binomial(x_test, p_test) draw of positive results.
Count sample_positive_tests(Rng& rng, Count x_test, double p_test);

}  // namespace vaxalloc
