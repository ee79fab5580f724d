#include <cmath>
#include <random>

#include "doctest.h"
#include "suites.hpp"
#include "vaxalloc/policies.hpp"

using namespace vaxalloc;

namespace {

BeliefState belief_of(const Vec& ps, const Vec& pi, Count n_vac, Count n_test = 0) {
  BeliefState b;
  b.p_susc = ps;
  b.p_inf = pi;
  b.p_rec = Vec::Ones(ps.size()) - ps - pi;
  b.n_vac = n_vac;
  b.n_test = n_test;
  return b;
}

ControllerParams params_of(const Vec& beta, double gamma, const CountVec& pop) {
  ControllerParams p;
  p.beta = beta;
  p.gamma = gamma;
  p.populations = pop;
  return p;
}

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

}  // namespace

TEST_CASE("null policy") {
  CHECK(null_policy(3) == CountVec::Zero(3));
  CHECK(null_policy(1).sum() == 0);
}

TEST_CASE("PFA allocations") {
  const BeliefState even = belief_of(Vec::Constant(2, 0.6), Vec::Constant(2, 0.2), 10);
  CHECK(pfa_policy(even, {}) == (CountVec(2) << 5, 5).finished());

  const BeliefState flat = belief_of((Vec(3) << 0.9, 0.5, 0.1).finished(), Vec::Constant(3, 0.05), 10);
  CHECK(pfa_policy(flat, {2.0, 0.0}) == (CountVec(3) << 3, 3, 3).finished());

  // Direct evaluation of the response for (0.9, 0.1).
  const BeliefState skew = belief_of((Vec(2) << 0.9, 0.1).finished(), Vec::Constant(2, 0.05), 100);
  const double g1 = std::pow(sigmoid(9.0), 50.0), g2 = std::pow(sigmoid(1.0), 50.0);
  const CountVec x = pfa_policy(skew, {50.0, 10.0});
  CHECK(x(0) == static_cast<Count>(std::floor(100.0 * g1 / (g1 + g2))));
  CHECK(x(1) == static_cast<Count>(std::floor(100.0 * g2 / (g1 + g2))));
  CHECK(x == (CountVec(2) << 99, 0).finished());

  const Vec g = pfa_response((Vec(2) << 0.9, 0.1).finished(), {50.0, 10.0});
  CHECK(g(0) == doctest::Approx(g1).epsilon(1e-12));
  CHECK(g(1) == doctest::Approx(g2).epsilon(1e-12));
  CHECK_THROWS_AS(pfa_response(Vec::Ones(1), {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("PFA survives exponents that underflow the response") {
  const BeliefState b = belief_of((Vec(2) << 0.02, 0.01).finished(), Vec::Constant(2, 0.5), 1000);
  const CountVec x = pfa_policy(b, {5000.0, -20.0});
  CHECK(x.sum() <= 1000);
  CHECK(x.sum() >= 998);
}

TEST_CASE("PFA depends on the response only through ratios") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Index n = 1 + k % 6;
    Vec ps(n);
    for (Index z = 0; z < n; ++z) ps(z) = u(rng);
    const BeliefState b = belief_of(ps, Vec::Zero(n), static_cast<Count>(u(rng) * 1e6));
    const PfaParams prm{1.0 + 60.0 * u(rng), 20.0 * u(rng) - 10.0};
    Vec g(n);
    for (Index z = 0; z < n; ++z) g(z) = std::pow(sigmoid(prm.theta1 * ps(z)), prm.theta0);
    const Vec scaled = g * 1e-40;
    const CountVec x = pfa_policy(b, prm);
    CHECK(x.sum() <= b.n_vac);
    CHECK((x.array() >= 0).all());
    for (Index z = 0; z < n; ++z) {
      const double want = static_cast<double>(b.n_vac) * scaled(z) / scaled.sum();
      CHECK(std::abs(static_cast<double>(x(z)) - std::floor(want)) <= 1.0);
    }
  }
}

TEST_CASE("lookahead state") {
  const CountVec pop = CountVec::Constant(1, 1000);
  const BeliefState b = belief_of(Vec::Constant(1, 0.8), Vec::Constant(1, 0.1), 0);
  const LookaheadState l = build_lookahead_state(b, pop, 0.15);
  CHECK(l.s_risk(0) == doctest::Approx(800.0 - 1.0364333894937898 * std::sqrt(160.0)).epsilon(1e-12));
  CHECK(l.s_risk(0) == doctest::Approx(786.9).epsilon(1e-4));
  CHECK(l.i_mean(0) == doctest::Approx(100.0));
  CHECK(l.s_risk(0) + l.i_mean(0) + l.r_resid(0) == doctest::Approx(1000.0));

  CHECK(build_lookahead_state(b, pop, 0.5).s_risk(0) == doctest::Approx(800.0));
  const BeliefState sure = belief_of(Vec::Constant(1, 1.0), Vec::Zero(1), 0);
  CHECK(build_lookahead_state(sure, pop, 0.01).s_risk(0) == doctest::Approx(1000.0));
  CHECK_THROWS_AS(build_lookahead_state(b, pop, 0.0), std::invalid_argument);

  // Optimistic quantiles never push S above what the infected leave room for.
  const BeliefState tight = belief_of(Vec::Constant(1, 0.5), Vec::Constant(1, 0.5), 0);
  const LookaheadState t = build_lookahead_state(tight, pop, 0.95);
  CHECK(t.s_risk(0) <= 500.0 + 1e-9);
  CHECK(t.r_resid(0) >= -1e-9);
}

TEST_CASE("lookahead QP vectors by hand") {
  LookaheadState l;
  l.s_risk = Vec::Constant(1, 80.0);
  l.i_mean = Vec::Constant(1, 10.0);
  l.r_resid = Vec::Constant(1, 10.0);
  const DlaForm f = assemble_dla_qp(l, params_of(Vec::Constant(1, 0.5), 0.2, CountVec::Constant(1, 100)), 20);
  CHECK(f.vectors.b(0) == doctest::Approx(0.005));
  CHECK(f.vectors.u(0) == doctest::Approx(-0.05));
  CHECK(f.vectors.w(0) == doctest::Approx(-0.95));
  CHECK(f.vectors.v(0) == doctest::Approx(12.0));
  CHECK(f.vectors.z(0) == doctest::Approx(76.0));
  CHECK(f.form.quad(0, 0) == doctest::Approx(2.375e-4));
  // Cross term is -b*u/2, positive because u < 0.
  CHECK(f.form.quad(0, 1) == doctest::Approx(1.25e-4));
  CHECK(f.form.quad(1, 0) == f.form.quad(0, 1));
  CHECK(f.form.quad(1, 1) == 0.0);
  CHECK(f.form.sense == Sense::kMinimize);
  CHECK_NOTHROW(f.form.validate());

  CHECK_THROWS_AS(assemble_dla_qp(l, params_of(Vec::Constant(1, 0.5), 0.2, CountVec::Constant(1, 100)), 80),
                  TrivialBranch);

  LookaheadState quiet = l;
  quiet.i_mean.setZero();
  const DlaForm q = assemble_dla_qp(quiet, params_of(Vec::Constant(1, 0.5), 0.2, CountVec::Constant(1, 100)), 20);
  CHECK(q.form.quad.isZero());
  CHECK(q.form.lin.isZero());
}

TEST_CASE("assembled objective tracks the simulated two-step cost") {
  std::mt19937_64 rng(606);
  const suites::EquivalenceResult r = suites::dla_equivalence(rng, 30, 12);
  CHECK(r.instances == 30);
  CHECK(r.worst_difference_error <= 1e-8);
  CHECK(r.solver_mismatches == 0);
}

TEST_CASE("library two-step cost agrees with the oracle") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    const suites::DlaInstance in = suites::random_dla_instance(rng, 2, 10);
    const Vec x1 = suites::random_interior(rng, in.look.s_risk, 10.0);
    const Vec x2 = suites::random_interior(rng, suites::oracle_week_one_susceptible(in, x1), 10.0);
    CHECK(lookahead_two_step_cost(in.look, in.params, x1, x2) == doctest::Approx(suites::oracle_cost(in, x1, x2)));
  }
}

TEST_CASE("DLA decisions") {
  const ControllerParams p = params_of(Vec::Constant(1, 0.8), 0.3, CountVec::Constant(1, 1000));
  // Plenty of supply: floor of the pessimistic susceptibles.
  const BeliefState rich = belief_of(Vec::Constant(1, 0.3), Vec::Constant(1, 0.1), 1000);
  Rng rng(1);
  const DlaDecision t = dla_policy(rich, p, 0.15, rng);
  CHECK(t.trivial);
  CHECK(t.allocation(0) ==
        static_cast<Count>(std::floor(build_lookahead_state(rich, p.populations, 0.15).s_risk(0))));

  // One zone and scarce supply: vaccinate with everything.
  const BeliefState scarce = belief_of(Vec::Constant(1, 0.6), Vec::Constant(1, 0.2), 37);
  const DlaDecision s = dla_policy(scarce, p, 0.15, rng);
  CHECK_FALSE(s.trivial);
  CHECK_FALSE(s.fallback);
  CHECK(s.allocation(0) == 37);

  // Two zones: the first week's decision matches the oracle's best split.
  const ControllerParams p2 = params_of((Vec(2) << 0.6, 0.6).finished(), 0.4, CountVec::Constant(2, 100));
  const BeliefState two = belief_of((Vec(2) << 0.5, 0.5).finished(), (Vec(2) << 0.05, 0.3).finished(), 10);
  const DlaDecision d = dla_policy(two, p2, 0.15, rng);
  CHECK(d.allocation.sum() <= 10);
  suites::DlaInstance in;
  in.look = build_lookahead_state(two, p2.populations, 0.15);
  in.params = p2;
  in.budget = 10;
  double best = std::numeric_limits<double>::infinity();
  for (long a = 0; a <= 10; ++a) {
    for (long b = 0; a + b <= 10; ++b) {
      const Vec x1 = (Vec(2) << a, b).finished();
      const Vec s1 = suites::oracle_week_one_susceptible(in, x1);
      for (long c = 0; c <= 10; ++c) {
        for (long e = 0; c + e <= 10; ++e) {
          if (c > s1(0) || e > s1(1)) continue;
          best = std::min(best, suites::oracle_cost(in, x1, (Vec(2) << c, e).finished()));
        }
      }
    }
  }
  const Vec x1 = d.report.solution.head(2);
  CHECK(suites::oracle_cost(in, x1, d.report.solution.tail(2)) == doctest::Approx(best).epsilon(1e-10));
  // More infected zone gets the doses.
  CHECK(d.allocation(1) >= d.allocation(0));
}

TEST_CASE("proportional allocation") {
  CHECK(proportional_allocation(10, (CountVec(3) << 1, 1, 1).finished()) == (CountVec(3) << 3, 3, 3).finished());
  CHECK(proportional_allocation(0, (CountVec(2) << 5, 9).finished()).sum() == 0);
}

TEST_CASE("testing variance QP coefficients") {
  const QpFormd f = testing_variance_qp({{20.0, 80.0}, {0.0, 50.0}}, (CountVec(2) << 100, 50).finished(), 10);
  CHECK(f.lin(0) == doctest::Approx(1600.0 / (100.0 * 101.0)).epsilon(1e-14));
  CHECK(f.lin(0) == doctest::Approx(0.15842).epsilon(1e-4));
  CHECK(f.quad(0, 0) == doctest::Approx(1600.0 / (1e4 * 101.0)).epsilon(1e-14));
  CHECK(f.lin(1) == 0.0);
  CHECK(f.quad(1, 1) == 0.0);
  CHECK(f.budget_mode == BudgetMode::kExactly);
  CHECK(f.sense == Sense::kMinimize);
}

TEST_CASE("testing allocation against enumeration and the rho limits") {
  std::mt19937_64 rng(404);
  const suites::TestingResult r = suites::testing_suite(rng, 80);
  CHECK(r.instances == 80);
  CHECK(r.waterfill_mismatches == 0);
  CHECK(r.rho_one_mismatches == 0);
  CHECK(r.rho_zero_mismatches == 0);
}

TEST_CASE("CFA testing with two equal zones") {
  const CountVec pop = CountVec::Constant(2, 200);
  const std::vector<BetaPrior> priors{{20.0, 180.0}, {100.0, 100.0}};
  BeliefState b = belief_of(Vec::Constant(2, 0.5), Vec::Constant(2, 0.2), 0, 100);
  const CountVec x = cfa_test_policy(b, priors, pop, {0.7});
  CHECK(x.sum() == 100);
  // 70 split evenly, then the remaining 30 by enumeration.
  suites::TestingInstance in{priors, pop, 30};
  const CountVec greedy = x - CountVec::Constant(2, 35);
  CHECK((greedy.array() >= 0).all());
  CHECK(suites::testing_objective(in, suites::to_std(greedy)) ==
        doctest::Approx(suites::best_testing_objective(in, 30, pop)));

  b.n_test = 1000;  // more kits than people
  CHECK(cfa_test_policy(b, priors, pop, {0.7}).sum() == 400);
  CHECK_THROWS_AS(cfa_test_policy(b, priors, pop, {1.5}), std::invalid_argument);
}

TEST_CASE("every policy respects its budget") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SolverOptions opts;
  for (int k = 0; k < 150; ++k) {
    const Index n = 1 + k % 5;
    Vec ps(n), pi(n);
    CountVec pop(n);
    for (Index z = 0; z < n; ++z) {
      const double a = u(rng), c = u(rng), e = u(rng);
      ps(z) = a / (a + c + e);
      pi(z) = c / (a + c + e);
      pop(z) = 50 + static_cast<Count>(u(rng) * 5000);
    }
    const BeliefState b = belief_of(ps, pi, static_cast<Count>(u(rng) * 3000), static_cast<Count>(u(rng) * 3000));
    const ControllerParams p = params_of(Vec::Random(n).cwiseAbs() * 2.0, 0.5, pop);
    Rng srng(k);
    for (const VaccinePolicy& pol : {VaccinePolicy{NullPolicy{}}, VaccinePolicy{PfaPolicy{}},
                                     VaccinePolicy{DlaPolicy{}}}) {
      const VaccineDecision d = decide_vaccines(pol, b, p, srng, opts);
      CHECK(d.allocation.size() == n);
      CHECK((d.allocation.array() >= 0).all());
      CHECK(d.allocation.sum() <= b.n_vac);
    }
    std::vector<BetaPrior> priors;
    for (Index z = 0; z < n; ++z) priors.push_back(beta_prior_from_belief(pi(z) * pop(z), pop(z)));
    const CountVec t = cfa_test_policy(b, priors, pop, {u(rng)});
    CHECK((t.array() >= 0).all());
    CHECK((t.array() <= pop.array()).all());
    CHECK(t.sum() <= b.n_test);
  }
}

TEST_CASE("policy names round-trip") {
  for (const char* name : {"null", "pfa", "dla"}) CHECK(policy_name(policy_from_name(name)) == name);
  CHECK_THROWS_AS(policy_from_name("greedy"), std::invalid_argument);
}
