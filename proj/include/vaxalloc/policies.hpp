#pragma once

#include <string>
#include <variant>
#include <vector>

#include "vaxalloc/belief.hpp"
#include "vaxalloc/qp_form.hpp"
#include "vaxalloc/rng.hpp"
#include "vaxalloc/solvers.hpp"
#include "vaxalloc/types.hpp"

// Controller-side code. Nothing here may include environment.hpp.

namespace vaxalloc {

struct PfaParams {
  double theta0 = 50.0;  // exponent
  double theta1 = 10.0;  // slope

  void validate() const;
};

struct TestPolicyParams {
  double rho = 0.7;

  void validate() const;
};

/// Pessimistic susceptibles used by the two-step lookahead.
struct LookaheadState {
  Vec s_risk;
  Vec i_mean;
  Vec r_resid;
};

/// Auxiliary vectors of the lookahead QP, kept for inspection and tests.
struct DlaVectors {
  Vec b;
  Vec u;
  Vec w;
  Vec v;
  Vec z;
};

struct DlaForm {
  QpFormd form;
  DlaVectors vectors;
};

/// Thrown by assemble_dla_qp when the supply already covers every pessimistic
/// susceptible and the trivial allocation applies.
class TrivialBranch : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

CountVec null_policy(Index n_zones);

/// Response g_z = sigmoid(theta1 * p_susc_z)^theta0, computed in log space.
Vec pfa_response(const Vec& p_susc, const PfaParams& params);

/// floor(n_vac * g_z / sum g).
CountVec pfa_policy(const BeliefState& belief, const PfaParams& params);

LookaheadState build_lookahead_state(const BeliefState& belief, const CountVec& populations, double theta_risk);

DlaForm assemble_dla_qp(const LookaheadState& look, const ControllerParams& params, Count n_vac);

/// Total infections over the two lookahead steps when the controller's SIR
/// model is rolled forward from `look` with decisions x1 then x2.
double lookahead_two_step_cost(const LookaheadState& look, const ControllerParams& params, const Vec& x1,
                               const Vec& x2);

struct DlaDecision {
  CountVec allocation;
  bool trivial = false;
  bool fallback = false;
  SolverReport report;
};

DlaDecision dla_policy(const BeliefState& belief, const ControllerParams& params, double theta_risk, Rng& rng,
                       const SolverOptions& options = {});

/// Population-proportional split with floors.
CountVec proportional_allocation(Count budget, const CountVec& populations);

QpFormd testing_variance_qp(const std::vector<BetaPrior>& priors, const CountVec& populations, Count budget);

CountVec cfa_test_policy(const BeliefState& belief, const std::vector<BetaPrior>& priors, const CountVec& populations,
                         const TestPolicyParams& params);

// Named vaccine policies as used by the harness.
struct NullPolicy {};
struct PfaPolicy {
  PfaParams params;
};
struct DlaPolicy {
  double theta_risk = 0.15;
};
using VaccinePolicy = std::variant<NullPolicy, PfaPolicy, DlaPolicy>;

std::string policy_name(const VaccinePolicy& policy);

/// Parses "null", "pfa" or "dla" into a policy with default parameters.
VaccinePolicy policy_from_name(const std::string& name);

struct VaccineDecision {
  CountVec allocation;
  bool fallback = false;
};

VaccineDecision decide_vaccines(const VaccinePolicy& policy, const BeliefState& belief, const ControllerParams& params,
                                Rng& solver_rng, const SolverOptions& options);

}  // namespace vaxalloc
