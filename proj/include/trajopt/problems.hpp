#pragma once

#include <nlohmann/json.hpp>

#include "trajopt/core.hpp"

namespace trajopt {

/// Parameters of one benchmark problem. Continuous problems (pendulum,
/// cartpole, tp1, tp2) are discretized by holding u constant over dt_hold
/// and integrating with explicit-Euler sub-steps of size dt. tp3 and tp4
/// are natively discrete; their T counts states as in the source tables,
/// so the built Problem has T - 1 transitions.
struct BenchmarkSpec {
  std::string name;  // pendulum | cartpole | tp1 | tp2 | tp3 | tp4 | lqr_test

  // continuous problems
  double t_f = 0.0;
  double dt = 0.0;
  double dt_hold = 0.0;
  int T = 0;
  double q = 0.0, r = 0.0, qf = 0.0;  // cost weights, scalar multiples of I
  VectorXd x0, xf;
  // stage-cost weight for the integral discretization: "hold" weights each
  // stage by dt_hold, "none" leaves stages unweighted.
  std::string stage_weight = "hold";

  // pendulum physical parameters
  double pend_mass = 1.0, pend_length = 1.0, pend_gravity = 9.81, pend_damping = 0.1;
  // cart-pole physical parameters
  double cart_mass = 1.0, pole_mass = 0.1, pole_length = 1.0, cart_gravity = 9.81;

  // tp3 / tp4 dimensions
  int tp_n = 0, tp_m = 0;
  double tp_mu = 0.0;

  void validate() const;
  int substeps() const;  // dt_hold / dt, validated integer
};

static constexpr int kConfigSchemaVersion = 1;

void to_json(nlohmann::json& j, const BenchmarkSpec& spec);
void from_json(const nlohmann::json& j, BenchmarkSpec& spec);

BenchmarkSpec default_spec(const std::string& name);

Problem build_benchmark(const BenchmarkSpec& spec);

/// Tabulated initial control sequences for tp3/tp4 (point_id in 1..5).
std::vector<VectorXd> starting_controls(const BenchmarkSpec& spec, int point_id);

/// i.i.d. uniform controls on [-u_scale, u_scale] from a deterministic stream.
std::vector<VectorXd> random_controls(const Problem& problem, uint64_t seed, double u_scale);

/// Conventional control magnitude for random initial guesses per problem.
double default_u_scale(const std::string& name);

/// Derivative provider backed entirely by finite differences of the problem
/// maps; used as fallback and as the oracle side of consistency checks.
DerivativeProvider fd_provider(const Problem& problem);

}  // namespace trajopt
