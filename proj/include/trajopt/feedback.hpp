#pragma once

#include "trajopt/core.hpp"
#include "trajopt/solvers.hpp"

namespace trajopt {

/// Linear feedback policy extracted at an optimal trajectory.
struct FeedbackPolicy {
  Trajectory nominal;
  std::vector<MatrixXd> K;  // T gains, du = -K dx
  double max_feedforward_norm = 0.0;  // max_t ||Q_u||_inf at extraction
};

/// Computes the first-order optimal feedback at a converged solution:
/// costates from the adjoint recursion, Hamiltonian second derivatives,
/// then the second-variation Riccati recursion. The result coincides with
/// the DDP backward-pass gains at the same trajectory.
/// Throws InputError when the trajectory is not stationary
/// (max_t ||Q_u||_inf > stationarity_tol).
FeedbackPolicy neighboring_gains(const Problem& problem, const Trajectory& optimal,
                                 double stationarity_tol = 1e-6);

struct NoiseStudyResult {
  double sigma = 0.0;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  uint64_t seed = 0;
  // per state coordinate, T+1 entries each
  std::vector<VectorXd> mean;       // mean[t] is the n-vector mean at step t
  std::vector<VectorXd> stddev;     // per-coordinate standard deviation at step t
};

/// Closed-loop rollouts x_{t+1} = f(x_t, ubar_t - K_t (x_t - xbar_t)) + w_t
/// with i.i.d. zero-mean per-coordinate Gaussian noise of std sigma. Noise
/// streams derive from (seed, trial), so results are independent of trial
/// execution order. Success: ||x_T - x_goal||_2 < 0.1.
NoiseStudyResult monte_carlo_stabilize(const Problem& problem, const FeedbackPolicy& policy,
                                       double sigma, int trials, uint64_t seed);

/// Per-step errors of three perturbation propagations against the closed-loop
/// ground truth, for one line-search parameter.
struct PerturbationRow {
  int step = 0;          // t+1, the step whose perturbation is compared
  double err_linear = 0.0;     // local linear model, true dx fed in
  double err_quadratic = 0.0;  // local quadratic model, true dx fed in
  double err_recursive = 0.0;  // recursively linearized dx (stagewise-Newton)
};

struct PerturbationTable {
  double alpha = 0.0;
  bool truncated = false;  // ground truth diverged before the horizon
  std::vector<PerturbationRow> rows;

  double max_recursive_error() const;
};

std::vector<PerturbationTable> perturbation_study(const Problem& problem,
                                                  const Trajectory& nominal,
                                                  const LocalModel& model,
                                                  const GainSchedule& schedule,
                                                  const std::vector<double>& alphas);

}  // namespace trajopt
