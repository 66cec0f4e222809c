#pragma once

#include "trajopt/core.hpp"

namespace trajopt {

enum class Method { ILQR, DDP, SN, Mixed, Hybrid };
enum class RegScheme { None, LmShift, AdaptiveShift };

Method method_from_string(const std::string& s);
std::string to_string(Method m);
RegScheme reg_scheme_from_string(const std::string& s);

struct RegConfig {
  RegScheme scheme = RegScheme::None;
  double eps_pd = 1e-6;  // lm_shift floor on the smallest eigenvalue
  // adaptive shift multiplier schedule
  double rho_inc = 10.0;
  double rho_dec = 2.0;
  double rho_min = 1e-8;
};

struct RegState {
  double rho = 0.0;
};

/// Applies the configured shift to a symmetric Q_uu. Returns the shifted
/// matrix and the shift magnitude actually added. lm_shift adds just enough
/// to push the smallest eigenvalue to eps_pd; adaptive_shift adds state.rho
/// unconditionally; none passes through.
std::pair<MatrixXd, double> regularize_quu(const MatrixXd& quu, const RegConfig& cfg,
                                           const RegState& state);

/// Stagewise gains and value recursion from one backward pass.
struct GainSchedule {
  std::vector<VectorXd> k;        // T feedforward terms
  std::vector<MatrixXd> K;        // T feedback gains
  std::vector<MatrixXd> S;        // T+1 value Hessians
  std::vector<VectorXd> v;        // T+1 value gradients
  std::vector<VectorXd> lambda;   // T+1 multipliers (stagewise-Newton only)
  std::vector<double> quu_min_eig;  // T, smallest eigenvalue before any shift
  std::vector<double> reg_shift;    // T, shift applied before inversion
  double reduction_sum = 0.0;       // sum_t Q_u' Quu^-1 Q_u with the Quu inverted

  double min_quu_eig() const;
  double max_reg_shift() const;
};

struct BackwardPassError : std::runtime_error {
  BackwardPassError(int step, double min_eig)
      : std::runtime_error("backward pass failed at step " + std::to_string(step) +
                           " (min Quu eigenvalue " + std::to_string(min_eig) + ")"),
        step(step),
        min_eig(min_eig) {}
  int step;
  double min_eig;
};

/// Riccati-style backward recursion. method selects which multiplier the
/// second-order dynamics tensors are contracted with: DDP uses the value
/// gradient v_{t+1}, stagewise-Newton uses the adjoint recursion
/// lambda_t = c_x + f_x' lambda_{t+1}, and iLQR drops the tensors entirely.
/// Throws BackwardPassError when the (shifted) Q_uu cannot be inverted.
GainSchedule backward_pass(const LocalModel& model, Method method,
                           const RegConfig& reg = {}, const RegState& state = {});

/// Model-predicted cost change -(alpha - alpha^2/2) * reduction_sum.
double expected_reduction(const GainSchedule& schedule, double alpha);

/// Closed-loop rollout with u_t = ubar_t + alpha*k_t + K_t (x_t - xbar_t).
/// Returns nullopt when the candidate diverges (non-finite state).
std::optional<Trajectory> forward_nonlinear(const Problem& problem, const Trajectory& nominal,
                                            const GainSchedule& schedule, double alpha);

/// Stagewise-Newton forward pass: the feedback term uses the recursively
/// linearized perturbation; the returned trajectory is the true nonlinear
/// rollout of the resulting controls.
std::optional<std::pair<std::vector<VectorXd>, Trajectory>> forward_linearized(
    const Problem& problem, const Trajectory& nominal, const LocalModel& model,
    const GainSchedule& schedule, double alpha);

struct SolverConfig {
  Method method = Method::ILQR;
  int max_iters = 100;
  double alpha0 = 1.0;
  double backtrack_factor = 0.5;
  double alpha_min = 1e-8;
  double accept_threshold = 0.0;  // accept when dJ_actual / dJ_pred >= this
  double tol = 1e-6;              // convergence tolerance (cost change, reduction sum)
  RegConfig reg;
  double alpha_switch = 0.1;  // hybrid: switch to iLQR once accepted alpha drops below
  uint64_t seed = 0;

  void validate() const;
};

struct LineSearchResult {
  bool accepted = false;
  double alpha = 0.0;
  Trajectory trajectory;
  double dj_pred = 0.0;
  double dj_actual = 0.0;
  int backtracks = 0;
};

/// Backtracking line search on alpha with the ratio acceptance rule.
LineSearchResult line_search(const Problem& problem, const Trajectory& nominal,
                             const LocalModel& model, const GainSchedule& schedule,
                             const SolverConfig& config, Method forward_method);

struct IterationRecord {
  int iter = 0;
  double J = 0.0;          // cost of the nominal at the start of the iteration
  double alpha = 0.0;      // accepted step (0 if rejected)
  double dj_pred = 0.0;    // predicted change at the accepted alpha
  double dj_pred_full = 0.0;  // predicted change at alpha = 1
  double dj_actual = 0.0;
  double min_quu_eig = 0.0;  // min over t, before shifts
  double reg_shift = 0.0;    // max shift applied over t
  int backtracks = 0;
  bool accepted = false;
};

enum class SolveStatus { Converged, MaxIters, Stalled, Diverged };
std::string to_string(SolveStatus s);

struct SolveReport {
  std::vector<IterationRecord> iterations;
  SolveStatus status = SolveStatus::MaxIters;
  Trajectory final_trajectory;
  GainSchedule final_schedule;
  int hybrid_switch_iter = -1;  // first iLQR iteration of a hybrid run

  int accepted_iterations() const;
};

SolveReport solve(const Problem& problem, const std::vector<VectorXd>& init_controls,
                  const SolverConfig& config);

}  // namespace trajopt
