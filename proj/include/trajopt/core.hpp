#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Thrown on malformed inputs (wrong dimensions, unknown names, bad ids).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a numeric evaluation produces non-finite values.
struct NumericError : std::runtime_error {
  NumericError(const std::string& what, int step) : std::runtime_error(what), step(step) {}
  int step;
};

/// Per-step derivative blocks of dynamics and cost along a nominal trajectory.
/// Tensors are stored per output coordinate: fxx[i] is the n x n Hessian of
/// the i-th dynamics component w.r.t. x, fxu[i] is n x m, fuu[i] is m x m.
struct StepModel {
  MatrixXd fx;  // n x n
  MatrixXd fu;  // n x m
  std::vector<MatrixXd> fxx;  // n of (n x n), empty when second order not requested
  std::vector<MatrixXd> fxu;  // n of (n x m)
  std::vector<MatrixXd> fuu;  // n of (m x m)
  VectorXd cx;   // n
  VectorXd cu;   // m
  MatrixXd cxx;  // n x n
  MatrixXd cxu;  // n x m
  MatrixXd cuu;  // m x m
};

struct LocalModel {
  std::vector<StepModel> steps;  // size T
  VectorXd terminal_cx;          // n
  MatrixXd terminal_cxx;         // n x n
  bool has_dynamics_hessians = false;

  // lambda-contraction of the second-order dynamics tensors at step t,
  // e.g. contract_xx(t, v) = sum_i v_i * fxx[i]  (n x n).
  MatrixXd contract_xx(int t, const VectorXd& v) const;
  MatrixXd contract_xu(int t, const VectorXd& v) const;
  MatrixXd contract_uu(int t, const VectorXd& v) const;
};

/// Supplies derivatives of dynamics and cost. Every field must be set; the
/// problem catalog wires either analytic closed forms or finite differences.
struct DerivativeProvider {
  // first order dynamics: fills fx, fu
  std::function<void(const VectorXd&, const VectorXd&, MatrixXd&, MatrixXd&)> dynamics_jac;
  // second order dynamics: fills fxx, fxu, fuu tensors
  std::function<void(const VectorXd&, const VectorXd&, std::vector<MatrixXd>&,
                     std::vector<MatrixXd>&, std::vector<MatrixXd>&)>
      dynamics_hess;
  // stage cost gradient and Hessian blocks
  std::function<void(const VectorXd&, const VectorXd&, int, VectorXd&, VectorXd&, MatrixXd&,
                     MatrixXd&, MatrixXd&)>
      cost_derivs;
  // terminal cost gradient and Hessian
  std::function<void(const VectorXd&, VectorXd&, MatrixXd&)> terminal_derivs;
};

struct ProblemMetadata {
  std::string name;
  double t_f = 0.0;      // horizon seconds, continuous problems only
  double dt = 0.0;       // Euler sub-step seconds
  double dt_hold = 0.0;  // zero-order control hold seconds
  VectorXd x_goal;       // target state (success criterion for feedback studies)
};

/// Immutable discrete-time optimal control problem over a finite horizon.
struct Problem {
  int n = 0;  // state dimension
  int m = 0;  // control dimension
  int T = 0;  // horizon steps
  VectorXd x0;
  std::function<VectorXd(const VectorXd&, const VectorXd&)> dynamics;
  std::function<double(const VectorXd&, const VectorXd&, int)> stage_cost;
  std::function<double(const VectorXd&)> terminal_cost;
  DerivativeProvider derivs;
  ProblemMetadata meta;

  void validate() const;
};

struct Trajectory {
  std::vector<VectorXd> states;    // T + 1
  std::vector<VectorXd> controls;  // T
  double cost = 0.0;
};

/// Open-loop rollout of a control sequence from problem.x0.
/// Throws NumericError at the first non-finite state.
Trajectory rollout(const Problem& problem, const std::vector<VectorXd>& controls);

enum class DerivOrder { First, Second };

/// Evaluates all derivative blocks along a nominal trajectory. Second-order
/// dynamics tensors are filled only when order == Second; iLQR never needs
/// them and they dominate the cost of this call on the larger benchmarks.
LocalModel linearize(const Problem& problem, const Trajectory& nominal,
                     DerivOrder order = DerivOrder::Second);

/// Cost of an explicit state/control sequence, re-evaluated term by term.
double evaluate_cost(const Problem& problem, const std::vector<VectorXd>& states,
                     const std::vector<VectorXd>& controls);

}  // namespace trajopt
