#pragma once

#include "trajopt/core.hpp"

namespace trajopt::oracle {

// Dense reference solvers for small horizons. The decision vector stacks
// z = (du_0, dx_1, du_1, ..., dx_{T-1}, du_{T-1}, dx_T); dx_0 = 0 is
// eliminated. Constraint row block t enforces the linearized dynamics
// dx_{t+1} = fx_t dx_t + fu_t du_t and carries multiplier lambda_{t+1}.

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Hard cap on T*(n+m): these solvers exist for verification, not scale.
constexpr int kMaxVariables = 200;

struct DenseKKT {
  MatrixXd H;  // Lagrangian (or cost-only) Hessian over z
  MatrixXd A;  // stacked linearized-dynamics Jacobian
  VectorXd g;  // stacked cost gradient
  VectorXd r;  // constraint residual (zero at a feasible nominal)
};

struct StackedStep {
  std::vector<VectorXd> dx;  // T+1, dx[0] = 0
  std::vector<VectorXd> du;  // T
  std::vector<VectorXd> multipliers;  // T entries: lambda_1..lambda_T
  // inertia of the KKT matrix (positive, negative, zero eigenvalue counts)
  int inertia_pos = 0, inertia_neg = 0, inertia_zero = 0;
};

/// Assembles the dense blocks at a feasible nominal. When lambda_bar is
/// non-empty (T entries, lambda_bar[t] multiplying constraint block t), the
/// Hessian includes the multiplier-contracted dynamics curvature.
DenseKKT assemble(const Problem& problem, const LocalModel& model,
                  const std::vector<VectorXd>& lambda_bar = {});

/// Gauss-Newton step: equality-constrained QP with the cost-only Hessian.
StackedStep dense_gauss_newton_step(const Problem& problem, const Trajectory& nominal);

/// Full Newton step: KKT system with the lambda_bar-contracted Lagrangian
/// Hessian; the returned multipliers are the updated ones.
StackedStep dense_newton_kkt_step(const Problem& problem, const Trajectory& nominal,
                                  const std::vector<VectorXd>& lambda_bar);

/// Independent cross-check: solves the same Gauss-Newton QP by eliminating
/// dx through the dynamics (nullspace method) instead of factorizing the KKT.
std::vector<VectorXd> gauss_newton_nullspace(const Problem& problem, const Trajectory& nominal);

/// Infinity norm of the KKT residual of a computed step.
double kkt_residual(const DenseKKT& kkt, const StackedStep& step, const Problem& problem);

}  // namespace trajopt::oracle
