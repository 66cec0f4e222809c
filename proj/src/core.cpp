#include "trajopt/core.hpp"

namespace trajopt {

namespace {

MatrixXd contract(const std::vector<MatrixXd>& tensor, const VectorXd& v, int rows, int cols) {
  MatrixXd out = MatrixXd::Zero(rows, cols);
  for (int i = 0; i < static_cast<int>(tensor.size()); ++i) {
    out.noalias() += v(i) * tensor[i];
  }
  return out;
}

}  // namespace

MatrixXd LocalModel::contract_xx(int t, const VectorXd& v) const {
  const auto& s = steps[t];
  return contract(s.fxx, v, s.fx.rows(), s.fx.rows());
}

MatrixXd LocalModel::contract_xu(int t, const VectorXd& v) const {
  const auto& s = steps[t];
  return contract(s.fxu, v, s.fx.rows(), s.fu.cols());
}

MatrixXd LocalModel::contract_uu(int t, const VectorXd& v) const {
  const auto& s = steps[t];
  return contract(s.fuu, v, s.fu.cols(), s.fu.cols());
}

void Problem::validate() const {
  if (n < 1 || m < 1 || T < 1) throw InputError("problem dimensions must satisfy n,m,T >= 1");
  if (x0.size() != n) throw InputError("x0 dimension mismatch");
  if (!dynamics || !stage_cost || !terminal_cost) throw InputError("problem maps not set");
}

Trajectory rollout(const Problem& problem, const std::vector<VectorXd>& controls) {
  if (static_cast<int>(controls.size()) != problem.T)
    throw InputError("rollout: control sequence length != T");
  Trajectory traj;
  traj.states.resize(problem.T + 1);
  traj.controls = controls;
  traj.states[0] = problem.x0;
  double cost = 0.0;
  for (int t = 0; t < problem.T; ++t) {
    if (controls[t].size() != problem.m)
      throw InputError("rollout: control dimension mismatch at step " + std::to_string(t));
    cost += problem.stage_cost(traj.states[t], controls[t], t);
    traj.states[t + 1] = problem.dynamics(traj.states[t], controls[t]);
    if (!traj.states[t + 1].allFinite())
      throw NumericError("rollout diverged at step " + std::to_string(t), t);
  }
  cost += problem.terminal_cost(traj.states[problem.T]);
  traj.cost = cost;
  return traj;
}

double evaluate_cost(const Problem& problem, const std::vector<VectorXd>& states,
                     const std::vector<VectorXd>& controls) {
  double cost = 0.0;
  for (int t = 0; t < problem.T; ++t) cost += problem.stage_cost(states[t], controls[t], t);
  cost += problem.terminal_cost(states[problem.T]);
  return cost;
}

LocalModel linearize(const Problem& problem, const Trajectory& nominal, DerivOrder order) {
  LocalModel model;
  model.steps.resize(problem.T);
  model.has_dynamics_hessians = (order == DerivOrder::Second);
  for (int t = 0; t < problem.T; ++t) {
    StepModel& s = model.steps[t];
    const VectorXd& x = nominal.states[t];
    const VectorXd& u = nominal.controls[t];
    problem.derivs.dynamics_jac(x, u, s.fx, s.fu);
    if (!s.fx.allFinite() || !s.fu.allFinite())
      throw NumericError("non-finite dynamics Jacobian at step " + std::to_string(t), t);
    if (order == DerivOrder::Second) {
      problem.derivs.dynamics_hess(x, u, s.fxx, s.fxu, s.fuu);
      for (int i = 0; i < problem.n; ++i) {
        if (!s.fxx[i].allFinite() || !s.fxu[i].allFinite() || !s.fuu[i].allFinite())
          throw NumericError("non-finite dynamics Hessian at step " + std::to_string(t), t);
        // enforce symmetry in the repeated index pair
        s.fxx[i] = 0.5 * (s.fxx[i] + s.fxx[i].transpose()).eval();
        s.fuu[i] = 0.5 * (s.fuu[i] + s.fuu[i].transpose()).eval();
      }
    }
    problem.derivs.cost_derivs(x, u, t, s.cx, s.cu, s.cxx, s.cxu, s.cuu);
    if (!s.cx.allFinite() || !s.cu.allFinite() || !s.cxx.allFinite() || !s.cxu.allFinite() ||
        !s.cuu.allFinite())
      throw NumericError("non-finite cost derivative at step " + std::to_string(t), t);
    s.cxx = 0.5 * (s.cxx + s.cxx.transpose()).eval();
    s.cuu = 0.5 * (s.cuu + s.cuu.transpose()).eval();
  }
  problem.derivs.terminal_derivs(nominal.states[problem.T], model.terminal_cx,
                                 model.terminal_cxx);
  if (!model.terminal_cx.allFinite() || !model.terminal_cxx.allFinite())
    throw NumericError("non-finite terminal cost derivative", problem.T);
  model.terminal_cxx = 0.5 * (model.terminal_cxx + model.terminal_cxx.transpose()).eval();
  return model;
}

}  // namespace trajopt
