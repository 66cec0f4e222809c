#include "trajopt/feedback.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "trajopt/rng.hpp"

namespace trajopt {

FeedbackPolicy neighboring_gains(const Problem& problem, const Trajectory& optimal,
                                 double stationarity_tol) {
  const int T = problem.T;
  const LocalModel model = linearize(problem, optimal, DerivOrder::Second);

  // costates by the adjoint recursion from the terminal gradient
  std::vector<VectorXd> lambda(T + 1);
  lambda[T] = model.terminal_cx;
  for (int t = T - 1; t >= 0; --t)
    lambda[t] = model.steps[t].cx + model.steps[t].fx.transpose() * lambda[t + 1];

  // stationarity: Q_u = c_u + f_u' lambda_{t+1} must vanish at an optimum
  double max_qu = 0.0;
  for (int t = 0; t < T; ++t) {
    const VectorXd qu = model.steps[t].cu + model.steps[t].fu.transpose() * lambda[t + 1];
    max_qu = std::max(max_qu, qu.lpNorm<Eigen::Infinity>());
  }
  if (max_qu > stationarity_tol)
    throw InputError("neighboring_gains: trajectory not stationary (max ||Q_u|| = " +
                     std::to_string(max_qu) + ")");

  // second-variation LQR with Hamiltonian curvature blocks
  FeedbackPolicy policy;
  policy.nominal = optimal;
  policy.K.resize(T);
  policy.max_feedforward_norm = max_qu;
  MatrixXd S = model.terminal_cxx;
  for (int t = T - 1; t >= 0; --t) {
    const StepModel& s = model.steps[t];
    const MatrixXd Hxx = s.cxx + model.contract_xx(t, lambda[t + 1]);
    const MatrixXd Hux = s.cxu.transpose() + model.contract_xu(t, lambda[t + 1]).transpose();
    const MatrixXd Huu = s.cuu + model.contract_uu(t, lambda[t + 1]);
    const MatrixXd quu = Huu + s.fu.transpose() * S * s.fu;
    const MatrixXd qux = Hux + s.fu.transpose() * S * s.fx;
    Eigen::LDLT<MatrixXd> ldlt(quu);
    const double scale = std::max(1.0, quu.cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().cwiseAbs().minCoeff() < 1e-12 * scale)
      throw NumericError("neighboring_gains: singular Huu + fu'S fu at step " +
                             std::to_string(t),
                         t);
    policy.K[t] = ldlt.solve(qux);
    MatrixXd S_t = Hxx + s.fx.transpose() * S * s.fx - qux.transpose() * policy.K[t];
    S = 0.5 * (S_t + S_t.transpose()).eval();
  }
  return policy;
}

NoiseStudyResult monte_carlo_stabilize(const Problem& problem, const FeedbackPolicy& policy,
                                       double sigma, int trials, uint64_t seed) {
  if (sigma < 0.0 || trials < 1) throw InputError("monte_carlo_stabilize: bad sigma/trials");
  const int T = problem.T, n = problem.n;
  NoiseStudyResult result;
  result.sigma = sigma;
  result.trials = trials;
  result.seed = seed;
  std::vector<VectorXd> sum(T + 1, VectorXd::Zero(n));
  std::vector<VectorXd> sumsq(T + 1, VectorXd::Zero(n));

  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = Rng::stream(seed, static_cast<uint64_t>(trial));
    VectorXd x = problem.x0;
    bool finite = true;
    sum[0] += x;
    sumsq[0] += x.cwiseProduct(x);
    for (int t = 0; t < T; ++t) {
      const VectorXd u =
          policy.nominal.controls[t] - policy.K[t] * (x - policy.nominal.states[t]);
      VectorXd next = problem.dynamics(x, u);
      for (int i = 0; i < n; ++i) next(i) += sigma * rng.gaussian();
      if (!next.allFinite()) {
        finite = false;
        // freeze the remaining envelope contributions at the last finite state
        for (int s = t + 1; s <= T; ++s) {
          sum[s] += x;
          sumsq[s] += x.cwiseProduct(x);
        }
        break;
      }
      x = next;
      sum[t + 1] += x;
      sumsq[t + 1] += x.cwiseProduct(x);
    }
    if (finite && (x - problem.meta.x_goal).norm() < 0.1) ++result.successes;
  }
  result.success_rate = static_cast<double>(result.successes) / trials;
  result.mean.resize(T + 1);
  result.stddev.resize(T + 1);
  for (int t = 0; t <= T; ++t) {
    result.mean[t] = sum[t] / trials;
    const VectorXd var =
        (sumsq[t] / trials - result.mean[t].cwiseProduct(result.mean[t])).cwiseMax(0.0);
    result.stddev[t] = var.cwiseSqrt();
  }
  return result;
}

double PerturbationTable::max_recursive_error() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.err_recursive);
  return m;
}

std::vector<PerturbationTable> perturbation_study(const Problem& problem,
                                                  const Trajectory& nominal,
                                                  const LocalModel& model,
                                                  const GainSchedule& schedule,
                                                  const std::vector<double>& alphas) {
  if (!model.has_dynamics_hessians)
    throw InputError("perturbation_study needs second-order dynamics tensors");
  std::vector<PerturbationTable> tables;
  for (double alpha : alphas) {
    PerturbationTable table;
    table.alpha = alpha;
    VectorXd dx = VectorXd::Zero(problem.n);      // ground truth
    VectorXd dx_hat = VectorXd::Zero(problem.n);  // recursive linear
    for (int t = 0; t < problem.T; ++t) {
      const StepModel& s = model.steps[t];
      const VectorXd du = alpha * schedule.k[t] + schedule.K[t] * dx;
      const VectorXd du_hat = alpha * schedule.k[t] + schedule.K[t] * dx_hat;

      // (a) ground truth: full nonlinear difference with the true dx fed in
      const VectorXd truth = problem.dynamics(nominal.states[t] + dx, nominal.controls[t] + du) -
                             problem.dynamics(nominal.states[t], nominal.controls[t]);
      if (!truth.allFinite()) {
        table.truncated = true;
        break;
      }
      // (b) local linear, true dx
      const VectorXd lin = s.fx * dx + s.fu * du;
      // (c) local quadratic, true dx
      VectorXd quad = lin;
      for (int i = 0; i < problem.n; ++i)
        quad(i) += 0.5 * dx.dot(s.fxx[i] * dx) + dx.dot(s.fxu[i] * du) +
                   0.5 * du.dot(s.fuu[i] * du);
      // (d) recursive linear propagation
      const VectorXd rec = s.fx * dx_hat + s.fu * du_hat;

      PerturbationRow row;
      row.step = t + 1;
      row.err_linear = (lin - truth).norm();
      row.err_quadratic = (quad - truth).norm();
      row.err_recursive = (rec - truth).norm();
      table.rows.push_back(row);

      dx = truth;
      dx_hat = rec;
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

}  // namespace trajopt
