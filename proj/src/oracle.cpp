#include "trajopt/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace trajopt::oracle {

namespace {

// z layout: du_0 | dx_1 du_1 | ... | dx_{T-1} du_{T-1} | dx_T
int du_offset(int t, int n, int m) { return (t == 0) ? 0 : m + (t - 1) * (n + m) + n; }
int dx_offset(int t, int n, int m) { return m + (t - 1) * (n + m); }

void check_size(const Problem& problem) {
  if (problem.T * (problem.n + problem.m) > kMaxVariables)
    throw OracleError("oracle restricted to T*(n+m) <= " + std::to_string(kMaxVariables));
}

StackedStep solve_kkt(const Problem& problem, const DenseKKT& kkt) {
  const int n = problem.n, m = problem.m, T = problem.T;
  const int nz = T * (n + m), nc = T * n;
  MatrixXd M = MatrixXd::Zero(nz + nc, nz + nc);
  M.topLeftCorner(nz, nz) = kkt.H;
  M.topRightCorner(nz, nc) = kkt.A.transpose();
  M.bottomLeftCorner(nc, nz) = kkt.A;
  VectorXd rhs(nz + nc);
  rhs.head(nz) = -kkt.g;
  rhs.tail(nc) = -kkt.r;

  Eigen::FullPivLU<MatrixXd> lu(M);
  StackedStep step;
  {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      const double e = es.eigenvalues()(i);
      if (e > 1e-11 * scale)
        ++step.inertia_pos;
      else if (e < -1e-11 * scale)
        ++step.inertia_neg;
      else
        ++step.inertia_zero;
    }
  }
  if (!lu.isInvertible())
    throw OracleError("singular KKT system (inertia " + std::to_string(step.inertia_pos) + "+/" +
                      std::to_string(step.inertia_neg) + "-/" +
                      std::to_string(step.inertia_zero) + "0)");
  const VectorXd sol = lu.solve(rhs);

  step.dx.resize(T + 1);
  step.du.resize(T);
  step.multipliers.resize(T);
  step.dx[0] = VectorXd::Zero(n);
  for (int t = 0; t < T; ++t) {
    step.du[t] = sol.segment(du_offset(t, n, m), m);
    if (t >= 1) step.dx[t] = sol.segment(dx_offset(t, n, m), n);
    step.multipliers[t] = sol.segment(nz + t * n, n);
  }
  step.dx[T] = sol.segment(dx_offset(T, n, m), n);
  return step;
}

}  // namespace

DenseKKT assemble(const Problem& problem, const LocalModel& model,
                  const std::vector<VectorXd>& lambda_bar) {
  check_size(problem);
  const int n = problem.n, m = problem.m, T = problem.T;
  const int nz = T * (n + m), nc = T * n;
  DenseKKT kkt;
  kkt.H = MatrixXd::Zero(nz, nz);
  kkt.A = MatrixXd::Zero(nc, nz);
  kkt.g = VectorXd::Zero(nz);
  kkt.r = VectorXd::Zero(nc);  // nominal assumed rollout-feasible
  const bool newton = !lambda_bar.empty();
  if (newton && static_cast<int>(lambda_bar.size()) != T)
    throw OracleError("lambda_bar must have T entries");

  for (int t = 0; t < T; ++t) {
    const StepModel& s = model.steps[t];
    const int ou = du_offset(t, n, m);
    kkt.g.segment(ou, m) = s.cu;
    kkt.H.block(ou, ou, m, m) = s.cuu;
    if (newton) kkt.H.block(ou, ou, m, m) += model.contract_uu(t, lambda_bar[t]);
    if (t >= 1) {
      const int ox = dx_offset(t, n, m);
      kkt.g.segment(ox, n) = s.cx;
      kkt.H.block(ox, ox, n, n) = s.cxx;
      kkt.H.block(ox, ou, n, m) = s.cxu;
      kkt.H.block(ou, ox, m, n) = s.cxu.transpose();
      if (newton) {
        kkt.H.block(ox, ox, n, n) += model.contract_xx(t, lambda_bar[t]);
        const MatrixXd cross = model.contract_xu(t, lambda_bar[t]);
        kkt.H.block(ox, ou, n, m) += cross;
        kkt.H.block(ou, ox, m, n) += cross.transpose();
      }
    }
    // constraint block t: dx_{t+1} - fx dx_t - fu du_t = 0
    const int onext = dx_offset(t + 1, n, m);
    kkt.A.block(t * n, onext, n, n) = MatrixXd::Identity(n, n);
    kkt.A.block(t * n, ou, n, m) = -s.fu;
    if (t >= 1) kkt.A.block(t * n, dx_offset(t, n, m), n, n) = -s.fx;
  }
  const int oT = dx_offset(T, n, m);
  kkt.g.segment(oT, n) = model.terminal_cx;
  kkt.H.block(oT, oT, n, n) = model.terminal_cxx;
  kkt.H = 0.5 * (kkt.H + kkt.H.transpose()).eval();
  return kkt;
}

StackedStep dense_gauss_newton_step(const Problem& problem, const Trajectory& nominal) {
  const LocalModel model = linearize(problem, nominal, DerivOrder::First);
  return solve_kkt(problem, assemble(problem, model));
}

StackedStep dense_newton_kkt_step(const Problem& problem, const Trajectory& nominal,
                                  const std::vector<VectorXd>& lambda_bar) {
  const LocalModel model = linearize(problem, nominal, DerivOrder::Second);
  return solve_kkt(problem, assemble(problem, model, lambda_bar));
}

std::vector<VectorXd> gauss_newton_nullspace(const Problem& problem, const Trajectory& nominal) {
  check_size(problem);
  const int n = problem.n, m = problem.m, T = problem.T;
  const LocalModel model = linearize(problem, nominal, DerivOrder::First);
  const DenseKKT kkt = assemble(problem, model);

  // Z maps stacked controls to the full decision vector through the
  // linearized dynamics; the QP reduces to an unconstrained solve on du.
  const int nz = T * (n + m);
  MatrixXd Z = MatrixXd::Zero(nz, T * m);
  MatrixXd Mx = MatrixXd::Zero(n, T * m);  // dx_t as a function of all du
  for (int t = 0; t < T; ++t) {
    if (t >= 1) Z.block(dx_offset(t, n, m), 0, n, T * m) = Mx;
    Z.block(du_offset(t, n, m), t * m, m, m) = MatrixXd::Identity(m, m);
    Mx = model.steps[t].fx * Mx;
    Mx.block(0, t * m, n, m) += model.steps[t].fu;
  }
  Z.block(dx_offset(T, n, m), 0, n, T * m) = Mx;

  const MatrixXd Hr = Z.transpose() * kkt.H * Z;
  const VectorXd gr = Z.transpose() * kkt.g;
  Eigen::LDLT<MatrixXd> ldlt(Hr);
  if (ldlt.info() != Eigen::Success) throw OracleError("degenerate reduced Hessian");
  const VectorXd du = ldlt.solve(-gr);

  std::vector<VectorXd> out(T);
  for (int t = 0; t < T; ++t) out[t] = du.segment(t * m, m);
  return out;
}

double kkt_residual(const DenseKKT& kkt, const StackedStep& step, const Problem& problem) {
  const int n = problem.n, m = problem.m, T = problem.T;
  const int nz = T * (n + m), nc = T * n;
  VectorXd z(nz), lam(nc);
  for (int t = 0; t < T; ++t) {
    z.segment(du_offset(t, n, m), m) = step.du[t];
    if (t >= 1) z.segment(dx_offset(t, n, m), n) = step.dx[t];
    lam.segment(t * n, n) = step.multipliers[t];
  }
  z.segment(dx_offset(T, n, m), n) = step.dx[T];
  const double stat = (kkt.H * z + kkt.A.transpose() * lam + kkt.g).lpNorm<Eigen::Infinity>();
  const double feas = (kkt.A * z + kkt.r).lpNorm<Eigen::Infinity>();
  return std::max(stat, feas);
}

}  // namespace trajopt::oracle
