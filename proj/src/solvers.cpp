#include "trajopt/solvers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace trajopt {

Method method_from_string(const std::string& s) {
  if (s == "ilqr") return Method::ILQR;
  if (s == "ddp") return Method::DDP;
  if (s == "sn") return Method::SN;
  if (s == "mixed") return Method::Mixed;
  if (s == "hybrid") return Method::Hybrid;
  throw InputError("unknown method: " + s);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::ILQR: return "ilqr";
    case Method::DDP: return "ddp";
    case Method::SN: return "sn";
    case Method::Mixed: return "mixed";
    case Method::Hybrid: return "hybrid";
  }
  return "?";
}

RegScheme reg_scheme_from_string(const std::string& s) {
  if (s == "none") return RegScheme::None;
  if (s == "lm_shift") return RegScheme::LmShift;
  if (s == "adaptive_shift") return RegScheme::AdaptiveShift;
  throw InputError("unknown regularization scheme: " + s);
}

std::pair<MatrixXd, double> regularize_quu(const MatrixXd& quu, const RegConfig& cfg,
                                           const RegState& state) {
  switch (cfg.scheme) {
    case RegScheme::None: return {quu, 0.0};
    case RegScheme::LmShift: {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(quu, Eigen::EigenvaluesOnly);
      const double min_eig = es.eigenvalues().minCoeff();
      if (min_eig > cfg.eps_pd) return {quu, 0.0};
      const double shift = cfg.eps_pd - min_eig;
      return {quu + shift * MatrixXd::Identity(quu.rows(), quu.cols()), shift};
    }
    case RegScheme::AdaptiveShift:
      return {quu + state.rho * MatrixXd::Identity(quu.rows(), quu.cols()), state.rho};
  }
  return {quu, 0.0};
}

double GainSchedule::min_quu_eig() const {
  double m = std::numeric_limits<double>::infinity();
  for (double e : quu_min_eig) m = std::min(m, e);
  return m;
}

double GainSchedule::max_reg_shift() const {
  double m = 0.0;
  for (double s : reg_shift) m = std::max(m, s);
  return m;
}

namespace {

// Solves quu * X = rhs. PD factorization first. Without a shift scheme an
// indefinite-but-invertible Quu (unregularized DDP/SN) falls back to LDLT so
// the run can proceed and exhibit the indefiniteness; under a shift scheme a
// non-PD result after shifting is a failure, so the caller can grow the shift.
struct QuuSolver {
  Eigen::LLT<MatrixXd> llt;
  Eigen::LDLT<MatrixXd> ldlt;
  bool pd = false;

  QuuSolver(const MatrixXd& quu, int step, double min_eig, bool allow_indefinite) {
    llt.compute(quu);
    if (llt.info() == Eigen::Success) {
      pd = true;
      return;
    }
    if (!allow_indefinite) throw BackwardPassError(step, min_eig);
    ldlt.compute(quu);
    const double scale = std::max(1.0, quu.cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().cwiseAbs().minCoeff() < 1e-12 * scale)
      throw BackwardPassError(step, min_eig);
  }

  MatrixXd solve(const MatrixXd& rhs) const {
    if (pd) return llt.solve(rhs);
    return ldlt.solve(rhs);
  }
  VectorXd solve(const VectorXd& rhs) const {
    if (pd) return llt.solve(rhs);
    return ldlt.solve(rhs);
  }
};

}  // namespace

GainSchedule backward_pass(const LocalModel& model, Method method, const RegConfig& reg,
                           const RegState& state) {
  if (method != Method::ILQR && method != Method::DDP && method != Method::SN)
    throw InputError("backward_pass expects ilqr, ddp, or sn");
  const int T = static_cast<int>(model.steps.size());
  const bool needs_tensors = (method != Method::ILQR);
  if (needs_tensors && !model.has_dynamics_hessians)
    throw InputError("backward_pass: model lacks second-order dynamics tensors");

  GainSchedule g;
  g.k.resize(T);
  g.K.resize(T);
  g.S.resize(T + 1);
  g.v.resize(T + 1);
  g.quu_min_eig.resize(T);
  g.reg_shift.resize(T);
  g.S[T] = model.terminal_cxx;  // transversality
  g.v[T] = model.terminal_cx;
  if (method == Method::SN) {
    g.lambda.resize(T + 1);
    g.lambda[T] = model.terminal_cx;
  }

  for (int t = T - 1; t >= 0; --t) {
    const StepModel& s = model.steps[t];
    const MatrixXd& S_next = g.S[t + 1];
    const VectorXd& v_next = g.v[t + 1];

    VectorXd qx = s.cx + s.fx.transpose() * v_next;
    VectorXd qu = s.cu + s.fu.transpose() * v_next;
    MatrixXd qxx = s.cxx + s.fx.transpose() * S_next * s.fx;
    MatrixXd quu = s.cuu + s.fu.transpose() * S_next * s.fu;
    MatrixXd qux = s.cxu.transpose() + s.fu.transpose() * S_next * s.fx;
    if (needs_tensors) {
      const VectorXd& mult = (method == Method::SN) ? g.lambda[t + 1] : v_next;
      qxx += model.contract_xx(t, mult);
      quu += model.contract_uu(t, mult);
      qux += model.contract_xu(t, mult).transpose();
    }
    qxx = 0.5 * (qxx + qxx.transpose()).eval();
    quu = 0.5 * (quu + quu.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(quu, Eigen::EigenvaluesOnly);
    g.quu_min_eig[t] = es.eigenvalues().minCoeff();

    auto [quu_reg, shift] = regularize_quu(quu, reg, state);
    g.reg_shift[t] = shift;
    QuuSolver solver(quu_reg, t, g.quu_min_eig[t], reg.scheme == RegScheme::None);

    g.k[t] = -solver.solve(qu);
    g.K[t] = -solver.solve(qux);
    g.reduction_sum += qu.dot(-g.k[t]);  // qu' Quu^-1 qu

    g.v[t] = qx - qux.transpose() * solver.solve(qu);
    MatrixXd S_t = qxx - qux.transpose() * solver.solve(qux);
    g.S[t] = 0.5 * (S_t + S_t.transpose()).eval();
    if (method == Method::SN) g.lambda[t] = s.cx + s.fx.transpose() * g.lambda[t + 1];
  }
  return g;
}

double expected_reduction(const GainSchedule& schedule, double alpha) {
  return -(alpha - 0.5 * alpha * alpha) * schedule.reduction_sum;
}

std::optional<Trajectory> forward_nonlinear(const Problem& problem, const Trajectory& nominal,
                                            const GainSchedule& schedule, double alpha) {
  Trajectory traj;
  traj.states.resize(problem.T + 1);
  traj.controls.resize(problem.T);
  traj.states[0] = problem.x0;
  double cost = 0.0;
  for (int t = 0; t < problem.T; ++t) {
    const VectorXd dx = traj.states[t] - nominal.states[t];
    traj.controls[t] = nominal.controls[t] + alpha * schedule.k[t] + schedule.K[t] * dx;
    if (!traj.controls[t].allFinite()) return std::nullopt;
    cost += problem.stage_cost(traj.states[t], traj.controls[t], t);
    traj.states[t + 1] = problem.dynamics(traj.states[t], traj.controls[t]);
    if (!traj.states[t + 1].allFinite()) return std::nullopt;
  }
  cost += problem.terminal_cost(traj.states[problem.T]);
  if (!std::isfinite(cost)) return std::nullopt;
  traj.cost = cost;
  return traj;
}

std::optional<std::pair<std::vector<VectorXd>, Trajectory>> forward_linearized(
    const Problem& problem, const Trajectory& nominal, const LocalModel& model,
    const GainSchedule& schedule, double alpha) {
  std::vector<VectorXd> controls(problem.T);
  VectorXd dx_hat = VectorXd::Zero(problem.n);
  for (int t = 0; t < problem.T; ++t) {
    const VectorXd du = alpha * schedule.k[t] + schedule.K[t] * dx_hat;
    controls[t] = nominal.controls[t] + du;
    if (!controls[t].allFinite()) return std::nullopt;
    dx_hat = model.steps[t].fx * dx_hat + model.steps[t].fu * du;
  }
  try {
    Trajectory traj = rollout(problem, controls);
    if (!std::isfinite(traj.cost)) return std::nullopt;
    return std::make_pair(std::move(controls), std::move(traj));
  } catch (const NumericError&) {
    return std::nullopt;
  }
}

void SolverConfig::validate() const {
  if (backtrack_factor <= 0.0 || backtrack_factor >= 1.0)
    throw InputError("backtrack_factor must be in (0,1)");
  if (alpha0 <= 0.0 || alpha0 > 1.0) throw InputError("alpha0 must be in (0,1]");
  if (tol <= 0.0) throw InputError("tol must be positive");
  if (max_iters < 1) throw InputError("max_iters must be >= 1");
}

LineSearchResult line_search(const Problem& problem, const Trajectory& nominal,
                             const LocalModel& model, const GainSchedule& schedule,
                             const SolverConfig& config, Method forward_method) {
  LineSearchResult res;
  double alpha = config.alpha0;
  while (alpha >= config.alpha_min) {
    std::optional<Trajectory> candidate;
    if (forward_method == Method::SN) {
      auto fl = forward_linearized(problem, nominal, model, schedule, alpha);
      if (fl) candidate = std::move(fl->second);
    } else {
      candidate = forward_nonlinear(problem, nominal, schedule, alpha);
    }
    if (candidate) {
      const double dj_pred = expected_reduction(schedule, alpha);
      const double dj_actual = candidate->cost - nominal.cost;
      const bool ok =
          dj_pred == 0.0 || (dj_actual / dj_pred) >= config.accept_threshold;
      if (ok) {
        res.accepted = true;
        res.alpha = alpha;
        res.trajectory = std::move(*candidate);
        res.dj_pred = dj_pred;
        res.dj_actual = dj_actual;
        return res;
      }
    }
    alpha *= config.backtrack_factor;
    ++res.backtracks;
  }
  return res;  // exhausted: stalled
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIters: return "max_iters";
    case SolveStatus::Stalled: return "stalled";
    case SolveStatus::Diverged: return "diverged";
  }
  return "?";
}

int SolveReport::accepted_iterations() const {
  int c = 0;
  for (const auto& it : iterations) c += it.accepted ? 1 : 0;
  return c;
}

SolveReport solve(const Problem& problem, const std::vector<VectorXd>& init_controls,
                  const SolverConfig& config) {
  config.validate();
  SolveReport report;
  Trajectory traj;
  try {
    traj = rollout(problem, init_controls);
  } catch (const NumericError&) {
    report.status = SolveStatus::Diverged;
    return report;
  }

  RegState reg_state;
  bool hybrid_switched = false;
  const bool is_hybrid = (config.method == Method::Hybrid);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    Method backward_method;
    Method forward_method;
    switch (config.method) {
      case Method::ILQR: backward_method = Method::ILQR; forward_method = Method::ILQR; break;
      case Method::DDP: backward_method = Method::DDP; forward_method = Method::DDP; break;
      case Method::SN: backward_method = Method::SN; forward_method = Method::SN; break;
      case Method::Mixed: backward_method = Method::SN; forward_method = Method::DDP; break;
      case Method::Hybrid:
        backward_method = hybrid_switched ? Method::ILQR : Method::DDP;
        forward_method = Method::DDP;
        break;
    }

    const DerivOrder order =
        (backward_method == Method::ILQR) ? DerivOrder::First : DerivOrder::Second;
    LocalModel model;
    try {
      model = linearize(problem, traj, order);
    } catch (const NumericError&) {
      // derivatives overflowed on an extreme (but finite-cost) iterate
      report.status = SolveStatus::Diverged;
      report.final_trajectory = std::move(traj);
      return report;
    }

    IterationRecord rec;
    rec.iter = iter;
    rec.J = traj.cost;

    GainSchedule schedule;
    bool have_schedule = false;
    for (int attempt = 0; attempt < 40 && !have_schedule; ++attempt) {
      try {
        schedule = backward_pass(model, backward_method, config.reg, reg_state);
        have_schedule = true;
      } catch (const BackwardPassError&) {
        if (config.reg.scheme != RegScheme::AdaptiveShift) break;
        reg_state.rho = std::max(config.reg.rho_min, reg_state.rho * config.reg.rho_inc);
      }
    }
    if (!have_schedule) {
      report.iterations.push_back(rec);
      report.status = SolveStatus::Stalled;
      report.final_trajectory = std::move(traj);
      return report;
    }
    rec.min_quu_eig = schedule.min_quu_eig();
    rec.reg_shift = schedule.max_reg_shift();
    rec.dj_pred_full = expected_reduction(schedule, 1.0);

    // stationarity: the model predicts no meaningful reduction
    if (schedule.reduction_sum >= 0.0 && 0.5 * schedule.reduction_sum <= config.tol) {
      report.iterations.push_back(rec);
      report.status = SolveStatus::Converged;
      report.final_trajectory = std::move(traj);
      report.final_schedule = std::move(schedule);
      return report;
    }

    LineSearchResult ls = line_search(problem, traj, model, schedule, config, forward_method);
    rec.backtracks = ls.backtracks;
    if (!ls.accepted) {
      report.iterations.push_back(rec);
      if (config.reg.scheme == RegScheme::AdaptiveShift) {
        reg_state.rho = std::max(config.reg.rho_min, reg_state.rho * config.reg.rho_inc);
        continue;  // retry with a stronger shift
      }
      report.status = SolveStatus::Stalled;
      report.final_trajectory = std::move(traj);
      report.final_schedule = std::move(schedule);
      return report;
    }

    rec.accepted = true;
    rec.alpha = ls.alpha;
    rec.dj_pred = ls.dj_pred;
    rec.dj_actual = ls.dj_actual;
    report.iterations.push_back(rec);

    if (config.reg.scheme == RegScheme::AdaptiveShift) {
      reg_state.rho /= config.reg.rho_dec;
      if (reg_state.rho < config.reg.rho_min) reg_state.rho = 0.0;
    }
    if (is_hybrid && !hybrid_switched && ls.alpha < config.alpha_switch) {
      hybrid_switched = true;
      report.hybrid_switch_iter = iter + 1;
    }

    const double prev_cost = traj.cost;
    traj = std::move(ls.trajectory);
    report.final_schedule = std::move(schedule);

    if (std::abs(ls.dj_actual) <= config.tol * std::max(1.0, std::abs(prev_cost))) {
      report.status = SolveStatus::Converged;
      report.final_trajectory = std::move(traj);
      return report;
    }
  }
  report.status = SolveStatus::MaxIters;
  report.final_trajectory = std::move(traj);
  return report;
}

}  // namespace trajopt
