#include "doctest.h"
#include "test_util.hpp"
#include "trajopt/problems.hpp"
#include "trajopt/solvers.hpp"

using namespace trajopt;

namespace {

// one-step problem whose optimal control is large enough to overflow the
// dynamics at alpha = 1 but not at alpha = 0.5
Problem divergence_trap() {
  Problem p;
  p.n = 1;
  p.m = 1;
  p.T = 1;
  p.x0 = VectorXd::Constant(1, 1.0);
  p.dynamics = [](const VectorXd& x, const VectorXd& u) -> VectorXd {
    VectorXd out(1);
    out(0) = x(0) + u(0) + std::exp(std::pow(u(0), 4)) - 1.0;
    return out;
  };
  p.stage_cost = [](const VectorXd&, const VectorXd& u, int) {
    return 0.5 * u(0) * u(0) - 10.0 * u(0);
  };
  p.terminal_cost = [](const VectorXd&) { return 0.0; };
  p.derivs = fd_provider(p);
  p.meta.x_goal = VectorXd::Zero(1);
  return p;
}

}  // namespace

TEST_CASE("method and scheme names parse and round-trip") {
  CHECK(method_from_string("ilqr") == Method::ILQR);
  CHECK(method_from_string("ddp") == Method::DDP);
  CHECK(method_from_string("sn") == Method::SN);
  CHECK(method_from_string("mixed") == Method::Mixed);
  CHECK(method_from_string("hybrid") == Method::Hybrid);
  CHECK_THROWS_AS(method_from_string("newton"), InputError);
  CHECK(to_string(Method::Mixed) == "mixed");
  CHECK(reg_scheme_from_string("none") == RegScheme::None);
  CHECK(reg_scheme_from_string("lm_shift") == RegScheme::LmShift);
  CHECK(reg_scheme_from_string("adaptive_shift") == RegScheme::AdaptiveShift);
  CHECK_THROWS_AS(reg_scheme_from_string("trust"), InputError);
}

TEST_CASE("regularization shift rules") {
  RegConfig cfg;
  RegState state;
  MatrixXd quu = Eigen::Vector2d(2.0, 3.0).asDiagonal();
  SUBCASE("already positive definite passes through under lm_shift") {
    cfg.scheme = RegScheme::LmShift;
    auto [out, shift] = regularize_quu(quu, cfg, state);
    CHECK(shift == 0.0);
    CHECK((out - quu).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("lm_shift lifts an indefinite matrix to the floor") {
    cfg.scheme = RegScheme::LmShift;
    MatrixXd bad = Eigen::Vector2d(-1.0, 3.0).asDiagonal();
    auto [out, shift] = regularize_quu(bad, cfg, state);
    CHECK(shift == doctest::Approx(1.0 + 1e-6).epsilon(1e-12));
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(out, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
  SUBCASE("none passes through untouched") {
    MatrixXd bad = Eigen::Vector2d(-1.0, 3.0).asDiagonal();
    auto [out, shift] = regularize_quu(bad, cfg, state);
    CHECK(shift == 0.0);
    CHECK((out - bad).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("adaptive adds the persistent multiplier unconditionally") {
    cfg.scheme = RegScheme::AdaptiveShift;
    state.rho = 0.5;
    auto [out, shift] = regularize_quu(quu, cfg, state);
    CHECK(shift == 0.5);
    CHECK((out - quu - 0.5 * MatrixXd::Identity(2, 2)).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("linear-quadratic backward passes coincide across methods") {
  auto prob = build_benchmark(default_spec("lqr_test"));
  auto traj = rollout(prob, std::vector<VectorXd>(prob.T, VectorXd::Zero(1)));
  auto model = linearize(prob, traj, DerivOrder::Second);
  auto si = backward_pass(model, Method::ILQR);
  auto sd = backward_pass(model, Method::DDP);
  auto sn = backward_pass(model, Method::SN);
  for (int t = 0; t < prob.T; ++t) {
    CHECK((si.k[t] - sd.k[t]).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((si.k[t] - sn.k[t]).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((si.K[t] - sd.K[t]).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((si.K[t] - sn.K[t]).lpNorm<Eigen::Infinity>() == 0.0);
  }
  for (int t = 0; t <= prob.T; ++t) {
    CHECK((si.S[t] - sd.S[t]).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((si.S[t] - sn.S[t]).lpNorm<Eigen::Infinity>() == 0.0);
  }
  // transversality
  CHECK((si.S[prob.T] - model.terminal_cxx).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((si.v[prob.T] - model.terminal_cx).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((sn.lambda[prob.T] - model.terminal_cx).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("stagewise-Newton multipliers satisfy the adjoint recursion") {
  auto prob = testutil::random_instance(41);
  auto u = testutil::random_nominal(prob, 41);
  auto traj = rollout(prob, u);
  auto model = linearize(prob, traj, DerivOrder::Second);
  auto sch = backward_pass(model, Method::SN);
  VectorXd lam = model.terminal_cx;
  for (int t = prob.T - 1; t >= 0; --t) {
    lam = model.steps[t].cx + model.steps[t].fx.transpose() * lam;
    CHECK((sch.lambda[t] - lam).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("expected reduction formula") {
  GainSchedule g;
  g.reduction_sum = 1.0;  // a single step with Q_u = 2, Q_uu = 4: 2 * (1/4) * 2
  CHECK(expected_reduction(g, 0.0) == 0.0);
  CHECK(expected_reduction(g, 1.0) == -0.5);
  CHECK(expected_reduction(g, 0.5) == doctest::Approx(-0.375).epsilon(1e-15));
}

TEST_CASE("forward passes at alpha = 0 reproduce the nominal") {
  auto prob = build_benchmark(default_spec("pendulum"));
  auto u = random_controls(prob, 2, 1.0);
  auto traj = rollout(prob, u);
  auto model = linearize(prob, traj, DerivOrder::Second);
  auto sch = backward_pass(model, Method::DDP);
  auto fn = forward_nonlinear(prob, traj, sch, 0.0);
  REQUIRE(fn.has_value());
  CHECK(fn->cost == doctest::Approx(traj.cost).epsilon(1e-14));
  for (int t = 0; t < prob.T; ++t)
    CHECK((fn->controls[t] - traj.controls[t]).lpNorm<Eigen::Infinity>() == 0.0);
  auto fl = forward_linearized(prob, traj, model, sch, 0.0);
  REQUIRE(fl.has_value());
  for (int t = 0; t < prob.T; ++t)
    CHECK((fl->first[t] - traj.controls[t]).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("quadratic model is exact on linear dynamics") {
  auto prob = build_benchmark(default_spec("lqr_test"));
  auto u = random_controls(prob, 6, 0.4);
  auto traj = rollout(prob, u);
  auto model = linearize(prob, traj, DerivOrder::Second);
  for (Method m : {Method::ILQR, Method::DDP, Method::SN}) {
    CAPTURE(to_string(m));
    auto sch = backward_pass(model, m);
    for (double a : {0.25, 0.5, 1.0}) {
      auto cand = forward_nonlinear(prob, traj, sch, a);
      REQUIRE(cand.has_value());
      const double pred = expected_reduction(sch, a);
      const double act = cand->cost - traj.cost;
      CHECK(std::abs(act - pred) / std::abs(pred) < 1e-8);
    }
    // linearized forward produces the same controls when dynamics are linear
    auto fn = forward_nonlinear(prob, traj, sch, 0.7);
    auto fl = forward_linearized(prob, traj, model, sch, 0.7);
    for (int t = 0; t < prob.T; ++t)
      CHECK((fl->first[t] - fn->controls[t]).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("closed-loop deviation scales linearly in alpha at leading order") {
  auto prob = build_benchmark(default_spec("pendulum"));
  auto u = random_controls(prob, 3, 1.0);
  auto traj = rollout(prob, u);
  auto model = linearize(prob, traj, DerivOrder::First);
  auto sch = backward_pass(model, Method::ILQR);
  auto dev = [&](double a) {
    auto cand = forward_nonlinear(prob, traj, sch, a);
    double d = 0.0;
    for (int t = 0; t <= prob.T; ++t)
      d = std::max(d, (cand->states[t] - traj.states[t]).lpNorm<Eigen::Infinity>());
    return d;
  };
  CHECK(dev(0.02) / dev(0.01) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("line search accepts the full step on a quadratic problem") {
  auto prob = build_benchmark(default_spec("lqr_test"));
  auto traj = rollout(prob, std::vector<VectorXd>(prob.T, VectorXd::Zero(1)));
  auto model = linearize(prob, traj, DerivOrder::First);
  auto sch = backward_pass(model, Method::ILQR);
  SolverConfig cfg;
  auto ls = line_search(prob, traj, model, sch, cfg, Method::ILQR);
  CHECK(ls.accepted);
  CHECK(ls.alpha == 1.0);
  CHECK(ls.backtracks == 0);
  CHECK(ls.dj_actual / ls.dj_pred == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("line search backtracks past a divergent candidate") {
  auto prob = divergence_trap();
  auto traj = rollout(prob, {VectorXd::Zero(1)});
  auto model = linearize(prob, traj, DerivOrder::First);
  auto sch = backward_pass(model, Method::ILQR);
  CHECK(sch.k[0](0) == doctest::Approx(10.0).epsilon(1e-6));
  CHECK_FALSE(forward_nonlinear(prob, traj, sch, 1.0).has_value());
  SolverConfig cfg;
  auto ls = line_search(prob, traj, model, sch, cfg, Method::ILQR);
  CHECK(ls.accepted);
  CHECK(ls.alpha == 0.5);
  CHECK(ls.backtracks == 1);
  CHECK(ls.dj_actual < 0.0);
}

TEST_CASE("solver converges in one accepted iteration on a quadratic problem") {
  auto prob = build_benchmark(default_spec("lqr_test"));
  auto u0 = random_controls(prob, 8, 1.0);
  for (Method m : {Method::ILQR, Method::DDP, Method::SN, Method::Mixed, Method::Hybrid}) {
    CAPTURE(to_string(m));
    SolverConfig cfg;
    cfg.method = m;
    auto rep = solve(prob, u0, cfg);
    CHECK(rep.status == SolveStatus::Converged);
    CHECK(rep.accepted_iterations() == 1);
    CHECK(rep.iterations[0].alpha == 1.0);
  }
}

TEST_CASE("ilqr with lm_shift descends monotonically") {
  for (const char* name : {"pendulum", "cartpole"}) {
    CAPTURE(name);
    auto prob = build_benchmark(default_spec(name));
    auto u0 = random_controls(prob, 5, default_u_scale(name));
    SolverConfig cfg;
    cfg.method = Method::ILQR;
    cfg.reg.scheme = RegScheme::LmShift;
    cfg.max_iters = 80;
    auto rep = solve(prob, u0, cfg);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& it : rep.iterations) {
      if (!it.accepted) continue;
      CHECK(it.J <= prev + 1e-9 * std::max(1.0, std::abs(prev)));
      prev = it.J + it.dj_actual;
    }
  }
}

TEST_CASE("ilqr value Hessians stay positive semidefinite on a convex-stage benchmark") {
  auto spec = default_spec("pendulum");
  auto prob = build_benchmark(spec);
  auto u0 = random_controls(prob, 1, 1.0);
  auto traj = rollout(prob, u0);
  auto model = linearize(prob, traj, DerivOrder::First);
  auto sch = backward_pass(model, Method::ILQR);
  for (int t = 0; t <= prob.T; ++t) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sch.S[t], Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
  CHECK(sch.min_quu_eig() > 0.0);
  CHECK(sch.reduction_sum >= 0.0);
}

TEST_CASE("quartic benchmark backward pass keeps Quu positive definite unregularized") {
  auto spec = default_spec("tp3");
  auto prob = build_benchmark(spec);
  auto u0 = starting_controls(spec, 1);
  auto traj = rollout(prob, u0);
  auto model = linearize(prob, traj, DerivOrder::First);
  auto sch = backward_pass(model, Method::ILQR);
  CHECK(sch.min_quu_eig() > 0.0);
  // last-step gain against direct assembly from the terminal expansion
  const int t = prob.T - 1;
  const auto& s = model.steps[t];
  MatrixXd quu = s.cuu + s.fu.transpose() * model.terminal_cxx * s.fu;
  VectorXd qu = s.cu + s.fu.transpose() * model.terminal_cx;
  VectorXd k = -quu.llt().solve(qu);
  CHECK((k - sch.k[t]).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("backward pass requires tensors for the methods that contract them") {
  auto prob = build_benchmark(default_spec("lqr_test"));
  auto traj = rollout(prob, std::vector<VectorXd>(prob.T, VectorXd::Zero(1)));
  auto first = linearize(prob, traj, DerivOrder::First);
  CHECK_THROWS_AS(backward_pass(first, Method::DDP), InputError);
  CHECK_THROWS_AS(backward_pass(first, Method::SN), InputError);
  CHECK_NOTHROW(backward_pass(first, Method::ILQR));
  CHECK_THROWS_AS(backward_pass(first, Method::Hybrid), InputError);
}

TEST_CASE("singular Quu without regularization fails with diagnostics") {
  // control never enters dynamics or cost: Quu = 0 at the last step
  Problem p;
  p.n = 1;
  p.m = 1;
  p.T = 2;
  p.x0 = VectorXd::Constant(1, 1.0);
  p.dynamics = [](const VectorXd& x, const VectorXd&) { return x; };
  p.stage_cost = [](const VectorXd& x, const VectorXd&, int) { return 0.5 * x(0) * x(0); };
  p.terminal_cost = [](const VectorXd& x) { return 0.5 * x(0) * x(0); };
  p.derivs = fd_provider(p);
  auto traj = rollout(p, std::vector<VectorXd>(2, VectorXd::Zero(1)));
  auto model = linearize(p, traj, DerivOrder::First);
  try {
    backward_pass(model, Method::ILQR);
    FAIL("expected BackwardPassError");
  } catch (const BackwardPassError& e) {
    CHECK(e.step == 1);
    CHECK(std::abs(e.min_eig) < 1e-9);
  }
}

TEST_CASE("solve reports divergence when the initial rollout overflows") {
  Problem p;
  p.n = 1;
  p.m = 1;
  p.T = 3;
  p.x0 = VectorXd::Constant(1, 1e200);
  p.dynamics = [](const VectorXd& x, const VectorXd&) -> VectorXd { return x * 1e200; };
  p.stage_cost = [](const VectorXd&, const VectorXd& u, int) { return u(0) * u(0); };
  p.terminal_cost = [](const VectorXd&) { return 0.0; };
  p.derivs = fd_provider(p);
  SolverConfig cfg;
  auto rep = solve(p, std::vector<VectorXd>(3, VectorXd::Zero(1)), cfg);
  CHECK(rep.status == SolveStatus::Diverged);
}

TEST_CASE("solve stalls when the model misreports the descent direction") {
  // provider lies about the control gradient's sign, so every predicted
  // descent step actually increases the cost and the line search exhausts
  auto prob = build_benchmark(default_spec("lqr_test"));
  auto honest = prob.derivs.cost_derivs;
  prob.derivs.cost_derivs = [honest](const VectorXd& x, const VectorXd& u, int t, VectorXd& cx,
                                     VectorXd& cu, MatrixXd& cxx, MatrixXd& cxu, MatrixXd& cuu) {
    honest(x, u, t, cx, cu, cxx, cxu, cuu);
    cu = -cu;
    cx = -cx;
  };
  prob.derivs.terminal_derivs = [](const VectorXd& x, VectorXd& cx, MatrixXd& cxx) {
    cx = -10.0 * x;
    cxx = 10.0 * MatrixXd::Identity(2, 2);
  };
  SolverConfig cfg;
  auto rep = solve(prob, random_controls(prob, 2, 1.0), cfg);
  CHECK(rep.status == SolveStatus::Stalled);
}

TEST_CASE("adaptive shift rises on failure and decays on success") {
  auto spec = default_spec("tp4");
  auto prob = build_benchmark(spec);
  SolverConfig cfg;
  cfg.method = Method::DDP;
  cfg.reg.scheme = RegScheme::AdaptiveShift;
  cfg.max_iters = 60;
  auto rep = solve(prob, starting_controls(spec, 1), cfg);
  CHECK(rep.status == SolveStatus::Converged);
  double max_shift = 0.0;
  for (const auto& it : rep.iterations) max_shift = std::max(max_shift, it.reg_shift);
  CHECK(max_shift > 0.0);
  // after the peak the shift is halved on each accepted step
  size_t peak = 0;
  for (size_t i = 0; i < rep.iterations.size(); ++i)
    if (rep.iterations[i].reg_shift == max_shift) peak = i;
  CHECK(peak + 1 < rep.iterations.size());
  CHECK(rep.iterations[peak + 1].reg_shift < max_shift);
}

TEST_CASE("hybrid records the switch iteration and matches ddp before it") {
  auto prob = build_benchmark(default_spec("cartpole"));
  auto u0 = random_controls(prob, 1, 0.1);
  SolverConfig cd;
  cd.method = Method::DDP;
  cd.max_iters = 60;
  auto rd = solve(prob, u0, cd);
  SolverConfig ch = cd;
  ch.method = Method::Hybrid;
  auto rh = solve(prob, u0, ch);
  REQUIRE(rh.hybrid_switch_iter > 0);
  for (int i = 0; i < rh.hybrid_switch_iter; ++i) {
    CHECK(rh.iterations[i].J == rd.iterations[i].J);
    CHECK(rh.iterations[i].alpha == rd.iterations[i].alpha);
  }
  CHECK(rh.iterations[rh.hybrid_switch_iter - 1].alpha < ch.alpha_switch);
}

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.backtrack_factor = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = SolverConfig{};
  cfg.alpha0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = SolverConfig{};
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}
