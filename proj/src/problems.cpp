#include "trajopt/problems.hpp"

#include <cmath>

#include "trajopt/fd.hpp"
#include "trajopt/rng.hpp"

namespace trajopt {

namespace {

bool is_continuous(const std::string& name) {
  return name == "pendulum" || name == "cartpole" || name == "tp1" || name == "tp2";
}

// Continuous-time vector field with analytic Jacobians.
struct Field {
  std::function<VectorXd(const VectorXd&, const VectorXd&)> f;
  std::function<void(const VectorXd&, const VectorXd&, MatrixXd&, MatrixXd&)> jac;
};

Field pendulum_field(const BenchmarkSpec& s) {
  const double m = s.pend_mass, l = s.pend_length, g = s.pend_gravity, b = s.pend_damping;
  Field field;
  field.f = [m, l, g, b](const VectorXd& x, const VectorXd& u) {
    VectorXd dx(2);
    dx(0) = x(1);
    dx(1) = (u(0) - m * g * l * std::sin(x(0)) - b * x(1)) / (m * l * l);
    return dx;
  };
  field.jac = [m, l, g, b](const VectorXd& x, const VectorXd&, MatrixXd& A, MatrixXd& B) {
    A = MatrixXd::Zero(2, 2);
    B = MatrixXd::Zero(2, 1);
    A(0, 1) = 1.0;
    A(1, 0) = -g / l * std::cos(x(0));
    A(1, 1) = -b / (m * l * l);
    B(1, 0) = 1.0 / (m * l * l);
  };
  return field;
}

// Cart-pole with theta measured from the upright; state [x, xd, theta, thetad].
Field cartpole_field(const BenchmarkSpec& s) {
  const double mc = s.cart_mass, mp = s.pole_mass, l = s.pole_length, g = s.cart_gravity;
  Field field;
  field.f = [mc, mp, l, g](const VectorXd& x, const VectorXd& u) {
    const double st = std::sin(x(2)), ct = std::cos(x(2)), td = x(3), F = u(0);
    const double denom = mc + mp * st * st;
    VectorXd dx(4);
    dx(0) = x(1);
    dx(2) = td;
    dx(1) = (F + mp * st * (l * td * td - g * ct)) / denom;
    dx(3) = (g * st - dx(1) * ct) / l;
    return dx;
  };
  field.jac = [mc, mp, l, g](const VectorXd& x, const VectorXd& u, MatrixXd& A, MatrixXd& B) {
    const double st = std::sin(x(2)), ct = std::cos(x(2)), td = x(3), F = u(0);
    const double denom = mc + mp * st * st;
    const double num = F + mp * st * (l * td * td - g * ct);
    const double xdd = num / denom;
    // d(xdd)/dtheta and d(xdd)/dthetad
    const double dnum_dth = mp * ct * (l * td * td - g * ct) + mp * st * g * st;
    const double ddenom_dth = 2.0 * mp * st * ct;
    const double dxdd_dth = (dnum_dth * denom - num * ddenom_dth) / (denom * denom);
    const double dxdd_dtd = mp * st * 2.0 * l * td / denom;
    const double dxdd_dF = 1.0 / denom;
    A = MatrixXd::Zero(4, 4);
    B = MatrixXd::Zero(4, 1);
    A(0, 1) = 1.0;
    A(2, 3) = 1.0;
    A(1, 2) = dxdd_dth;
    A(1, 3) = dxdd_dtd;
    A(3, 2) = (g * ct - dxdd_dth * ct + xdd * st) / l;
    A(3, 3) = -dxdd_dtd * ct / l;
    B(1, 0) = dxdd_dF;
    B(3, 0) = -dxdd_dF * ct / l;
  };
  return field;
}

Field tp1_field() {
  Field field;
  field.f = [](const VectorXd& x, const VectorXd& u) {
    VectorXd dx(1);
    dx(0) = -x(0) * x(0) * x(0) + u(0);
    return dx;
  };
  field.jac = [](const VectorXd& x, const VectorXd&, MatrixXd& A, MatrixXd& B) {
    A = MatrixXd::Constant(1, 1, -3.0 * x(0) * x(0));
    B = MatrixXd::Constant(1, 1, 1.0);
  };
  return field;
}

Field tp2_field() {
  Field field;
  field.f = [](const VectorXd& x, const VectorXd& u) {
    VectorXd dx(1);
    dx(0) = -0.2 * x(0) + 10.0 * std::tanh(u(0));
    return dx;
  };
  field.jac = [](const VectorXd&, const VectorXd& u, MatrixXd& A, MatrixXd& B) {
    const double th = std::tanh(u(0));
    A = MatrixXd::Constant(1, 1, -0.2);
    B = MatrixXd::Constant(1, 1, 10.0 * (1.0 - th * th));
  };
  return field;
}

Field field_for(const BenchmarkSpec& s) {
  if (s.name == "pendulum") return pendulum_field(s);
  if (s.name == "cartpole") return cartpole_field(s);
  if (s.name == "tp1") return tp1_field();
  return tp2_field();
}

Problem build_continuous(const BenchmarkSpec& spec) {
  const Field field = field_for(spec);
  const int K = spec.substeps();
  const double dt = spec.dt;
  const int n = static_cast<int>(spec.x0.size());

  Problem p;
  p.n = n;
  p.m = 1;
  p.T = spec.T;
  p.x0 = spec.x0;
  p.meta = {spec.name, spec.t_f, spec.dt, spec.dt_hold, spec.xf};

  auto f = field.f;
  p.dynamics = [f, K, dt](const VectorXd& x, const VectorXd& u) {
    VectorXd xk = x;
    for (int k = 0; k < K; ++k) xk += dt * f(xk, u);
    return xk;
  };

  const double w = (spec.stage_weight == "hold") ? spec.dt_hold : 1.0;
  const MatrixXd Q = w * spec.q * MatrixXd::Identity(n, n);
  const MatrixXd R = w * spec.r * MatrixXd::Identity(1, 1);
  const MatrixXd Qf = spec.qf * MatrixXd::Identity(n, n);
  const VectorXd xf = spec.xf;
  p.stage_cost = [Q, R, xf](const VectorXd& x, const VectorXd& u, int) {
    const VectorXd e = x - xf;
    return 0.5 * (e.dot(Q * e) + u.dot(R * u));
  };
  p.terminal_cost = [Qf, xf](const VectorXd& x) {
    const VectorXd e = x - xf;
    return 0.5 * e.dot(Qf * e);
  };

  // Hold-map Jacobians by the chain rule through the Euler sub-steps.
  auto jac = field.jac;
  p.derivs.dynamics_jac = [f, jac, K, dt, n](const VectorXd& x, const VectorXd& u, MatrixXd& fx,
                                             MatrixXd& fu) {
    VectorXd xk = x;
    fx = MatrixXd::Identity(n, n);
    fu = MatrixXd::Zero(n, 1);
    MatrixXd A, B;
    for (int k = 0; k < K; ++k) {
      jac(xk, u, A, B);
      const MatrixXd step = MatrixXd::Identity(n, n) + dt * A;
      fu = step * fu + dt * B;
      fx = step * fx;
      xk += dt * f(xk, u);
    }
  };
  auto hold = p.dynamics;
  p.derivs.dynamics_hess = [hold](const VectorXd& x, const VectorXd& u,
                                  std::vector<MatrixXd>& fxx, std::vector<MatrixXd>& fxu,
                                  std::vector<MatrixXd>& fuu) {
    fxx = fd::hessian_tensor([&](const VectorXd& xx) { return hold(xx, u); }, x);
    fuu = fd::hessian_tensor([&](const VectorXd& uu) { return hold(x, uu); }, u);
    fxu = fd::mixed_tensor(hold, x, u);
  };
  p.derivs.cost_derivs = [Q, R, xf, n](const VectorXd& x, const VectorXd& u, int, VectorXd& cx,
                                       VectorXd& cu, MatrixXd& cxx, MatrixXd& cxu, MatrixXd& cuu) {
    cx = Q * (x - xf);
    cu = R * u;
    cxx = Q;
    cuu = R;
    cxu = MatrixXd::Zero(n, 1);
  };
  p.derivs.terminal_derivs = [Qf, xf](const VectorXd& x, VectorXd& cx, MatrixXd& cxx) {
    cx = Qf * (x - xf);
    cxx = Qf;
  };
  return p;
}

Problem build_tp3(const BenchmarkSpec& spec) {
  const int n = spec.tp_n, m = spec.tp_m;
  MatrixXd A = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 0.5;
    if (i + 1 < n) A(i, i + 1) = 0.25;
    if (i - 1 >= 0) A(i, i - 1) = -0.25;
  }
  MatrixXd B(n, m), C(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      B(i, j) = static_cast<double>((i + 1) - (j + 1)) / (m + n);
      C(i, j) = spec.tp_mu * static_cast<double>((i + 1) + (j + 1)) / (m + n);
    }
  const VectorXd gamma = VectorXd::Ones(n);

  Problem p;
  p.n = n;
  p.m = m;
  p.T = spec.T - 1;  // T table entries count states x_1..x_T
  p.x0 = VectorXd::Zero(n);
  p.meta.name = spec.name;
  p.meta.x_goal = VectorXd::Zero(n);

  p.dynamics = [A, B, C, gamma](const VectorXd& x, const VectorXd& u) {
    return VectorXd(A * x + B * u + (x.dot(C * u)) * gamma);
  };
  auto quartic = [](const VectorXd& v) {
    double s = 0.0;
    for (int i = 0; i < v.size(); ++i) {
      const double a = v(i) + 0.25;
      s += a * a * a * a;
    }
    return s;
  };
  p.stage_cost = [quartic](const VectorXd& x, const VectorXd& u, int) {
    return quartic(x) + quartic(u);
  };
  p.terminal_cost = [quartic](const VectorXd& x) { return quartic(x); };

  p.derivs.dynamics_jac = [A, B, C, gamma](const VectorXd& x, const VectorXd& u, MatrixXd& fx,
                                           MatrixXd& fu) {
    fx = A + gamma * (C * u).transpose();
    fu = B + gamma * (C.transpose() * x).transpose();
  };
  p.derivs.dynamics_hess = [C, gamma, n, m](const VectorXd&, const VectorXd&,
                                            std::vector<MatrixXd>& fxx,
                                            std::vector<MatrixXd>& fxu,
                                            std::vector<MatrixXd>& fuu) {
    fxx.assign(n, MatrixXd::Zero(n, n));
    fuu.assign(n, MatrixXd::Zero(m, m));
    fxu.resize(n);
    for (int i = 0; i < n; ++i) fxu[i] = gamma(i) * C;
  };
  auto quartic_derivs = [](const VectorXd& v, VectorXd& g, MatrixXd& H) {
    const int d = static_cast<int>(v.size());
    g.resize(d);
    H = MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      const double a = v(i) + 0.25;
      g(i) = 4.0 * a * a * a;
      H(i, i) = 12.0 * a * a;
    }
  };
  p.derivs.cost_derivs = [quartic_derivs, n, m](const VectorXd& x, const VectorXd& u, int,
                                                VectorXd& cx, VectorXd& cu, MatrixXd& cxx,
                                                MatrixXd& cxu, MatrixXd& cuu) {
    quartic_derivs(x, cx, cxx);
    quartic_derivs(u, cu, cuu);
    cxu = MatrixXd::Zero(n, m);
  };
  p.derivs.terminal_derivs = [quartic_derivs](const VectorXd& x, VectorXd& cx, MatrixXd& cxx) {
    quartic_derivs(x, cx, cxx);
  };
  return p;
}

Problem build_tp4(const BenchmarkSpec& spec) {
  const int n = spec.tp_n, m = spec.tp_m;
  MatrixXd F(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) F(i, j) = static_cast<double>((i + 1) + (j + 1)) / (2.0 * n);
  VectorXd x1(n);
  for (int i = 0; i < n; ++i) x1(i) = static_cast<double>(i + 1) / (2.0 * n);

  Problem p;
  p.n = n;
  p.m = m;
  p.T = spec.T - 1;
  p.x0 = x1;
  p.meta.name = spec.name;
  p.meta.x_goal = VectorXd::Zero(n);

  p.dynamics = [F](const VectorXd& x, const VectorXd& u) {
    return VectorXd(x.array().sin().matrix() + F * u.array().sin().matrix());
  };
  p.stage_cost = [m](const VectorXd& x, const VectorXd& u, int) {
    return x.squaredNorm() * (std::sin(u.squaredNorm() / m) + 1.0);
  };
  p.terminal_cost = [](const VectorXd& x) { return x.squaredNorm(); };

  p.derivs.dynamics_jac = [F](const VectorXd& x, const VectorXd& u, MatrixXd& fx, MatrixXd& fu) {
    fx = x.array().cos().matrix().asDiagonal();
    fu = F * u.array().cos().matrix().asDiagonal();
  };
  p.derivs.dynamics_hess = [F, n, m](const VectorXd& x, const VectorXd& u,
                                     std::vector<MatrixXd>& fxx, std::vector<MatrixXd>& fxu,
                                     std::vector<MatrixXd>& fuu) {
    fxx.assign(n, MatrixXd::Zero(n, n));
    fxu.assign(n, MatrixXd::Zero(n, m));
    fuu.assign(n, MatrixXd::Zero(m, m));
    for (int i = 0; i < n; ++i) {
      fxx[i](i, i) = -std::sin(x(i));
      for (int j = 0; j < m; ++j) fuu[i](j, j) = -F(i, j) * std::sin(u(j));
    }
  };
  p.derivs.cost_derivs = [n, m](const VectorXd& x, const VectorXd& u, int, VectorXd& cx,
                                VectorXd& cu, MatrixXd& cxx, MatrixXd& cxu, MatrixXd& cuu) {
    const double q = u.squaredNorm() / m;
    const double s = std::sin(q) + 1.0, c = std::cos(q);
    const double x2 = x.squaredNorm();
    cx = 2.0 * s * x;
    cu = x2 * c * (2.0 / m) * u;
    cxx = 2.0 * s * MatrixXd::Identity(n, n);
    cxu = (4.0 * c / m) * x * u.transpose();
    cuu = x2 * (2.0 / m) *
          (c * MatrixXd::Identity(m, m) - (2.0 * std::sin(q) / m) * u * u.transpose());
  };
  p.derivs.terminal_derivs = [n](const VectorXd& x, VectorXd& cx, MatrixXd& cxx) {
    cx = 2.0 * x;
    cxx = 2.0 * MatrixXd::Identity(n, n);
  };
  return p;
}

// Small discrete double-integrator LQR, used as the exactly-solvable case.
Problem build_lqr_test(const BenchmarkSpec& spec) {
  const int n = 2, m = 1;
  MatrixXd A(n, n), B(n, m);
  A << 1.0, 0.1, 0.0, 1.0;
  B << 0.0, 0.1;
  const MatrixXd Q = MatrixXd::Identity(n, n);
  const MatrixXd R = MatrixXd::Identity(m, m);
  const MatrixXd Qf = 10.0 * MatrixXd::Identity(n, n);

  Problem p;
  p.n = n;
  p.m = m;
  p.T = spec.T;
  p.x0 = (VectorXd(2) << 1.0, 0.0).finished();
  p.meta.name = spec.name;
  p.meta.x_goal = VectorXd::Zero(n);

  p.dynamics = [A, B](const VectorXd& x, const VectorXd& u) { return VectorXd(A * x + B * u); };
  p.stage_cost = [Q, R](const VectorXd& x, const VectorXd& u, int) {
    return 0.5 * (x.dot(Q * x) + u.dot(R * u));
  };
  p.terminal_cost = [Qf](const VectorXd& x) { return 0.5 * x.dot(Qf * x); };

  p.derivs.dynamics_jac = [A, B](const VectorXd&, const VectorXd&, MatrixXd& fx, MatrixXd& fu) {
    fx = A;
    fu = B;
  };
  p.derivs.dynamics_hess = [n, m](const VectorXd&, const VectorXd&, std::vector<MatrixXd>& fxx,
                                  std::vector<MatrixXd>& fxu, std::vector<MatrixXd>& fuu) {
    fxx.assign(n, MatrixXd::Zero(n, n));
    fxu.assign(n, MatrixXd::Zero(n, m));
    fuu.assign(n, MatrixXd::Zero(m, m));
  };
  p.derivs.cost_derivs = [Q, R, n, m](const VectorXd& x, const VectorXd& u, int, VectorXd& cx,
                                      VectorXd& cu, MatrixXd& cxx, MatrixXd& cxu, MatrixXd& cuu) {
    cx = Q * x;
    cu = R * u;
    cxx = Q;
    cuu = R;
    cxu = MatrixXd::Zero(n, m);
  };
  p.derivs.terminal_derivs = [Qf](const VectorXd& x, VectorXd& cx, MatrixXd& cxx) {
    cx = Qf * x;
    cxx = Qf;
  };
  return p;
}

}  // namespace

void BenchmarkSpec::validate() const {
  if (name == "lqr_test") {
    if (T < 1) throw InputError("T must be >= 1");
    return;
  }
  if (name != "pendulum" && name != "cartpole" && name != "tp1" && name != "tp2" &&
      name != "tp3" && name != "tp4")
    throw InputError("unknown benchmark name: " + name);
  if (is_continuous(name)) {
    if (T < 1) throw InputError("T must be >= 1");
    substeps();  // throws on non-integer ratio
    if (std::abs(T * dt_hold - t_f) > 1e-9 * std::max(1.0, t_f))
      throw InputError("T * dt_hold must equal t_f");
    if (r <= 0.0) throw InputError("R must be positive definite");
    if (q < 0.0 || qf < 0.0) throw InputError("Q, Q_f must be positive semidefinite");
    if (x0.size() == 0 || x0.size() != xf.size()) throw InputError("x0/xf dimension mismatch");
    if (stage_weight != "hold" && stage_weight != "none")
      throw InputError("stage_weight must be 'hold' or 'none'");
  } else {
    if (tp_n < 1 || tp_m < 1 || T < 2) throw InputError("tp problems need n,m >= 1 and T >= 2");
  }
}

int BenchmarkSpec::substeps() const {
  const double ratio = dt_hold / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6)
    throw InputError("dt_hold / dt must be a positive integer");
  return static_cast<int>(rounded);
}

void to_json(nlohmann::json& j, const BenchmarkSpec& spec) {
  j = nlohmann::json{{"schema_version", kConfigSchemaVersion},
                     {"name", spec.name},
                     {"stage_weight", spec.stage_weight}};
  if (is_continuous(spec.name)) {
    j["t_f"] = spec.t_f;
    j["dt"] = spec.dt;
    j["dt_hold"] = spec.dt_hold;
    j["T"] = spec.T;
    j["q"] = spec.q;
    j["r"] = spec.r;
    j["qf"] = spec.qf;
    j["x0"] = std::vector<double>(spec.x0.begin(), spec.x0.end());
    j["xf"] = std::vector<double>(spec.xf.begin(), spec.xf.end());
    if (spec.name == "pendulum")
      j["pendulum"] = {{"mass", spec.pend_mass},
                       {"length", spec.pend_length},
                       {"gravity", spec.pend_gravity},
                       {"damping", spec.pend_damping}};
    if (spec.name == "cartpole")
      j["cartpole"] = {{"cart_mass", spec.cart_mass},
                       {"pole_mass", spec.pole_mass},
                       {"pole_length", spec.pole_length},
                       {"gravity", spec.cart_gravity}};
  } else if (spec.name == "lqr_test") {
    j["T"] = spec.T;
  } else {
    j["T"] = spec.T;
    j["n"] = spec.tp_n;
    j["m"] = spec.tp_m;
    if (spec.name == "tp3") j["mu"] = spec.tp_mu;
  }
}

void from_json(const nlohmann::json& j, BenchmarkSpec& spec) {
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kConfigSchemaVersion)
    throw InputError("config schema_version missing or unsupported");
  spec = BenchmarkSpec{};
  j.at("name").get_to(spec.name);
  spec.stage_weight = j.value("stage_weight", std::string("hold"));
  j.at("T").get_to(spec.T);
  if (is_continuous(spec.name)) {
    j.at("t_f").get_to(spec.t_f);
    j.at("dt").get_to(spec.dt);
    j.at("dt_hold").get_to(spec.dt_hold);
    j.at("q").get_to(spec.q);
    j.at("r").get_to(spec.r);
    j.at("qf").get_to(spec.qf);
    const auto x0 = j.at("x0").get<std::vector<double>>();
    const auto xf = j.at("xf").get<std::vector<double>>();
    spec.x0 = Eigen::Map<const VectorXd>(x0.data(), static_cast<long>(x0.size()));
    spec.xf = Eigen::Map<const VectorXd>(xf.data(), static_cast<long>(xf.size()));
    if (spec.name == "pendulum" && j.contains("pendulum")) {
      const auto& p = j.at("pendulum");
      spec.pend_mass = p.value("mass", 1.0);
      spec.pend_length = p.value("length", 1.0);
      spec.pend_gravity = p.value("gravity", 9.81);
      spec.pend_damping = p.value("damping", 0.1);
    }
    if (spec.name == "cartpole" && j.contains("cartpole")) {
      const auto& p = j.at("cartpole");
      spec.cart_mass = p.value("cart_mass", 1.0);
      spec.pole_mass = p.value("pole_mass", 0.1);
      spec.pole_length = p.value("pole_length", 1.0);
      spec.cart_gravity = p.value("gravity", 9.81);
    }
  } else if (spec.name != "lqr_test") {
    j.at("n").get_to(spec.tp_n);
    j.at("m").get_to(spec.tp_m);
    if (spec.name == "tp3") j.at("mu").get_to(spec.tp_mu);
  }
  spec.validate();
}

BenchmarkSpec default_spec(const std::string& name) {
  BenchmarkSpec s;
  s.name = name;
  if (name == "pendulum") {
    s.t_f = 5.0;
    s.dt = 1e-3;
    s.dt_hold = 0.1;
    s.T = 50;
    s.q = 3.0;
    s.r = 3.0;
    s.qf = 30.0;
    s.x0 = VectorXd::Zero(2);
    s.xf = (VectorXd(2) << M_PI, 0.0).finished();
  } else if (name == "cartpole") {
    s.t_f = 3.0;
    s.dt = 1e-3;
    s.dt_hold = 0.1;
    s.T = 30;
    s.q = 10.0;
    s.r = 0.001;
    s.qf = 10000.0;
    s.x0 = (VectorXd(4) << 0.0, 0.0, M_PI, 0.0).finished();
    s.xf = VectorXd::Zero(4);
  } else if (name == "tp1") {
    s.t_f = 25.0;
    s.dt = 1e-5;
    s.dt_hold = 0.01;
    s.T = 2500;
    s.q = 2.0;
    s.r = 2.0;
    s.qf = 1e10;
    s.x0 = VectorXd::Constant(1, 1.0);
    s.xf = VectorXd::Constant(1, 1.5);
  } else if (name == "tp2") {
    s.t_f = 0.5;
    s.dt = 1e-4;
    s.dt_hold = 0.01;
    s.T = 50;
    s.q = 20.0;
    s.r = 2.0;
    s.qf = 20.0;
    s.x0 = VectorXd::Constant(1, 5.0);
    s.xf = VectorXd::Constant(1, 0.0);
  } else if (name == "tp3") {
    s.T = 20;
    s.tp_n = 100;
    s.tp_m = 50;
    s.tp_mu = 1.0 / 20.0;
  } else if (name == "tp4") {
    s.T = 100;
    s.tp_n = 100;
    s.tp_m = 10;
  } else if (name == "lqr_test") {
    s.T = 10;
  } else {
    throw InputError("unknown benchmark name: " + name);
  }
  s.validate();
  return s;
}

Problem build_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  Problem p = is_continuous(spec.name)   ? build_continuous(spec)
              : (spec.name == "tp3")     ? build_tp3(spec)
              : (spec.name == "lqr_test") ? build_lqr_test(spec)
                                          : build_tp4(spec);
  p.validate();
  return p;
}

std::vector<VectorXd> starting_controls(const BenchmarkSpec& spec, int point_id) {
  if (spec.name != "tp3" && spec.name != "tp4")
    throw InputError("starting_controls defined only for tp3/tp4");
  if (point_id < 1 || point_id > 5) throw InputError("starting point id must be in 1..5");
  const int T = spec.T - 1, m = spec.tp_m;
  std::vector<VectorXd> controls(T);
  for (int t = 0; t < T; ++t) {
    const bool odd = ((t + 1) % 2) == 1;  // table index runs from 1
    double v = 0.0;
    switch (point_id) {
      case 1: v = 0.0; break;
      case 2: v = 0.01; break;
      case 3: v = -0.01; break;
      case 4:
        // the tp3 and tp4 tables differ on even steps
        v = odd ? 0.01 : (spec.name == "tp3" ? -0.01 : 0.0);
        break;
      case 5: v = odd ? -0.01 : (spec.name == "tp3" ? 0.01 : 0.0); break;
    }
    controls[t] = VectorXd::Constant(m, v);
  }
  return controls;
}

std::vector<VectorXd> random_controls(const Problem& problem, uint64_t seed, double u_scale) {
  Rng rng = Rng::stream(seed, 0);
  std::vector<VectorXd> controls(problem.T);
  for (int t = 0; t < problem.T; ++t) {
    controls[t].resize(problem.m);
    for (int j = 0; j < problem.m; ++j) controls[t](j) = rng.uniform(-u_scale, u_scale);
  }
  return controls;
}

double default_u_scale(const std::string& name) {
  if (name == "tp3" || name == "tp4") return 0.1;
  return 1.0;
}

DerivativeProvider fd_provider(const Problem& problem) {
  DerivativeProvider d;
  auto dyn = problem.dynamics;
  auto stage = problem.stage_cost;
  auto term = problem.terminal_cost;
  d.dynamics_jac = [dyn](const VectorXd& x, const VectorXd& u, MatrixXd& fx, MatrixXd& fu) {
    fx = fd::jacobian([&](const VectorXd& xx) { return dyn(xx, u); }, x);
    fu = fd::jacobian([&](const VectorXd& uu) { return dyn(x, uu); }, u);
  };
  d.dynamics_hess = [dyn](const VectorXd& x, const VectorXd& u, std::vector<MatrixXd>& fxx,
                          std::vector<MatrixXd>& fxu, std::vector<MatrixXd>& fuu) {
    fxx = fd::hessian_tensor([&](const VectorXd& xx) { return dyn(xx, u); }, x);
    fuu = fd::hessian_tensor([&](const VectorXd& uu) { return dyn(x, uu); }, u);
    fxu = fd::mixed_tensor(dyn, x, u);
  };
  d.cost_derivs = [stage](const VectorXd& x, const VectorXd& u, int t, VectorXd& cx, VectorXd& cu,
                          MatrixXd& cxx, MatrixXd& cxu, MatrixXd& cuu) {
    cx = fd::gradient([&](const VectorXd& xx) { return stage(xx, u, t); }, x);
    cu = fd::gradient([&](const VectorXd& uu) { return stage(x, uu, t); }, u);
    cxx = fd::hessian([&](const VectorXd& xx) { return stage(xx, u, t); }, x);
    cuu = fd::hessian([&](const VectorXd& uu) { return stage(x, uu, t); }, u);
    auto gx = [stage, t](const VectorXd& xx, const VectorXd& uu) {
      return fd::gradient([&](const VectorXd& xxx) { return stage(xxx, uu, t); }, xx);
    };
    cxu = fd::jacobian([&, x](const VectorXd& uu) { return gx(x, uu); }, u);
  };
  d.terminal_derivs = [term](const VectorXd& x, VectorXd& cx, MatrixXd& cxx) {
    cx = fd::gradient(term, x);
    cxx = fd::hessian(term, x);
  };
  return d;
}

}  // namespace trajopt
