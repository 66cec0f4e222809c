#include "trajopt/fd.hpp"

#include <cmath>
#include <limits>

#include "trajopt/core.hpp"

namespace trajopt::fd {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_finite(const VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string("non-finite evaluation in ") + what, -1);
}
}  // namespace

double step_first(double coord) { return std::cbrt(kEps) * std::max(1.0, std::abs(coord)); }

double step_second(double coord) {
  return std::pow(kEps, 0.25) * std::max(1.0, std::abs(coord));
}

MatrixXd jacobian(const VectorFn& f, const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  VectorXd xp = x, xm = x;
  MatrixXd J;
  for (int j = 0; j < n; ++j) {
    const double h = step_first(x(j));
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    const VectorXd fp = f(xp), fm = f(xm);
    check_finite(fp, "fd::jacobian");
    check_finite(fm, "fd::jacobian");
    if (J.size() == 0) J.resize(fp.size(), n);
    J.col(j) = (fp - fm) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return J;
}

VectorXd gradient(const ScalarFn& f, const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  VectorXd g(n), xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    const double h = step_first(x(j));
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    g(j) = (f(xp) - f(xm)) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  check_finite(g, "fd::gradient");
  return g;
}

MatrixXd hessian(const ScalarFn& f, const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  MatrixXd H(n, n);
  const double f0 = f(x);
  VectorXd xw = x;
  for (int j = 0; j < n; ++j) {
    const double hj = step_second(x(j));
    for (int k = j; k < n; ++k) {
      const double hk = step_second(x(k));
      if (j == k) {
        xw(j) = x(j) + hj;
        const double fp = f(xw);
        xw(j) = x(j) - hj;
        const double fm = f(xw);
        xw(j) = x(j);
        H(j, j) = (fp - 2.0 * f0 + fm) / (hj * hj);
      } else {
        xw(j) = x(j) + hj;
        xw(k) = x(k) + hk;
        const double fpp = f(xw);
        xw(k) = x(k) - hk;
        const double fpm = f(xw);
        xw(j) = x(j) - hj;
        const double fmm = f(xw);
        xw(k) = x(k) + hk;
        const double fmp = f(xw);
        xw(j) = x(j);
        xw(k) = x(k);
        H(j, k) = H(k, j) = (fpp - fpm - fmp + fmm) / (4.0 * hj * hk);
      }
    }
  }
  if (!H.allFinite()) throw NumericError("non-finite evaluation in fd::hessian", -1);
  return H;
}

std::vector<MatrixXd> hessian_tensor(const VectorFn& f, const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  const VectorXd f0 = f(x);
  const int p = static_cast<int>(f0.size());
  std::vector<MatrixXd> out(p, MatrixXd::Zero(n, n));
  VectorXd xw = x;
  for (int j = 0; j < n; ++j) {
    const double hj = step_second(x(j));
    for (int k = j; k < n; ++k) {
      const double hk = step_second(x(k));
      VectorXd d(p);
      if (j == k) {
        xw(j) = x(j) + hj;
        const VectorXd fp = f(xw);
        xw(j) = x(j) - hj;
        const VectorXd fm = f(xw);
        xw(j) = x(j);
        d = (fp - 2.0 * f0 + fm) / (hj * hj);
      } else {
        xw(j) = x(j) + hj;
        xw(k) = x(k) + hk;
        const VectorXd fpp = f(xw);
        xw(k) = x(k) - hk;
        const VectorXd fpm = f(xw);
        xw(j) = x(j) - hj;
        const VectorXd fmm = f(xw);
        xw(k) = x(k) + hk;
        const VectorXd fmp = f(xw);
        xw(j) = x(j);
        xw(k) = x(k);
        d = (fpp - fpm - fmp + fmm) / (4.0 * hj * hk);
      }
      check_finite(d, "fd::hessian_tensor");
      for (int i = 0; i < p; ++i) {
        out[i](j, k) = d(i);
        out[i](k, j) = d(i);
      }
    }
  }
  return out;
}

std::vector<MatrixXd> mixed_tensor(
    const std::function<VectorXd(const VectorXd&, const VectorXd&)>& f, const VectorXd& x,
    const VectorXd& y) {
  const int nx = static_cast<int>(x.size());
  const int ny = static_cast<int>(y.size());
  const int p = static_cast<int>(f(x, y).size());
  std::vector<MatrixXd> out(p, MatrixXd::Zero(nx, ny));
  VectorXd xw = x, yw = y;
  for (int j = 0; j < nx; ++j) {
    const double hj = step_second(x(j));
    for (int k = 0; k < ny; ++k) {
      const double hk = step_second(y(k));
      xw(j) = x(j) + hj;
      yw(k) = y(k) + hk;
      const VectorXd fpp = f(xw, yw);
      yw(k) = y(k) - hk;
      const VectorXd fpm = f(xw, yw);
      xw(j) = x(j) - hj;
      const VectorXd fmm = f(xw, yw);
      yw(k) = y(k) + hk;
      const VectorXd fmp = f(xw, yw);
      xw(j) = x(j);
      yw(k) = y(k);
      const VectorXd d = (fpp - fpm - fmp + fmm) / (4.0 * hj * hk);
      check_finite(d, "fd::mixed_tensor");
      for (int i = 0; i < p; ++i) out[i](j, k) = d(i);
    }
  }
  return out;
}

}  // namespace trajopt::fd
