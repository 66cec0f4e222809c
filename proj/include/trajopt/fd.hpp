#pragma once

#include <Eigen/Dense>
#include <functional>

namespace trajopt::fd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using VectorFn = std::function<VectorXd(const VectorXd&)>;
using ScalarFn = std::function<double(const VectorXd&)>;

// Step sizes balance truncation against round-off: h1 ~ eps^(1/3) for central
// first differences, h2 ~ eps^(1/4) for second differences, each scaled by the
// coordinate magnitude.
double step_first(double coord);
double step_second(double coord);

/// Central-difference Jacobian of a vector map.
MatrixXd jacobian(const VectorFn& f, const VectorXd& x);

/// Central-difference gradient of a scalar map.
VectorXd gradient(const ScalarFn& f, const VectorXd& x);

/// Central-difference Hessian of a scalar map (symmetrized).
MatrixXd hessian(const ScalarFn& f, const VectorXd& x);

/// Second-derivative tensor of a vector map: out[i](j,k) = d2 f_i / dx_j dx_k.
std::vector<MatrixXd> hessian_tensor(const VectorFn& f, const VectorXd& x);

/// Mixed second derivatives of f(x, y): out[i](j,k) = d2 f_i / dx_j dy_k.
std::vector<MatrixXd> mixed_tensor(const std::function<VectorXd(const VectorXd&, const VectorXd&)>& f,
                                   const VectorXd& x, const VectorXd& y);

}  // namespace trajopt::fd
