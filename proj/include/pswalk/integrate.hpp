#pragma once

#include <Eigen/Dense>

namespace pswalk {

// Classic fixed-step RK4 for xdot = f(x, t).
template <class F>
Eigen::VectorXd rk4_step(F&& f, const Eigen::VectorXd& x, double t, double h) {
  const Eigen::VectorXd k1 = f(x, t);
  const Eigen::VectorXd k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
  const Eigen::VectorXd k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
  const Eigen::VectorXd k4 = f(x + h * k3, t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace pswalk
