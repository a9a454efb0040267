#pragma once

#include <Eigen/Dense>

#include "pswalk/result.hpp"

// Small dense convex QP:  min 1/2 x'Hx + c'x  s.t.  A_eq x = b_eq,
// A_in x >= b_in. Primal active-set method sized for a dozen variables;
// pivoting is deterministic (lowest index), so identical inputs give
// identical solve paths.
namespace pswalk::qp {

struct Problem {
  Eigen::MatrixXd H;  // symmetric, positive definite on the feasible set
  Eigen::VectorXd c;
  Eigen::MatrixXd A_eq;  // 0 x n allowed
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;  // 0 x n allowed
  Eigen::VectorXd b_in;
};

struct Solution {
  Eigen::VectorXd x;
  Eigen::VectorXd eq_mult;  // stationarity: Hx + c = A_eq' eq_mult + A_in' in_mult
  Eigen::VectorXd in_mult;  // >= 0, zero off the active set
  int iterations = 0;
};

enum class QpError {
  StartInfeasible,  // x0 violates the constraints beyond tolerance
  IterationLimit,   // degenerate cycling guard tripped
};

// x0 must satisfy the equalities to ~1e-6 relative (the first full step
// restores them exactly) and the inequalities to 1e-9.
Result<Solution, QpError> solve(const Problem& p, const Eigen::VectorXd& x0);

// Feasible start for homogeneous-cone problems (b_in = 0): minimizes
// ||A_eq x - b_eq|| over the cone starting from x = 0 and reports whether
// the equalities are attainable. The residual test is done on the
// b_eq-normalized problem, so the outcome is scale-free.
struct ConeStart {
  Eigen::VectorXd x;
  bool equalities_met = false;
};
ConeStart cone_feasible_start(const Eigen::MatrixXd& A_eq,
                              const Eigen::VectorXd& b_eq,
                              const Eigen::MatrixXd& A_in);

}  // namespace pswalk::qp
