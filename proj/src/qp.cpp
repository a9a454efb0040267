#include "pswalk/qp.hpp"

#include <algorithm>
#include <vector>

namespace pswalk::qp {

namespace {

// Equality-constrained subproblem: minimize the quadratic subject to the
// permanent equalities plus the working rows, all treated as equalities.
// Returns x and the multipliers in the caller's sign convention
// (Hx + c = rows' * mult).
struct EqpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd mult;
};

EqpResult solve_eqp(const Problem& p, const std::vector<int>& working) {
  const int n = static_cast<int>(p.H.rows());
  const int me = static_cast<int>(p.A_eq.rows());
  const int mw = static_cast<int>(working.size());
  Eigen::MatrixXd rows(me + mw, n);
  Eigen::VectorXd rhs(me + mw);
  if (me > 0) {
    rows.topRows(me) = p.A_eq;
    rhs.head(me) = p.b_eq;
  }
  for (int k = 0; k < mw; ++k) {
    rows.row(me + k) = p.A_in.row(working[k]);
    rhs[me + k] = p.b_in[working[k]];
  }
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + me + mw, n + me + mw);
  kkt.topLeftCorner(n, n) = p.H;
  kkt.topRightCorner(n, me + mw) = rows.transpose();
  kkt.bottomLeftCorner(me + mw, n) = rows;
  Eigen::VectorXd full_rhs(n + me + mw);
  full_rhs << -p.c, rhs;
  const Eigen::VectorXd sol = kkt.fullPivLu().solve(full_rhs);
  // KKT stationarity is Hx + rows' mu = -c, so flip the sign once here.
  return {sol.head(n), -sol.tail(me + mw)};
}

}  // namespace

Result<Solution, QpError> solve(const Problem& p, const Eigen::VectorXd& x0) {
  const int me = static_cast<int>(p.A_eq.rows());
  const int mi = static_cast<int>(p.A_in.rows());

  if (me > 0) {
    const double viol = (p.A_eq * x0 - p.b_eq).cwiseAbs().maxCoeff();
    if (viol > 1e-6 * (1.0 + p.b_eq.cwiseAbs().maxCoeff()))
      return QpError::StartInfeasible;
  }
  if (mi > 0) {
    const double scale =
        1.0 + x0.cwiseAbs().maxCoeff() + p.b_in.cwiseAbs().maxCoeff();
    if (((p.A_in * x0 - p.b_in).array() < -1e-9 * scale).any())
      return QpError::StartInfeasible;
  }

  Eigen::VectorXd x = x0;
  std::vector<int> working;
  const int limit = 50 * (mi + me + 2);
  for (int iter = 0; iter < limit; ++iter) {
    const EqpResult eqp = solve_eqp(p, working);
    const Eigen::VectorXd step = eqp.x - x;

    if (step.cwiseAbs().maxCoeff() < 1e-11 * (1.0 + x.cwiseAbs().maxCoeff())) {
      // Stationary on the working set; release the lowest-index constraint
      // held by a negative multiplier, or declare optimality.
      int release = -1;
      for (int k = 0; k < static_cast<int>(working.size()); ++k) {
        if (eqp.mult[me + k] < -1e-9 &&
            (release < 0 || working[k] < working[release]))
          release = k;
      }
      if (release < 0) {
        Solution s;
        s.x = x;
        s.eq_mult = eqp.mult.head(me);
        s.in_mult = Eigen::VectorXd::Zero(mi);
        for (int k = 0; k < static_cast<int>(working.size()); ++k)
          s.in_mult[working[k]] = std::max(0.0, eqp.mult[me + k]);
        s.iterations = iter;
        return s;
      }
      working.erase(working.begin() + release);
      continue;
    }

    // Ratio test against inequalities outside the working set.
    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < mi; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end())
        continue;
      const double descent = p.A_in.row(i).dot(step);
      if (descent >= -1e-13) continue;
      const double slack = p.A_in.row(i).dot(x) - p.b_in[i];
      const double a = std::max(0.0, slack / (-descent));
      if (a < alpha - 1e-14 || (a < alpha + 1e-14 && blocking >= 0 &&
                                i < blocking)) {
        alpha = std::min(a, 1.0);
        blocking = i;
      }
    }
    x += alpha * step;
    if (blocking >= 0 && alpha < 1.0) {
      working.push_back(blocking);
      std::sort(working.begin(), working.end());
    }
  }
  return QpError::IterationLimit;
}

ConeStart cone_feasible_start(const Eigen::MatrixXd& A_eq,
                              const Eigen::VectorXd& b_eq,
                              const Eigen::MatrixXd& A_in) {
  const int n = static_cast<int>(A_eq.cols());
  const double scale = std::max(1.0, b_eq.cwiseAbs().maxCoeff());
  Problem p;
  // Least-squares the normalized equalities with a tiny ridge so H stays
  // positive definite; the cone is homogeneous so the scaling is undone at
  // the end without leaving it.
  p.H = 2.0 * A_eq.transpose() * A_eq +
        1e-10 * Eigen::MatrixXd::Identity(n, n);
  p.c = -2.0 * A_eq.transpose() * (b_eq / scale);
  p.A_eq.resize(0, n);
  p.b_eq.resize(0);
  p.A_in = A_in;
  p.b_in = Eigen::VectorXd::Zero(A_in.rows());
  const auto sol = solve(p, Eigen::VectorXd::Zero(n));
  ConeStart out;
  if (!sol.ok()) {
    out.x = Eigen::VectorXd::Zero(n);
    return out;
  }
  out.x = scale * sol.value().x;
  out.equalities_met =
      (A_eq * sol.value().x - b_eq / scale).cwiseAbs().maxCoeff() < 1e-6;
  return out;
}

}  // namespace pswalk::qp
