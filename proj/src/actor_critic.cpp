#include "pswalk/actor_critic.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace pswalk::rl {

namespace {

inline Eigen::Vector3d to_vec(const lipm::ApexState& s) {
  return {s.y_apex, s.xdot_apex, s.ydot_apex};
}

// Membership bookkeeping for the sparse eligibility traces.
struct SupportSet {
  std::vector<int> items;
  std::vector<std::uint8_t> in;
  std::vector<int> touch;

  void init(int n) {
    in.assign(n, 0);
    touch.assign(n, 0);
    items.clear();
  }
  // Returns true when i is new to the support.
  bool add(int i, int now) {
    touch[i] = now;
    if (in[i]) return false;
    in[i] = 1;
    items.push_back(i);
    return true;
  }
};

// Steps after which a trace entry has decayed below 1e-15 of a fresh one and
// may be dropped. Entries at or above this age contribute nothing at double
// precision.
int prune_horizon(double lambda) {
  if (lambda <= 0.0) return 0;
  if (lambda >= 1.0 - 1e-12) return std::numeric_limits<int>::max();
  const double k = std::log(1e-15) / std::log(lambda);
  if (k > 1e9) return std::numeric_limits<int>::max();
  return static_cast<int>(std::ceil(k));
}

}  // namespace

Transition transition(const lipm::ApexState& s, const lipm::StepAction& a,
                      const lipm::LipmParams& params, const RewardSpec& reward,
                      const TerminalSpec& term) {
  Transition tr;
  auto plan = lipm::psp_step(s, a, params);
  if (!plan) {
    tr.terminal = true;
    tr.reward = reward.terminal_penalty;
    return tr;
  }
  tr.plan = plan.value();
  tr.plan_ok = true;
  const auto& p = tr.plan;
  if (p.t_apex <= term.t_apex_min || p.t_switch <= term.t_switch_min ||
      p.p_y <= term.py_lo || p.p_y >= term.py_hi) {
    tr.terminal = true;
    tr.reward = reward.terminal_penalty;
    return tr;
  }
  const double dv = reward.xdot_nom - a.xdot_apex_des;
  const double dp = reward.py_nom - p.p_y;
  tr.reward = -(dv * dv) - reward.w_py * (dp * dp) -
              a.ydot_apex_des * a.ydot_apex_des;
  tr.next = p.next_apex;
  return tr;
}

double probe_mean_std(const rbf::PolicyNet& policy, int per_axis) {
  const auto& g = policy.grid;
  double acc = 0.0;
  int count = 0;
  rbf::SparseFeatures f;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      for (int k = 0; k < per_axis; ++k) {
        const Eigen::Vector3d s{
            g.lo[0] + (g.hi[0] - g.lo[0]) * i / (per_axis - 1),
            g.lo[1] + (g.hi[1] - g.lo[1]) * j / (per_axis - 1),
            g.lo[2] + (g.hi[2] - g.lo[2]) * k / (per_axis - 1)};
        rbf::features_into(g, s, &f);
        const auto ev = rbf::policy_eval(policy, f);
        acc += ev.dist.std.sum();
        count += 3;
      }
  return acc / count;
}

Rollout evaluate_policy(const rbf::PolicyNet& policy,
                        const lipm::ApexState& start, int max_steps,
                        const lipm::LipmParams& params,
                        const TerminalSpec& term) {
  Rollout out;
  out.apexes.push_back(start);
  lipm::ApexState s = start;
  rbf::SparseFeatures f;
  const RewardSpec reward;  // reward values are irrelevant for survival
  for (int k = 0; k < max_steps; ++k) {
    rbf::features_into(policy.grid, to_vec(s), &f);
    const auto ev = rbf::policy_eval(policy, f);
    const lipm::StepAction a{ev.dist.mean[0], ev.dist.mean[1],
                             ev.dist.mean[2]};
    const Transition tr = transition(s, a, params, reward, term);
    if (tr.terminal) {
      out.fell = true;
      return out;
    }
    out.actions.push_back(a);
    out.plans.push_back(tr.plan);
    out.apexes.push_back(tr.next);
    s = tr.next;
    ++out.steps;
  }
  return out;
}

TrainSetup make_initial_nets(const rbf::RbfGrid& grid, const RewardSpec& reward) {
  TrainSetup s{rbf::ValueNet::zeros(grid),
               rbf::PolicyNet::zeros(grid, rbf::ActionBounds::make_default())};
  s.value.w[0] = reward.terminal_penalty;  // bias feature
  s.policy.std_gain = 7.0;
  return s;
}

Result<TrainingReport, TrainError> train(rbf::ValueNet* value,
                                         rbf::PolicyNet* policy,
                                         const LearningConfig& cfg,
                                         const RewardSpec& reward,
                                         const TerminalSpec& term,
                                         const lipm::LipmParams& params) {
  const auto t_start = std::chrono::steady_clock::now();
  const auto& grid = policy->grid;
  const int dim = grid.feature_dim();

  Eigen::VectorXd ew = Eigen::VectorXd::Zero(dim);
  rbf::PolicyMatrix et = rbf::PolicyMatrix::Zero(dim, 6);
  SupportSet sup_w, sup_t;
  sup_w.init(dim);
  sup_t.init(dim);
  const int horizon_w = prune_horizon(cfg.lambda_w);
  const int horizon_t = prune_horizon(cfg.lambda_theta);

  RngStream rng(cfg.seed);
  TrainingReport report;

  // Fixed probe starts for the survival curve; independent of the training
  // stream so probing never shifts the learned trajectory.
  std::vector<lipm::ApexState> survival_starts;
  {
    RngStream probe_rng(0x5eedf00dULL);
    for (int i = 0; i < 50; ++i)
      survival_starts.push_back({probe_rng.uniform(grid.lo[0], grid.hi[0]),
                                 probe_rng.uniform(grid.lo[1], grid.hi[1]),
                                 probe_rng.uniform(grid.lo[2], grid.hi[2])});
  }
  auto survival_probe = [&]() {
    double acc = 0.0;
    for (const auto& s0 : survival_starts)
      acc += evaluate_policy(*policy, s0, 100, params, term).steps;
    return acc / survival_starts.size();
  };

  rbf::SparseFeatures f, f_next;
  bool converged = false;
  int iter = 0;
  for (; iter < cfg.max_iterations; ++iter) {
    if (cfg.probe_every > 0 && iter % cfg.probe_every == 0) {
      const double ms = probe_mean_std(*policy);
      report.probe_std.emplace_back(iter, ms);
      if (ms < cfg.convergence_std) {
        converged = true;
        break;
      }
    }
    if (cfg.survival_probe_every > 0 && iter % cfg.survival_probe_every == 0)
      report.mean_survival.emplace_back(iter, survival_probe());

    // Episode setup: fresh traces, unit emphasis, uniform start state.
    for (int i : sup_w.items) {
      ew[i] = 0.0;
      sup_w.in[i] = 0;
    }
    sup_w.items.clear();
    for (int i : sup_t.items) {
      et.row(i).setZero();
      sup_t.in[i] = 0;
    }
    sup_t.items.clear();
    double scale_w = 1.0, scale_t = 1.0;
    double emphasis = 1.0;

    lipm::ApexState s{rng.uniform(grid.lo[0], grid.hi[0]),
                      rng.uniform(grid.lo[1], grid.hi[1]),
                      rng.uniform(grid.lo[2], grid.hi[2])};
    rbf::features_into(grid, to_vec(s), &f);

    for (int step = 0; step < cfg.episode_cap; ++step) {
      const auto ev = rbf::policy_eval(*policy, f);
      const Eigen::Vector3d a = rbf::sample_action(ev.dist, rng);
      const lipm::StepAction act{a[0], a[1], a[2]};
      const Transition tr = transition(s, act, params, reward, term);

      double v_s = 0.0;
      for (std::size_t k = 0; k < f.idx.size(); ++k)
        v_s += value->w[f.idx[k]] * f.val[k];
      double v_next = 0.0;
      if (!tr.terminal) {
        rbf::features_into(grid, to_vec(tr.next), &f_next);
        for (std::size_t k = 0; k < f_next.idx.size(); ++k)
          v_next += value->w[f_next.idx[k]] * f_next.val[k];
      }
      const double delta = tr.reward + cfg.gamma * v_next - v_s;
      if (!std::isfinite(delta)) return TrainError::DivergenceDetected;
      const auto score = rbf::log_prob_score_recoverable(*policy, ev, a);
      if (!score.ok()) return TrainError::DivergenceDetected;

      // Trace decay. Zero decay clears the support outright; otherwise the
      // shared scale absorbs the multiply and entries stay untouched.
      if (cfg.lambda_w == 0.0) {
        for (int i : sup_w.items) {
          ew[i] = 0.0;
          sup_w.in[i] = 0;
        }
        sup_w.items.clear();
        scale_w = 1.0;
      } else {
        scale_w *= cfg.lambda_w;
        if (scale_w < 1e-120) {
          for (int i : sup_w.items) ew[i] *= scale_w;
          scale_w = 1.0;
        }
      }
      if (cfg.lambda_theta == 0.0) {
        for (int i : sup_t.items) {
          et.row(i).setZero();
          sup_t.in[i] = 0;
        }
        sup_t.items.clear();
        scale_t = 1.0;
      } else {
        scale_t *= cfg.lambda_theta;
        if (scale_t < 1e-120) {
          for (int i : sup_t.items) et.row(i) *= scale_t;
          scale_t = 1.0;
        }
      }

      // Accumulate this step's gradients into the traces. The constant
      // feature carries the full critic gradient but only the spread part of
      // the policy gradient, matching policy_eval's wiring.
      const double cw = emphasis / scale_w;
      const double ct = emphasis / scale_t;
      const Eigen::Matrix<double, 6, 1>& sc = score.value();
      for (std::size_t k = 0; k < f.idx.size(); ++k) {
        const int i = f.idx[k];
        sup_w.add(i, step);
        ew[i] += cw * f.val[k];
        sup_t.add(i, step);
        if (i == 0) {
          et.row(i).tail<3>() += (ct * f.val[k]) * sc.tail<3>().transpose();
        } else {
          et.row(i) += (ct * f.val[k]) * sc.transpose();
        }
      }

      // Apply the TD update through the traces.
      const double step_w = cfg.beta * delta * scale_w;
      for (int i : sup_w.items) value->w[i] += step_w * ew[i];
      const double step_t = cfg.alpha * delta * scale_t;
      for (int i : sup_t.items) policy->theta.row(i) += step_t * et.row(i);

      emphasis *= cfg.gamma;
      ++report.total_steps;

      // Periodically drop entries whose decay makes them invisible at double
      // precision; keeps the support proportional to the recent window.
      if ((step & 31) == 31) {
        auto prune = [step](SupportSet& sup, int horizon, auto&& zero_row) {
          if (horizon == std::numeric_limits<int>::max()) return;
          for (std::size_t k = sup.items.size(); k-- > 0;) {
            const int i = sup.items[k];
            if (step - sup.touch[i] > horizon) {
              zero_row(i);
              sup.in[i] = 0;
              sup.items[k] = sup.items.back();
              sup.items.pop_back();
            }
          }
        };
        prune(sup_w, horizon_w, [&](int i) { ew[i] = 0.0; });
        prune(sup_t, horizon_t, [&](int i) { et.row(i).setZero(); });
      }

      if (tr.terminal) break;
      s = tr.next;
      std::swap(f, f_next);
    }

    if (!value->w.allFinite() || !policy->theta.allFinite())
      return TrainError::DivergenceDetected;
  }

  report.iterations = iter;
  report.converged = converged;
  report.final_mean_std = probe_mean_std(*policy);
  if (report.probe_std.empty() || report.probe_std.back().first != iter)
    report.probe_std.emplace_back(iter, report.final_mean_std);
  report.mean_survival.emplace_back(iter, survival_probe());
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace pswalk::rl
