#include "pswalk/sim_walk.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace pswalk::sim {
namespace {

using lipm::ApexState;
using lipm::LipmParams;
using lipm::PendulumState1D;
using lipm::StepAction;
using lipm::StepPlan;

// CoM state in the mirrored stride coordinates: stance foot at the origin,
// +x along the heading, +y toward the upcoming swing side.
struct PlanState {
  PendulumState1D x, y;
};

PlanState advance(const PlanState& s, double dt, const LipmParams& p) {
  return {lipm::com_state_at(s.x, 0.0, dt, p),
          lipm::com_state_at(s.y, 0.0, dt, p)};
}

// Stride frame: world isometry plus the lateral mirror sign.
struct StrideFrame {
  Eigen::Vector2d foot = Eigen::Vector2d::Zero();
  double heading = 0.0;
  double sign = 1.0;  // +1 when world-left of the heading is the swing side
};

ComState to_world(const PlanState& s, const StrideFrame& f) {
  const Eigen::Rotation2Dd R(f.heading);
  ComState w;
  w.pos = f.foot + R * Eigen::Vector2d(s.x.x, f.sign * s.y.x);
  w.vel = R * Eigen::Vector2d(s.x.xdot, f.sign * s.y.xdot);
  return w;
}

PlanState to_plan(const ComState& w, const StrideFrame& f) {
  const Eigen::Rotation2Dd R(-f.heading);
  const Eigen::Vector2d p = R * (w.pos - f.foot);
  const Eigen::Vector2d v = R * w.vel;
  return {{p.x(), v.x()}, {f.sign * p.y(), f.sign * v.y()}};
}

bool viable(const StepPlan& plan, const rl::TerminalSpec& term) {
  return plan.t_switch >= term.t_switch_min && plan.t_apex >= term.t_apex_min &&
         plan.p_y >= term.py_lo && plan.p_y <= term.py_hi;
}

struct Decision {
  ApexState query;
  StepAction action;
  StepPlan plan;
};

// Policy means at the query state, stride plan from the actual state. The
// two differ only at replans, where the query comes from the blended goal.
bool decide(const rbf::PolicyNet& policy, const PlanState& actual,
            const PlanState& query_src, const WalkConfig& cfg, Decision* out) {
  out->query = apex_projection(query_src.x, query_src.y, cfg.params);
  const rbf::TruncatedNormal3 dist = rbf::policy_distribution(
      policy, Eigen::Vector3d(out->query.y_apex, out->query.xdot_apex,
                              out->query.ydot_apex));
  out->action = {dist.mean[0], dist.mean[1], dist.mean[2]};
  const auto plan = lipm::plan_step(actual.x, actual.y, out->action, cfg.params);
  if (!plan.ok() || !viable(plan.value(), cfg.term)) return false;
  out->plan = plan.value();
  return true;
}

}  // namespace

lipm::ApexState apex_projection(const PendulumState1D& x,
                                const PendulumState1D& y,
                                const LipmParams& params) {
  const ApexState raw{y.x, x.xdot, y.xdot};
  const double e = x.xdot * x.xdot - params.omega * params.omega * x.x * x.x;
  if (e < 1e-10) return raw;
  const double xdot_apex = std::sqrt(e);
  const auto t = lipm::time_to_state(x, {0.0, xdot_apex}, 0.0, params);
  if (!t.ok() || std::abs(t.value()) > 2.0) return raw;
  const PendulumState1D ya = lipm::com_state_at(y, 0.0, t.value(), params);
  return {ya.x, xdot_apex, ya.xdot};
}

double replan_error(const ComState& measured, const ComState& reference,
                    const ReplanPolicy& rp) {
  const Eigen::Vector2d dp = reference.pos - measured.pos;
  const Eigen::Vector2d dv = rp.velocity_weight * (reference.vel - measured.vel);
  return std::sqrt(dp.squaredNorm() + dv.squaredNorm());
}

bool ReplanTrigger::update(double error, double dt) {
  if (error <= rp_.error_threshold) {
    above_ = 0.0;
    return false;
  }
  above_ += dt;
  if (above_ + 1e-12 < rp_.persistence) return false;
  above_ = 0.0;
  return true;
}

double push_delta_v(double force_n, double duration_s, double mass_kg) {
  return force_n * duration_s / mass_kg;
}

std::vector<double> steering_script() {
  const double turn = 18.8 * M_PI / 180.0;
  std::vector<double> turns;
  turns.insert(turns.end(), 12, turn);
  turns.insert(turns.end(), 5, 0.0);
  turns.insert(turns.end(), 12, -turn);
  return turns;
}

WalkTrace walk_scenario(const rbf::PolicyNet& policy, const ApexState& s0,
                        int n_steps, double turn_per_step,
                        const std::vector<Disturbance>& disturbances,
                        const WalkConfig& cfg) {
  return walk_scenario(policy, s0,
                       std::vector<double>(std::max(n_steps, 0), turn_per_step),
                       disturbances, cfg);
}

WalkTrace walk_scenario(const rbf::PolicyNet& policy, const ApexState& s0,
                        const std::vector<double>& turns,
                        const std::vector<Disturbance>& disturbances,
                        const WalkConfig& cfg) {
  WalkTrace tr;
  const int n_steps = static_cast<int>(turns.size());
  if (n_steps == 0) return tr;

  std::vector<Disturbance> dist = disturbances;
  std::sort(dist.begin(), dist.end(),
            [](const Disturbance& a, const Disturbance& b) {
              return a.time < b.time;
            });
  size_t di = 0;

  StrideFrame frame;
  PlanState act{{0.0, s0.xdot_apex}, {s0.y_apex, s0.ydot_apex}};
  PlanState ref = act;
  double t = 0.0;
  long tick = 0;
  int scheduled = 0;  // scheduled decisions consumed from the script
  int phase = 0;      // 0: pre-exchange, 1: post-exchange
  ReplanTrigger trigger(cfg.replan);

  StepRecord cur;
  size_t cur_slot = 0;

  auto record_fall = [&](double when) {
    tr.events.push_back(
        {WalkEventKind::Fall, when, cur.index, Eigen::Vector2d::Zero(), 0, 0});
    tr.fell = true;
  };

  // Opens a new stride record from the current actual state; scheduled
  // decisions rotate the frame first. Returns false on a terminal plan.
  auto open_stride = [&](int index, bool replanned, double turn,
                         const PlanState& query_src) {
    if (!replanned) {
      const ComState wa = to_world(act, frame);
      const ComState wr = to_world(ref, frame);
      frame.heading = lipm::wrap_angle(frame.heading + turn);
      act = to_plan(wa, frame);
      ref = to_plan(wr, frame);
    }
    Decision d;
    if (!decide(policy, act, replanned ? query_src : act, cfg, &d)) {
      record_fall(t);
      return false;
    }
    cur = StepRecord{};
    cur.index = index;
    cur.replanned = replanned;
    cur.turn = replanned ? 0.0 : turn;
    cur.heading = frame.heading;
    cur.stance_foot = frame.foot;
    cur.next_foot =
        frame.foot + Eigen::Rotation2Dd(frame.heading) *
                         Eigen::Vector2d(d.action.p_x, frame.sign * d.plan.p_y);
    cur.t_begin = t;
    cur.t_switch_abs = t + d.plan.t_switch;
    cur.t_end_abs = cur.t_switch_abs + d.plan.t_apex;
    cur.query = d.query;
    cur.action = d.action;
    cur.plan = d.plan;
    ref = act;  // fresh plan: the reference restarts on the measured state
    cur_slot = tr.steps.size();
    tr.steps.push_back(cur);
    return true;
  };

  if (!open_stride(0, false, turns[0], act)) {
    tr.duration = t;
    return tr;
  }
  scheduled = 1;

  const double inf = std::numeric_limits<double>::infinity();
  while (t <= cfg.max_time) {
    const double t_tick = static_cast<double>(tick) * cfg.sample_dt;
    const double t_boundary = phase == 0 ? cur.t_switch_abs : cur.t_end_abs;
    const double t_dist = di < dist.size() ? std::max(dist[di].time, t) : inf;
    const double te = std::min({t_boundary, t_dist, t_tick});
    act = advance(act, te - t, cfg.params);
    ref = advance(ref, te - t, cfg.params);
    t = te;

    if (te == t_boundary) {
      if (phase == 0) {
        const ComState wa = to_world(act, frame);
        const ComState wr = to_world(ref, frame);
        frame.foot = cur.next_foot;
        frame.sign = -frame.sign;
        act = to_plan(wa, frame);
        ref = to_plan(wr, frame);
        cur.switched = true;
        tr.steps[cur_slot].switched = true;
        ++tr.exchanges;
        phase = 1;
      } else {
        ++tr.steps_completed;
        if (scheduled == n_steps) break;
        if (!open_stride(scheduled, false, turns[scheduled], act)) break;
        ++scheduled;
        phase = 0;
      }
    } else if (te == t_dist) {
      const Eigen::Rotation2Dd R(-frame.heading);
      const Eigen::Vector2d dv = R * dist[di].delta_v;
      act.x.xdot += dv.x();
      act.y.xdot += frame.sign * dv.y();
      tr.events.push_back({WalkEventKind::Disturbance, t, cur.index,
                           dist[di].delta_v, 0.0, 0.0});
      ++di;
    } else {
      const ComState wa = to_world(act, frame);
      tr.samples.push_back(
          {t, wa.pos, wa.vel, frame.foot, frame.heading, cur.index});
      const double err = replan_error(wa, to_world(ref, frame), cfg.replan);
      ++tick;
      if (trigger.update(err, cfg.sample_dt)) {
        const double g = cfg.replan.blend_gamma;
        PlanState blend{{g * ref.x.x + (1 - g) * act.x.x,
                         g * ref.x.xdot + (1 - g) * act.x.xdot},
                        {g * ref.y.x + (1 - g) * act.y.x,
                         g * ref.y.xdot + (1 - g) * act.y.xdot}};
        const auto t0 = std::chrono::steady_clock::now();
        const bool ok = open_stride(cur.index, true, 0.0, blend);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        if (!ok) break;
        tr.events.push_back(
            {WalkEventKind::Replan, t, cur.index, Eigen::Vector2d::Zero(), err,
             wall});
        phase = 0;
      }
    }
  }
  tr.duration = t;
  return tr;
}

Result<ReplanResult, ReplanError> replan(const ComState& measured,
                                         const ComState& reference,
                                         const lipm::LocalFrame2D& frame,
                                         const rbf::PolicyNet& policy,
                                         const ReplanPolicy& rp, int n_steps,
                                         const WalkConfig& cfg) {
  ReplanResult out;
  const double g = rp.blend_gamma;
  out.goal.pos = g * reference.pos + (1 - g) * measured.pos;
  out.goal.vel = g * reference.vel + (1 - g) * measured.vel;
  out.goal_local = lipm::reproject_frame(out.goal.pos, out.goal.vel, frame);

  PlanState s{{out.goal_local.pos.x(), out.goal_local.vel.x()},
              {out.goal_local.pos.y(), out.goal_local.vel.y()}};

  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < n_steps; ++k) {
    Decision d;
    const bool first = k == 0;
    bool ok;
    if (first) {
      ok = decide(policy, s, s, cfg, &d);
    } else {
      const ApexState apex{s.y.x, s.x.xdot, s.y.xdot};
      d.query = apex;
      const rbf::TruncatedNormal3 dist = rbf::policy_distribution(
          policy, Eigen::Vector3d(apex.y_apex, apex.xdot_apex, apex.ydot_apex));
      d.action = {dist.mean[0], dist.mean[1], dist.mean[2]};
      const auto plan = lipm::psp_step(apex, d.action, cfg.params);
      ok = plan.ok() && viable(plan.value(), cfg.term);
      if (ok) d.plan = plan.value();
    }
    if (!ok) {
      if (first) return ReplanError::BlendedStateTerminal;
      break;
    }
    out.actions.push_back(d.action);
    out.plans.push_back(d.plan);
    ++out.steps;
    s = PlanState{{0.0, d.plan.next_apex.xdot_apex},
                  {d.plan.next_apex.y_apex, d.plan.next_apex.ydot_apex}};
  }
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace pswalk::sim
