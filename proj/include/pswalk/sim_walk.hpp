#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pswalk/actor_critic.hpp"
#include "pswalk/lipm.hpp"
#include "pswalk/rbf_net.hpp"
#include "pswalk/result.hpp"

// Point-mass walking scenarios: the learned stride policy drives the
// pendulum plant through steering scripts, velocity-jump pushes and
// threshold-triggered replanning. The plant is the analytic pendulum
// solution, so between declared disturbances the trace is exact.
namespace pswalk::sim {

// Instantaneous CoM velocity change, world frame. Pushes map to velocity
// jumps as delta_v = force * duration / mass (see push_delta_v).
struct Disturbance {
  double time = 0.0;
  Eigen::Vector2d delta_v = Eigen::Vector2d::Zero();
};

// When the tracking error (position stacked with weighted velocity) stays
// above error_threshold for at least persistence seconds, the stride is
// replanned toward a goal blended between the reference and the measured
// state: goal = blend_gamma * reference + (1 - blend_gamma) * measured.
struct ReplanPolicy {
  double error_threshold = 0.05;  // meters
  double persistence = 0.02;      // seconds
  double blend_gamma = 0.8;
  double velocity_weight = 0.5;
};

// Planar CoM state, world frame.
struct ComState {
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();
};

struct WalkConfig {
  lipm::LipmParams params = lipm::LipmParams::from_height(1.0);
  rl::TerminalSpec term;   // stride viability gate, matches training
  ReplanPolicy replan;
  double sample_dt = 1e-3;
  double max_time = 120.0;  // hard stop for runaway scenarios
};

struct WalkSample {
  double t = 0.0;
  Eigen::Vector2d com_pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d com_vel = Eigen::Vector2d::Zero();
  Eigen::Vector2d stance_foot = Eigen::Vector2d::Zero();
  double heading = 0.0;
  int step_index = 0;
};

enum class WalkEventKind { Disturbance, Replan, Fall };

struct WalkEvent {
  WalkEventKind kind = WalkEventKind::Disturbance;
  double t = 0.0;
  int step_index = 0;
  Eigen::Vector2d delta_v = Eigen::Vector2d::Zero();  // Disturbance only
  double error = 0.0;         // trigger error at a Replan
  double wall_time_s = 0.0;   // decision wall time at a Replan
};

// One stride decision. Scheduled decisions happen at stride ends and consume
// one entry of the turn script; replanned decisions restart the stride
// mid-flight and keep the heading.
struct StepRecord {
  int index = 0;
  bool replanned = false;
  double turn = 0.0;
  double heading = 0.0;
  Eigen::Vector2d stance_foot = Eigen::Vector2d::Zero();
  Eigen::Vector2d next_foot = Eigen::Vector2d::Zero();
  double t_begin = 0.0;
  double t_switch_abs = 0.0;
  double t_end_abs = 0.0;
  bool switched = false;
  lipm::ApexState query;    // state the policy was asked about
  lipm::StepAction action;
  lipm::StepPlan plan;
};

struct WalkTrace {
  std::vector<WalkSample> samples;  // 1 kHz grid
  std::vector<StepRecord> steps;
  std::vector<WalkEvent> events;
  bool fell = false;
  int steps_completed = 0;  // stride plans carried to their end apex
  int exchanges = 0;        // stance exchanges executed
  double duration = 0.0;
};

// Runs one scripted scenario: per stride, steer the planning frame by the
// scripted turn, query the policy means, plan the stride from the measured
// state and roll the plant analytically. turns.size() is the step count.
WalkTrace walk_scenario(const rbf::PolicyNet& policy,
                        const lipm::ApexState& s0,
                        const std::vector<double>& turns,
                        const std::vector<Disturbance>& disturbances,
                        const WalkConfig& cfg = {});

// Constant-turn convenience wrapper.
WalkTrace walk_scenario(const rbf::PolicyNet& policy,
                        const lipm::ApexState& s0, int n_steps,
                        double turn_per_step,
                        const std::vector<Disturbance>& disturbances,
                        const WalkConfig& cfg = {});

// 12 steps turning +18.8 deg, 5 straight, 12 turning -18.8 deg.
std::vector<double> steering_script();

// Velocity jump equivalent to a force applied for a duration on a given
// mass.
double push_delta_v(double force_n, double duration_s, double mass_kg);

// 2-norm of [position error; velocity_weight * velocity error].
double replan_error(const ComState& measured, const ComState& reference,
                    const ReplanPolicy& rp);

// Debounced trigger: fires once the error has stayed above the threshold
// for the persistence window, then re-arms.
class ReplanTrigger {
 public:
  explicit ReplanTrigger(const ReplanPolicy& rp) : rp_(rp) {}
  bool update(double error, double dt);

 private:
  ReplanPolicy rp_;
  double above_ = 0.0;
};

// Policy-query state for a mid-stride CoM state: the apex of the current
// sagittal orbit with the lateral state carried to that instant. States
// whose orbit never tops the stance foot fall back to the raw components.
lipm::ApexState apex_projection(const lipm::PendulumState1D& x,
                                const lipm::PendulumState1D& y,
                                const lipm::LipmParams& params);

struct ReplanResult {
  ComState goal;  // blended goal, world frame
  lipm::LocalState2D goal_local;
  std::vector<lipm::StepAction> actions;
  std::vector<lipm::StepPlan> plans;
  int steps = 0;
  double wall_time_s = 0.0;
};

enum class ReplanError {
  BlendedStateTerminal,  // no viable stride from the blended goal
};

// Standalone replanning probe: blend measured and reference states, express
// the goal in the given stride frame (+y must be the upcoming swing side)
// and roll the policy n_steps strides ahead. The wall time covers the
// policy queries and stride plans only.
Result<ReplanResult, ReplanError> replan(const ComState& measured,
                                         const ComState& reference,
                                         const lipm::LocalFrame2D& frame,
                                         const rbf::PolicyNet& policy,
                                         const ReplanPolicy& rp,
                                         int n_steps = 15,
                                         const WalkConfig& cfg = {});

}  // namespace pswalk::sim
