#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pswalk/lipm.hpp"
#include "pswalk/rbf_net.hpp"
#include "pswalk/result.hpp"

namespace pswalk::rl {

struct LearningConfig {
  double alpha = 1e-4;        // policy step size
  double beta = 1e-3;         // critic step size
  double gamma = 0.96;        // discount
  double lambda_theta = 0.5;  // policy trace decay
  double lambda_w = 0.5;      // critic trace decay
  int max_iterations = 60000;
  double convergence_std = 0.07;  // stop when the probe mean spread dips below
  int episode_cap = 500;          // hard bound on steps per episode
  int probe_every = 250;          // convergence probe cadence (iterations)
  int survival_probe_every = 1000;
  std::uint64_t seed = 1;
};

struct RewardSpec {
  double xdot_nom = 0.2;
  double py_nom = 0.3;
  double w_py = 15.0;
  double terminal_penalty = -5.0;
};

// A step is viable only with both phase durations above the minimum and the
// lateral placement inside the support band; anything else ends the episode.
struct TerminalSpec {
  double t_apex_min = 0.12;
  double t_switch_min = 0.12;
  double py_lo = 0.1;
  double py_hi = 0.5;
};

struct Transition {
  bool terminal = false;
  bool plan_ok = false;  // false when the planner itself failed
  double reward = 0.0;
  lipm::ApexState next;  // meaningful only when !terminal
  lipm::StepPlan plan;   // meaningful only when plan_ok
};

// Apex-to-apex environment step: plan the stride, score it, and flag
// terminal outcomes (planner failure or viability violation).
Transition transition(const lipm::ApexState& s, const lipm::StepAction& a,
                      const lipm::LipmParams& params, const RewardSpec& reward,
                      const TerminalSpec& term);

struct TrainingReport {
  int iterations = 0;
  bool converged = false;
  double final_mean_std = 0.0;
  double wall_time_s = 0.0;
  long total_steps = 0;
  std::vector<std::pair<int, double>> probe_std;      // iteration, mean spread
  std::vector<std::pair<int, double>> mean_survival;  // iteration, greedy steps
};

enum class TrainError {
  DivergenceDetected,  // non-finite weights or TD error
};

struct TrainSetup {
  rbf::ValueNet value;
  rbf::PolicyNet policy;
};

// Fresh nets ready for training. The critic bias starts at the terminal
// penalty so unexplored states look no better than falling; without that
// prior the first contact with the penalty drives a large negative TD wave
// through every visited cell and the policy collapses before it can steer.
// The spread channel gets a steep softplus slope: the means learn slowly
// enough for per-cell TD noise to cancel, and the slope lets exploration
// still narrow within the iteration budget at that step size.
TrainSetup make_initial_nets(const rbf::RbfGrid& grid, const RewardSpec& reward);

// Episodic actor-critic with eligibility traces over the shared features.
// Per iteration: start state uniform over the grid box, traces zeroed,
// emphasis I = 1; per step the TD error updates both nets through their
// traces and I decays by gamma.
//
// Draw order is part of the contract (tests replay it): three uniforms for
// each episode start state, then three per sampled action. Nothing else
// consumes the stream.
Result<TrainingReport, TrainError> train(rbf::ValueNet* value,
                                         rbf::PolicyNet* policy,
                                         const LearningConfig& cfg,
                                         const RewardSpec& reward,
                                         const TerminalSpec& term,
                                         const lipm::LipmParams& params);

struct Rollout {
  int steps = 0;  // completed non-terminal strides
  bool fell = false;
  std::vector<lipm::ApexState> apexes;   // starts with the initial state
  std::vector<lipm::StepAction> actions;
  std::vector<lipm::StepPlan> plans;
};

// Greedy rollout using the distribution means, no exploration.
Rollout evaluate_policy(const rbf::PolicyNet& policy,
                        const lipm::ApexState& start, int max_steps,
                        const lipm::LipmParams& params,
                        const TerminalSpec& term);

// Mean policy spread over an evenly spaced lattice covering the state box
// (per_axis^3 points, averaged over points and action axes).
double probe_mean_std(const rbf::PolicyNet& policy, int per_axis = 5);

}  // namespace pswalk::rl
