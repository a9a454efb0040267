#pragma once

#include <cstdint>
#include <string>

#include "pswalk/actor_critic.hpp"
#include "pswalk/lipm.hpp"
#include "pswalk/rbf_net.hpp"
#include "pswalk/result.hpp"
#include "pswalk/sim_arm.hpp"
#include "pswalk/sim_walk.hpp"

// Run configuration: one JSON document covering every tunable the tools
// expose. Missing keys fall back to the compiled defaults (the same values
// the structs below carry), unknown keys are rejected with their full path,
// so a typo never silently reverts a setting to its default.
namespace pswalk::cfg {

struct ConfigError {
  std::string message;
};

struct PendulumSection {
  double com_height = 1.0;
  double gravity = 9.81;
};

struct WalkSection {
  Eigen::Vector3d start{0.056, 0.2, 0.0};  // lateral offset, ẋ apex, ẏ apex
  double sample_dt = 1e-3;
  double max_time = 120.0;
};

struct PlanSection {
  int steps = 15;
};

struct ArmSection {
  double amplitude = 0.23;
  double frequency_hz = 2.0;
  double duration = 2.0;
  double kp = 100.0;
  double kd = 20.0;
};

struct RunConfig {
  PendulumSection pendulum;
  rbf::RbfGrid grid = rbf::RbfGrid::make_default();
  rbf::ActionBounds action_bounds = rbf::ActionBounds::make_default();
  rl::LearningConfig learning;  // seed field ignored; the top-level seed wins
  double std_gain = 7.0;        // policy spread slope, applied at net creation
  rl::RewardSpec reward;
  rl::TerminalSpec terminal;
  sim::ReplanPolicy replan;
  WalkSection walk;
  PlanSection plan;
  ArmSection arm;
  std::uint64_t seed = 1;

  lipm::LipmParams params() const;
  sim::WalkConfig walk_config() const;
  sim::ArmTrackConfig arm_config() const;
  rl::LearningConfig learning_config() const;  // learning with seed patched in
};

// Fresh nets per this config: make_initial_nets with the configured grid and
// reward, spread slope overridden by std_gain.
rl::TrainSetup initial_nets(const RunConfig& c);

Result<RunConfig, ConfigError> parse_config(const std::string& json_text);
Result<RunConfig, ConfigError> load_config(const std::string& path);

// Canonical serialization: sorted keys, every field present. Two configs
// hash equal iff this text matches byte for byte.
std::string dump_config(const RunConfig& c);
std::uint64_t config_hash(const RunConfig& c);
std::string config_hash_hex(const RunConfig& c);  // "fnv1a:" + 16 hex digits

// FNV-1a 64-bit over raw bytes; exposed for the trace writers.
std::uint64_t fnv1a(const std::string& bytes);

// Walking scenario: a start apex, one scripted turn per stride and optional
// velocity-jump disturbances. Turns live in degrees on disk, radians here.
struct Scenario {
  std::string name;
  Eigen::Vector3d start{0.056, 0.2, 0.0};
  std::vector<double> turns;  // radians, one per step
  std::vector<sim::Disturbance> disturbances;
};

Result<Scenario, ConfigError> parse_scenario(const std::string& json_text);
Result<Scenario, ConfigError> load_scenario(const std::string& path);

}  // namespace pswalk::cfg
