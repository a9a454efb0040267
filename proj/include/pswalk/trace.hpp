#pragma once

#include <string>
#include <vector>

#include "pswalk/actor_critic.hpp"
#include "pswalk/result.hpp"
#include "pswalk/sim_arm.hpp"
#include "pswalk/sim_walk.hpp"
#include "pswalk/version.hpp"

// Output files for the command-line tools. Every file opens with the same
// header block -- tool name, version, config hash -- as JSON under "meta" or
// as leading '#' lines in CSV, so any result can be traced back to the exact
// configuration that produced it. Schemas are frozen by golden-file tests;
// docs/file_formats.md is the human-readable copy.
namespace pswalk::trace {

struct FileMeta {
  std::string config_hash;  // cfg::config_hash_hex output
  std::string tool = kToolName;
  std::string version = kToolVersion;
};

struct WriteError {
  std::string message;
};

using WriteResult = Result<bool, WriteError>;

// Training: convergence curve and survival probe per TrainingReport.
WriteResult write_training_report(const std::string& path, const FileMeta& meta,
                                  const rl::TrainingReport& report,
                                  std::uint64_t seed);

// Greedy multi-step plan: foothold positions and stride timings plus the
// measured planning wall time.
WriteResult write_plan_json(const std::string& path, const FileMeta& meta,
                            const rl::Rollout& rollout, double wall_time_s);

// Walking scenario. CSV carries the 1 kHz sample stream, one row per sample:
// t,x,xdot,y,ydot,foot_x,foot_y,heading,event. JSON carries the per-stride
// decisions, the event list and the summary.
WriteResult write_walk_csv(const std::string& path, const FileMeta& meta,
                           const sim::WalkTrace& trace);
WriteResult write_walk_json(const std::string& path, const FileMeta& meta,
                            const sim::WalkTrace& trace);

// Manipulator tracking comparison, both toggle positions in one file.
WriteResult write_track_csv(const std::string& path, const FileMeta& meta,
                            const sim::ArmTrackResult& with_jdot,
                            const sim::ArmTrackResult& without_jdot);
WriteResult write_track_json(const std::string& path, const FileMeta& meta,
                             const sim::ArmTrackResult& with_jdot,
                             const sim::ArmTrackResult& without_jdot);

// Robustness sweep: one row per disturbance direction.
struct SweepRow {
  double direction_deg = 0.0;
  Eigen::Vector2d delta_v = Eigen::Vector2d::Zero();
  bool recovered = false;  // >= 15 further stance exchanges, no fall
  int steps_after = 0;
  bool fell = false;
};

WriteResult write_sweep_csv(const std::string& path, const FileMeta& meta,
                            const std::vector<SweepRow>& rows);
WriteResult write_sweep_json(const std::string& path, const FileMeta& meta,
                             const std::vector<SweepRow>& rows);

const char* to_string(sim::WalkEventKind k);

}  // namespace pswalk::trace
