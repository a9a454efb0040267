// Command-line front end: train the stride policy, plan footsteps from a
// checkpoint, run walking scenarios, the manipulator tracking comparison and
// the push robustness sweep. Exit codes: 0 success, 1 domain failure (fall,
// divergence, missed bench bound), 2 usage or parse error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <future>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pswalk/config.hpp"
#include "pswalk/trace.hpp"
#include "pswalk/version.hpp"

namespace {

using namespace pswalk;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Common {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string format = "both";  // csv | json | both
  bool bench = false;
};

void add_common(CLI::App* cmd, Common* c) {
  cmd->add_option("--config", c->config_path, "JSON config file (defaults compiled in)");
  cmd->add_option("--out", c->out_dir, "output directory")->capture_default_str();
  cmd->add_option("--seed", c->seed, "override the config seed")
      ->each([c](const std::string&) { c->seed_set = true; });
  cmd->add_option("--format", c->format, "trace format: csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}))
      ->capture_default_str();
  cmd->add_flag("--bench", c->bench, "assert timing bounds instead of only reporting them");
}

// Loads the config (or compiled defaults), applies the seed override and
// prepares the output directory. Returns false with the exit code set on any
// failure.
bool setup(const Common& c, cfg::RunConfig* out, trace::FileMeta* meta, int* exit_code) {
  if (!c.config_path.empty()) {
    auto loaded = cfg::load_config(c.config_path);
    if (!loaded.ok()) {
      std::fprintf(stderr, "config error: %s\n", loaded.error().message.c_str());
      *exit_code = kExitUsage;
      return false;
    }
    *out = loaded.value();
  } else {
    *out = cfg::RunConfig{};
  }
  if (c.seed_set) out->seed = c.seed;
  meta->config_hash = cfg::config_hash_hex(*out);
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "cannot create %s: %s\n", c.out_dir.c_str(), ec.message().c_str());
    *exit_code = kExitDomain;
    return false;
  }
  return true;
}

bool fail_write(const trace::WriteResult& r, int* exit_code) {
  if (r.ok()) return false;
  std::fprintf(stderr, "write error: %s\n", r.error().message.c_str());
  *exit_code = kExitDomain;
  return true;
}

std::string join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

bool want_csv(const Common& c) { return c.format != "json"; }
bool want_json(const Common& c) { return c.format != "csv"; }

Result<rbf::Checkpoint, int> load_ckpt(const std::string& path) {
  auto ck = rbf::load_checkpoint(path);
  if (!ck.ok()) {
    std::fprintf(stderr, "checkpoint %s: %s\n", path.c_str(), rbf::to_string(ck.error()));
    return kExitUsage;
  }
  return ck.value();
}

int cmd_train(const Common& c) {
  cfg::RunConfig rc;
  trace::FileMeta meta;
  int code = kExitOk;
  if (!setup(c, &rc, &meta, &code)) return code;

  rl::TrainSetup nets = cfg::initial_nets(rc);
  rl::TrainingReport report;
  if (rc.learning.max_iterations > 0) {
    auto trained = rl::train(&nets.value, &nets.policy, rc.learning_config(),
                             rc.reward, rc.terminal, rc.params());
    if (!trained.ok()) {
      std::fprintf(stderr, "training diverged\n");
      return kExitDomain;
    }
    report = trained.value();
  }

  auto saved = rbf::save_checkpoint(join(c.out_dir, "checkpoint.bin"),
                                    {nets.value, nets.policy});
  if (!saved.ok()) {
    std::fprintf(stderr, "checkpoint write failed: %s\n", rbf::to_string(saved.error()));
    return kExitDomain;
  }
  if (fail_write(trace::write_training_report(
                     join(c.out_dir, "training_report.json"), meta, report, rc.seed),
                 &code)) {
    return code;
  }
  std::printf("iterations %d converged %s final_std %.4f wall %.1f s\n",
              report.iterations, report.converged ? "true" : "false",
              report.final_mean_std, report.wall_time_s);
  return kExitOk;
}

int cmd_plan(const Common& c, const std::string& ckpt_path,
             std::vector<double> apex, int steps) {
  cfg::RunConfig rc;
  trace::FileMeta meta;
  int code = kExitOk;
  if (!setup(c, &rc, &meta, &code)) return code;
  auto ck = load_ckpt(ckpt_path);
  if (!ck.ok()) return ck.error();

  if (steps <= 0) steps = rc.plan.steps;
  lipm::ApexState start{rc.walk.start[0], rc.walk.start[1], rc.walk.start[2]};
  if (!apex.empty()) start = {apex[0], apex[1], apex[2]};

  const lipm::LipmParams params = rc.params();
  auto roll_once = [&] {
    return rl::evaluate_policy(ck.value().policy, start, steps, params, rc.terminal);
  };

  double wall = 0.0;
  rl::Rollout rollout;
  if (c.bench) {
    std::vector<double> times(100);
    for (auto& t : times) {
      const double t0 = now_s();
      rollout = roll_once();
      t = now_s() - t0;
    }
    std::nth_element(times.begin(), times.begin() + 50, times.end());
    wall = times[50];
  } else {
    const double t0 = now_s();
    rollout = roll_once();
    wall = now_s() - t0;
  }

  std::printf("# step  p_x      p_y      t_switch  t_apex\n");
  for (std::size_t i = 0; i < rollout.plans.size(); ++i) {
    std::printf("%5zu  %7.4f  %7.4f  %8.4f  %7.4f\n", i,
                rollout.actions[i].p_x, rollout.plans[i].p_y,
                rollout.plans[i].t_switch, rollout.plans[i].t_apex);
  }
  std::printf("%s wall %.3f ms for %d steps\n", c.bench ? "median" : "planned",
              wall * 1e3, rollout.steps);
  if (fail_write(trace::write_plan_json(join(c.out_dir, "plan.json"), meta,
                                        rollout, wall),
                 &code)) {
    return code;
  }
  if (rollout.steps < steps) {
    std::fprintf(stderr, "terminal after %d of %d steps\n", rollout.steps, steps);
    return kExitDomain;
  }
  if (c.bench && wall >= 1e-3) {
    std::fprintf(stderr, "bench bound missed: %.3f ms median >= 1 ms\n", wall * 1e3);
    return kExitDomain;
  }
  return kExitOk;
}

int cmd_walk(const Common& c, const std::string& ckpt_path,
             const std::string& scenario_path) {
  cfg::RunConfig rc;
  trace::FileMeta meta;
  int code = kExitOk;
  if (!setup(c, &rc, &meta, &code)) return code;
  auto ck = load_ckpt(ckpt_path);
  if (!ck.ok()) return ck.error();
  auto sc = cfg::load_scenario(scenario_path);
  if (!sc.ok()) {
    std::fprintf(stderr, "scenario error: %s\n", sc.error().message.c_str());
    return kExitUsage;
  }

  lipm::ApexState start{sc.value().start[0], sc.value().start[1], sc.value().start[2]};
  sim::WalkTrace tr = sim::walk_scenario(ck.value().policy, start, sc.value().turns,
                                         sc.value().disturbances, rc.walk_config());
  std::printf("scenario %s: steps %d/%zu exchanges %d fell %s duration %.3f s\n",
              sc.value().name.c_str(), tr.steps_completed, sc.value().turns.size(),
              tr.exchanges, tr.fell ? "true" : "false", tr.duration);
  if (want_csv(c) &&
      fail_write(trace::write_walk_csv(join(c.out_dir, "walk.csv"), meta, tr), &code)) {
    return code;
  }
  if (want_json(c) &&
      fail_write(trace::write_walk_json(join(c.out_dir, "walk.json"), meta, tr), &code)) {
    return code;
  }
  return tr.fell ? kExitDomain : kExitOk;
}

int cmd_track(const Common& c, bool with_only, bool without_only) {
  cfg::RunConfig rc;
  trace::FileMeta meta;
  int code = kExitOk;
  if (!setup(c, &rc, &meta, &code)) return code;

  // Both variants always run; the comparison is the point of the command.
  // The flags pick which line leads the report.
  const sim::ArmTrackConfig acfg = rc.arm_config();
  sim::ArmTrackResult with = sim::manipulator_tracking(true, acfg);
  sim::ArmTrackResult without = sim::manipulator_tracking(false, acfg);
  if (!without_only) {
    std::printf("rms with jdot    %.6e (max %.6e)\n", with.rms_error, with.max_error);
  }
  if (!with_only) {
    std::printf("rms without jdot %.6e (max %.6e)\n", without.rms_error, without.max_error);
  }
  if (!with_only && !without_only) {
    std::printf("ratio without/with %.2f\n",
                with.rms_error > 0 ? without.rms_error / with.rms_error : 0.0);
  }
  if (want_csv(c) &&
      fail_write(trace::write_track_csv(join(c.out_dir, "track.csv"), meta, with, without),
                 &code)) {
    return code;
  }
  if (want_json(c) &&
      fail_write(trace::write_track_json(join(c.out_dir, "track.json"), meta, with, without),
                 &code)) {
    return code;
  }
  return kExitOk;
}

int cmd_sweep(const Common& c, const std::string& ckpt_path, double force_n,
              double push_duration_s, double mass_kg) {
  cfg::RunConfig rc;
  trace::FileMeta meta;
  int code = kExitOk;
  if (!setup(c, &rc, &meta, &code)) return code;
  auto ck = load_ckpt(ckpt_path);
  if (!ck.ok()) return ck.error();

  const rbf::PolicyNet& policy = ck.value().policy;
  const sim::WalkConfig wc = rc.walk_config();
  lipm::ApexState start{rc.walk.start[0], rc.walk.start[1], rc.walk.start[2]};
  const double dv = sim::push_delta_v(force_n, push_duration_s, mass_kg);

  // Undisturbed run fixes the push instant: the sixth stance exchange, well
  // inside steady walking.
  sim::WalkTrace base = sim::walk_scenario(policy, start, 40, 0.0, {}, wc);
  if (base.steps.size() < 7) {
    std::fprintf(stderr, "policy cannot sustain the undisturbed gait\n");
    return kExitDomain;
  }
  const double t_push = base.steps[5].t_switch_abs;

  // One worker per direction; runs are isolated and deterministic, results
  // aggregate in direction order.
  std::vector<std::future<trace::SweepRow>> jobs;
  for (int k = 0; k < 8; ++k) {
    jobs.push_back(std::async(std::launch::async, [&, k] {
      const double th = k * M_PI / 4.0;
      trace::SweepRow row;
      row.direction_deg = k * 45.0;
      row.delta_v = dv * Eigen::Vector2d(std::cos(th), std::sin(th));
      std::vector<sim::Disturbance> d{{t_push, row.delta_v}};
      sim::WalkTrace tr = sim::walk_scenario(policy, start, 40, 0.0, d, wc);
      row.fell = tr.fell;
      for (const auto& s : tr.steps) {
        if (s.switched && s.t_switch_abs > t_push) ++row.steps_after;
      }
      row.recovered = !tr.fell && row.steps_after >= 15;
      return row;
    }));
  }
  std::vector<trace::SweepRow> rows;
  int recovered = 0;
  for (auto& j : jobs) {
    rows.push_back(j.get());
    recovered += rows.back().recovered ? 1 : 0;
  }

  std::printf("push %.0f N x %.2f s on %.1f kg -> dv %.3f m/s at t=%.3f s: "
              "recovered %d/8\n",
              force_n, push_duration_s, mass_kg, dv, t_push, recovered);
  if (want_csv(c) &&
      fail_write(trace::write_sweep_csv(join(c.out_dir, "sweep.csv"), meta, rows), &code)) {
    return code;
  }
  if (want_json(c) &&
      fail_write(trace::write_sweep_json(join(c.out_dir, "sweep.json"), meta, rows), &code)) {
    return code;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phase-space stride planning and whole-body control scenarios"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  Common train_c, plan_c, walk_c, track_c, sweep_c;

  CLI::App* train = app.add_subcommand("train", "train the stride policy");
  add_common(train, &train_c);

  CLI::App* plan = app.add_subcommand("plan", "greedy multi-step footstep plan");
  add_common(plan, &plan_c);
  std::string plan_ckpt;
  std::vector<double> plan_apex;
  int plan_steps = 0;
  plan->add_option("--checkpoint", plan_ckpt, "trained policy checkpoint")->required();
  plan->add_option("--apex", plan_apex,
                   "start apex: lateral offset, forward speed, lateral speed")
      ->expected(3);
  plan->add_option("--steps", plan_steps, "steps to plan (default from config)");

  CLI::App* walk = app.add_subcommand("walk", "run a scripted walking scenario");
  add_common(walk, &walk_c);
  std::string walk_ckpt, walk_scn;
  walk->add_option("--checkpoint", walk_ckpt, "trained policy checkpoint")->required();
  walk->add_option("--scenario", walk_scn, "scenario JSON file")->required();

  CLI::App* track = app.add_subcommand("track", "manipulator line-tracking comparison");
  add_common(track, &track_c);
  bool with_only = false, without_only = false;
  track->add_flag("--with-jdot", with_only, "report the velocity-product-compensated run");
  track->add_flag("--without-jdot", without_only, "report the uncompensated run");

  CLI::App* sweep = app.add_subcommand("sweep", "8-direction push robustness sweep");
  add_common(sweep, &sweep_c);
  std::string sweep_ckpt;
  double force_n = 520.0, push_dur = 0.1, mass_kg = 135.9;
  sweep->add_option("--checkpoint", sweep_ckpt, "trained policy checkpoint")->required();
  sweep->add_option("--force", force_n, "push force, N")->capture_default_str();
  sweep->add_option("--push-duration", push_dur, "push duration, s")->capture_default_str();
  sweep->add_option("--mass", mass_kg, "reference mass for the velocity-jump mapping, kg")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (train->parsed()) return cmd_train(train_c);
  if (plan->parsed()) return cmd_plan(plan_c, plan_ckpt, plan_apex, plan_steps);
  if (walk->parsed()) return cmd_walk(walk_c, walk_ckpt, walk_scn);
  if (track->parsed()) return cmd_track(track_c, with_only, without_only);
  if (sweep->parsed()) return cmd_sweep(sweep_c, sweep_ckpt, force_n, push_dur, mass_kg);
  return kExitUsage;
}
