#include "pswalk/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace pswalk::trace {

using nlohmann::json;

namespace {

json meta_json(const FileMeta& m) {
  return json{{"tool", m.tool}, {"version", m.version},
              {"config_hash", m.config_hash}};
}

// Leading comment lines of every CSV file; the column row follows.
void csv_header(std::ofstream& out, const FileMeta& m) {
  out << "# " << m.tool << " " << m.version << "\n";
  out << "# config " << m.config_hash << "\n";
}

WriteResult write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return WriteError{path + ": cannot open for writing"};
  out << text;
  out.flush();
  if (!out) return WriteError{path + ": write failed"};
  return true;
}

WriteResult write_json_doc(const std::string& path, json doc) {
  return write_text(path, doc.dump(2) + "\n");
}

json arr2(const Eigen::Vector2d& v) { return json{v[0], v[1]}; }

json apex_json(const lipm::ApexState& s) {
  return json{s.y_apex, s.xdot_apex, s.ydot_apex};
}

json track_summary(const sim::ArmTrackResult& r) {
  return json{{"used_jdot", r.used_jdot},
              {"rms_error", r.rms_error},
              {"max_error", r.max_error}};
}

json sweep_row_json(const SweepRow& r) {
  return json{{"direction_deg", r.direction_deg},
              {"delta_v", arr2(r.delta_v)},
              {"recovered", r.recovered},
              {"steps_after", r.steps_after},
              {"fell", r.fell}};
}

}  // namespace

const char* to_string(sim::WalkEventKind k) {
  switch (k) {
    case sim::WalkEventKind::Disturbance: return "disturbance";
    case sim::WalkEventKind::Replan: return "replan";
    case sim::WalkEventKind::Fall: return "fall";
  }
  return "?";
}

WriteResult write_training_report(const std::string& path, const FileMeta& meta,
                                  const rl::TrainingReport& report,
                                  std::uint64_t seed) {
  json probe = json::array();
  for (const auto& [it, v] : report.probe_std) probe.push_back(json{it, v});
  json survival = json::array();
  for (const auto& [it, v] : report.mean_survival)
    survival.push_back(json{it, v});
  return write_json_doc(path, json{{"meta", meta_json(meta)},
                                   {"seed", seed},
                                   {"iterations", report.iterations},
                                   {"converged", report.converged},
                                   {"final_mean_std", report.final_mean_std},
                                   {"wall_time_s", report.wall_time_s},
                                   {"total_steps", report.total_steps},
                                   {"probe_std", probe},
                                   {"mean_survival", survival}});
}

WriteResult write_plan_json(const std::string& path, const FileMeta& meta,
                            const rl::Rollout& rollout, double wall_time_s) {
  json steps = json::array();
  for (std::size_t i = 0; i < rollout.plans.size(); ++i) {
    const auto& p = rollout.plans[i];
    const auto& a = rollout.actions[i];
    steps.push_back(json{{"index", static_cast<int>(i)},
                         {"p_x", a.p_x},
                         {"p_y", p.p_y},
                         {"t_switch", p.t_switch},
                         {"t_apex", p.t_apex},
                         {"apex", apex_json(rollout.apexes[i + 1])}});
  }
  return write_json_doc(
      path, json{{"meta", meta_json(meta)},
                 {"start", apex_json(rollout.apexes.front())},
                 {"steps_planned", rollout.steps},
                 {"terminated", rollout.fell},
                 {"wall_time_s", wall_time_s},
                 {"steps", steps}});
}

WriteResult write_walk_csv(const std::string& path, const FileMeta& meta,
                           const sim::WalkTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return WriteError{path + ": cannot open for writing"};
  csv_header(out, meta);
  out << "t,x,xdot,y,ydot,foot_x,foot_y,heading,event\n";
  // Events land on the nearest sample row at or after their instant.
  std::vector<std::string> tags(trace.samples.size());
  const double dt = trace.samples.size() > 1
                        ? trace.samples[1].t - trace.samples[0].t
                        : 1.0;
  for (const auto& e : trace.events) {
    std::size_t idx = static_cast<std::size_t>(std::lround(e.t / dt));
    if (idx >= tags.size()) idx = tags.empty() ? 0 : tags.size() - 1;
    if (!tags.empty()) {
      if (!tags[idx].empty()) tags[idx] += ';';
      tags[idx] += to_string(e.kind);
    }
  }
  char line[256];
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const auto& s = trace.samples[i];
    std::snprintf(line, sizeof line,
                  "%.6f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,", s.t,
                  s.com_pos.x(), s.com_vel.x(), s.com_pos.y(), s.com_vel.y(),
                  s.stance_foot.x(), s.stance_foot.y(), s.heading);
    out << line << tags[i] << "\n";
  }
  out.flush();
  if (!out) return WriteError{path + ": write failed"};
  return true;
}

WriteResult write_walk_json(const std::string& path, const FileMeta& meta,
                            const sim::WalkTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    steps.push_back(json{{"index", s.index},
                         {"replanned", s.replanned},
                         {"turn", s.turn},
                         {"heading", s.heading},
                         {"stance_foot", arr2(s.stance_foot)},
                         {"next_foot", arr2(s.next_foot)},
                         {"t_begin", s.t_begin},
                         {"t_switch", s.t_switch_abs},
                         {"t_end", s.t_end_abs},
                         {"switched", s.switched},
                         {"query", apex_json(s.query)},
                         {"action",
                          {s.action.p_x, s.action.xdot_apex_des,
                           s.action.ydot_apex_des}}});
  }
  json events = json::array();
  for (const auto& e : trace.events) {
    json ev{{"kind", to_string(e.kind)},
            {"t", e.t},
            {"step_index", e.step_index}};
    if (e.kind == sim::WalkEventKind::Disturbance) {
      ev["delta_v"] = arr2(e.delta_v);
    } else if (e.kind == sim::WalkEventKind::Replan) {
      ev["error"] = e.error;
      ev["wall_time_s"] = e.wall_time_s;
    }
    events.push_back(ev);
  }
  return write_json_doc(path,
                        json{{"meta", meta_json(meta)},
                             {"summary",
                              {{"fell", trace.fell},
                               {"steps_completed", trace.steps_completed},
                               {"exchanges", trace.exchanges},
                               {"duration", trace.duration},
                               {"samples", trace.samples.size()}}},
                             {"steps", steps},
                             {"events", events}});
}

WriteResult write_track_csv(const std::string& path, const FileMeta& meta,
                            const sim::ArmTrackResult& with_jdot,
                            const sim::ArmTrackResult& without_jdot) {
  if (with_jdot.samples.size() != without_jdot.samples.size()) {
    return WriteError{path + ": runs have mismatched sample counts"};
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) return WriteError{path + ": cannot open for writing"};
  csv_header(out, meta);
  out << "t,x_des,y_des,x_with,y_with,x_without,y_without\n";
  char line[256];
  for (std::size_t i = 0; i < with_jdot.samples.size(); ++i) {
    const auto& a = with_jdot.samples[i];
    const auto& b = without_jdot.samples[i];
    std::snprintf(line, sizeof line, "%.6f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  a.t, a.x_des.x(), a.x_des.y(), a.x.x(), a.x.y(), b.x.x(),
                  b.x.y());
    out << line;
  }
  out.flush();
  if (!out) return WriteError{path + ": write failed"};
  return true;
}

WriteResult write_track_json(const std::string& path, const FileMeta& meta,
                             const sim::ArmTrackResult& with_jdot,
                             const sim::ArmTrackResult& without_jdot) {
  const double ratio = with_jdot.rms_error > 0.0
                           ? without_jdot.rms_error / with_jdot.rms_error
                           : std::numeric_limits<double>::infinity();
  return write_json_doc(path, json{{"meta", meta_json(meta)},
                                   {"with_jdot", track_summary(with_jdot)},
                                   {"without_jdot", track_summary(without_jdot)},
                                   {"rms_ratio", ratio}});
}

WriteResult write_sweep_csv(const std::string& path, const FileMeta& meta,
                            const std::vector<SweepRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return WriteError{path + ": cannot open for writing"};
  csv_header(out, meta);
  out << "direction_deg,delta_v_x,delta_v_y,recovered,steps_after,fell\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%.1f,%.9g,%.9g,%d,%d,%d\n",
                  r.direction_deg, r.delta_v.x(), r.delta_v.y(),
                  r.recovered ? 1 : 0, r.steps_after, r.fell ? 1 : 0);
    out << line;
  }
  out.flush();
  if (!out) return WriteError{path + ": write failed"};
  return true;
}

WriteResult write_sweep_json(const std::string& path, const FileMeta& meta,
                             const std::vector<SweepRow>& rows) {
  json jrows = json::array();
  int recovered = 0;
  for (const auto& r : rows) {
    jrows.push_back(sweep_row_json(r));
    recovered += r.recovered ? 1 : 0;
  }
  return write_json_doc(
      path, json{{"meta", meta_json(meta)},
                 {"summary",
                  {{"directions", rows.size()}, {"recovered", recovered}}},
                 {"rows", jrows}});
}

}  // namespace pswalk::trace
