#include "pswalk/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pswalk::cfg {

using nlohmann::json;

namespace {

// Typed extraction from one JSON object with consumed-key tracking. Only the
// first error is kept; everything downstream of it is a no-op so messages
// stay specific.
class Reader {
 public:
  Reader(const json& j, std::string path, std::string* err)
      : j_(j), path_(std::move(path)), err_(err) {
    if (err_->empty() && !j_.is_object()) {
      *err_ = path_ + ": expected an object";
    }
  }

  void get(const char* key, double* out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number()) return fail(key, "expected a number");
    *out = v->get<double>();
  }

  void get(const char* key, int* out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number_integer()) return fail(key, "expected an integer");
    *out = v->get<int>();
  }

  void get(const char* key, std::uint64_t* out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
      return fail(key, "expected a non-negative integer");
    }
    *out = v->get<std::uint64_t>();
  }

  void get(const char* key, std::string* out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_string()) return fail(key, "expected a string");
    *out = v->get<std::string>();
  }

  void get(const char* key, Eigen::Vector3d* out) { fixed(key, out->data(), 3); }
  void get(const char* key, Eigen::Vector2d* out) { fixed(key, out->data(), 2); }

  void get(const char* key, std::array<int, 3>* out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_array() || v->size() != 3) {
      return fail(key, "expected an array of 3 integers");
    }
    for (int i = 0; i < 3; ++i) {
      if (!(*v)[i].is_number_integer()) {
        return fail(key, "expected an array of 3 integers");
      }
      (*out)[i] = (*v)[i].get<int>();
    }
  }

  void get(const char* key, std::vector<double>* out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_array()) return fail(key, "expected an array of numbers");
    out->clear();
    for (const auto& e : *v) {
      if (!e.is_number()) return fail(key, "expected an array of numbers");
      out->push_back(e.get<double>());
    }
  }

  // Nested object; returns nullptr when absent (defaults apply) or on error.
  const json* child(const char* key) {
    const json* v = take(key);
    if (!v) return nullptr;
    if (!v->is_object()) {
      fail(key, "expected an object");
      return nullptr;
    }
    return v;
  }

  const json* array(const char* key) {
    const json* v = take(key);
    if (!v) return nullptr;
    if (!v->is_array()) {
      fail(key, "expected an array");
      return nullptr;
    }
    return v;
  }

  // Every key the caller never asked for is a rejection, reported with its
  // full path so nested typos are findable.
  void finish() {
    if (!err_->empty() || !j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        *err_ = path_ + "." + it.key() + ": unknown key";
        return;
      }
    }
  }

 private:
  const json* take(const char* key) {
    if (!err_->empty() || !j_.is_object()) return nullptr;
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void fail(const char* key, const char* what) {
    if (err_->empty()) *err_ = path_ + "." + key + ": " + what;
  }

  void fixed(const char* key, double* out, int n) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_array() || static_cast<int>(v->size()) != n) {
      return fail(key, "expected a fixed-length number array");
    }
    for (int i = 0; i < n; ++i) {
      if (!(*v)[i].is_number()) {
        return fail(key, "expected a fixed-length number array");
      }
      out[i] = (*v)[i].get<double>();
    }
  }

  const json& j_;
  std::string path_;
  std::string* err_;
  std::set<std::string> seen_;
};

void parse_into(const json& j, RunConfig* c, std::string* err) {
  Reader top(j, "config", err);
  if (const json* p = top.child("pendulum")) {
    Reader r(*p, "config.pendulum", err);
    r.get("com_height", &c->pendulum.com_height);
    r.get("gravity", &c->pendulum.gravity);
    r.finish();
  }
  if (const json* p = top.child("grid")) {
    Reader r(*p, "config.grid", err);
    r.get("lo", &c->grid.lo);
    r.get("hi", &c->grid.hi);
    r.get("counts", &c->grid.counts);
    r.get("spacing", &c->grid.spacing);
    r.get("widths", &c->grid.widths);
    r.get("cutoff_widths", &c->grid.cutoff_widths);
    r.finish();
  }
  if (const json* p = top.child("action_bounds")) {
    Reader r(*p, "config.action_bounds", err);
    r.get("lo", &c->action_bounds.lo);
    r.get("hi", &c->action_bounds.hi);
    r.finish();
  }
  if (const json* p = top.child("learning")) {
    Reader r(*p, "config.learning", err);
    r.get("alpha", &c->learning.alpha);
    r.get("beta", &c->learning.beta);
    r.get("gamma", &c->learning.gamma);
    r.get("lambda_theta", &c->learning.lambda_theta);
    r.get("lambda_w", &c->learning.lambda_w);
    r.get("max_iterations", &c->learning.max_iterations);
    r.get("convergence_std", &c->learning.convergence_std);
    r.get("episode_cap", &c->learning.episode_cap);
    r.get("probe_every", &c->learning.probe_every);
    r.get("survival_probe_every", &c->learning.survival_probe_every);
    r.get("std_gain", &c->std_gain);
    r.finish();
  }
  if (const json* p = top.child("reward")) {
    Reader r(*p, "config.reward", err);
    r.get("xdot_nom", &c->reward.xdot_nom);
    r.get("py_nom", &c->reward.py_nom);
    r.get("w_py", &c->reward.w_py);
    r.get("terminal_penalty", &c->reward.terminal_penalty);
    r.finish();
  }
  if (const json* p = top.child("terminal")) {
    Reader r(*p, "config.terminal", err);
    r.get("t_apex_min", &c->terminal.t_apex_min);
    r.get("t_switch_min", &c->terminal.t_switch_min);
    r.get("py_lo", &c->terminal.py_lo);
    r.get("py_hi", &c->terminal.py_hi);
    r.finish();
  }
  if (const json* p = top.child("replan")) {
    Reader r(*p, "config.replan", err);
    r.get("error_threshold", &c->replan.error_threshold);
    r.get("persistence", &c->replan.persistence);
    r.get("blend_gamma", &c->replan.blend_gamma);
    r.get("velocity_weight", &c->replan.velocity_weight);
    r.finish();
  }
  if (const json* p = top.child("walk")) {
    Reader r(*p, "config.walk", err);
    r.get("start", &c->walk.start);
    r.get("sample_dt", &c->walk.sample_dt);
    r.get("max_time", &c->walk.max_time);
    r.finish();
  }
  if (const json* p = top.child("plan")) {
    Reader r(*p, "config.plan", err);
    r.get("steps", &c->plan.steps);
    r.finish();
  }
  if (const json* p = top.child("arm")) {
    Reader r(*p, "config.arm", err);
    r.get("amplitude", &c->arm.amplitude);
    r.get("frequency_hz", &c->arm.frequency_hz);
    r.get("duration", &c->arm.duration);
    r.get("kp", &c->arm.kp);
    r.get("kd", &c->arm.kd);
    r.finish();
  }
  top.get("seed", &c->seed);
  top.finish();
}

void validate(const RunConfig& c, std::string* err) {
  if (!err->empty()) return;
  auto reject = [err](const char* what) {
    if (err->empty()) *err = std::string("config: ") + what;
  };
  if (!(c.pendulum.com_height > 0.0)) reject("pendulum.com_height must be > 0");
  if (!(c.pendulum.gravity > 0.0)) reject("pendulum.gravity must be > 0");
  if (!c.grid.valid()) reject("grid: bounds, counts and widths are inconsistent");
  for (int i = 0; i < 3; ++i) {
    if (!(c.action_bounds.lo[i] < c.action_bounds.hi[i])) {
      reject("action_bounds: lo must be strictly below hi");
    }
  }
  if (!(c.learning.alpha > 0.0) || !(c.learning.beta > 0.0)) {
    reject("learning: step sizes must be > 0");
  }
  if (!(c.learning.gamma > 0.0 && c.learning.gamma <= 1.0)) {
    reject("learning.gamma must be in (0, 1]");
  }
  if (c.learning.max_iterations < 0) reject("learning.max_iterations must be >= 0");
  if (c.learning.episode_cap < 1) reject("learning.episode_cap must be >= 1");
  if (c.learning.probe_every < 1 || c.learning.survival_probe_every < 1) {
    reject("learning: probe cadences must be >= 1");
  }
  if (!(c.std_gain > 0.0)) reject("learning.std_gain must be > 0");
  if (!(c.replan.error_threshold > 0.0)) reject("replan.error_threshold must be > 0");
  if (!(c.replan.blend_gamma >= 0.0 && c.replan.blend_gamma <= 1.0)) {
    reject("replan.blend_gamma must be in [0, 1]");
  }
  if (!(c.walk.sample_dt > 0.0)) reject("walk.sample_dt must be > 0");
  if (!(c.walk.max_time > 0.0)) reject("walk.max_time must be > 0");
  if (c.plan.steps < 1) reject("plan.steps must be >= 1");
  if (!(c.arm.duration > 0.0)) reject("arm.duration must be > 0");
}

json arr(const Eigen::Vector3d& v) { return json{v[0], v[1], v[2]}; }

json to_json(const RunConfig& c) {
  return json{
      {"pendulum",
       {{"com_height", c.pendulum.com_height}, {"gravity", c.pendulum.gravity}}},
      {"grid",
       {{"lo", arr(c.grid.lo)},
        {"hi", arr(c.grid.hi)},
        {"counts", {c.grid.counts[0], c.grid.counts[1], c.grid.counts[2]}},
        {"spacing", arr(c.grid.spacing)},
        {"widths", arr(c.grid.widths)},
        {"cutoff_widths", c.grid.cutoff_widths}}},
      {"action_bounds",
       {{"lo", arr(c.action_bounds.lo)}, {"hi", arr(c.action_bounds.hi)}}},
      {"learning",
       {{"alpha", c.learning.alpha},
        {"beta", c.learning.beta},
        {"gamma", c.learning.gamma},
        {"lambda_theta", c.learning.lambda_theta},
        {"lambda_w", c.learning.lambda_w},
        {"max_iterations", c.learning.max_iterations},
        {"convergence_std", c.learning.convergence_std},
        {"episode_cap", c.learning.episode_cap},
        {"probe_every", c.learning.probe_every},
        {"survival_probe_every", c.learning.survival_probe_every},
        {"std_gain", c.std_gain}}},
      {"reward",
       {{"xdot_nom", c.reward.xdot_nom},
        {"py_nom", c.reward.py_nom},
        {"w_py", c.reward.w_py},
        {"terminal_penalty", c.reward.terminal_penalty}}},
      {"terminal",
       {{"t_apex_min", c.terminal.t_apex_min},
        {"t_switch_min", c.terminal.t_switch_min},
        {"py_lo", c.terminal.py_lo},
        {"py_hi", c.terminal.py_hi}}},
      {"replan",
       {{"error_threshold", c.replan.error_threshold},
        {"persistence", c.replan.persistence},
        {"blend_gamma", c.replan.blend_gamma},
        {"velocity_weight", c.replan.velocity_weight}}},
      {"walk",
       {{"start", arr(c.walk.start)},
        {"sample_dt", c.walk.sample_dt},
        {"max_time", c.walk.max_time}}},
      {"plan", {{"steps", c.plan.steps}}},
      {"arm",
       {{"amplitude", c.arm.amplitude},
        {"frequency_hz", c.arm.frequency_hz},
        {"duration", c.arm.duration},
        {"kp", c.arm.kp},
        {"kd", c.arm.kd}}},
      {"seed", c.seed},
  };
}

Result<json, ConfigError> parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    return ConfigError{e.what()};
  }
}

Result<std::string, ConfigError> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return ConfigError{path + ": cannot open"};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

lipm::LipmParams RunConfig::params() const {
  return lipm::LipmParams::from_height(pendulum.com_height, pendulum.gravity);
}

sim::WalkConfig RunConfig::walk_config() const {
  sim::WalkConfig w;
  w.params = params();
  w.term = terminal;
  w.replan = replan;
  w.sample_dt = walk.sample_dt;
  w.max_time = walk.max_time;
  return w;
}

sim::ArmTrackConfig RunConfig::arm_config() const {
  sim::ArmTrackConfig a;
  a.amplitude = arm.amplitude;
  a.omega = 2.0 * M_PI * arm.frequency_hz;
  a.duration = arm.duration;
  a.kp = arm.kp;
  a.kd = arm.kd;
  return a;
}

rl::LearningConfig RunConfig::learning_config() const {
  rl::LearningConfig l = learning;
  l.seed = seed;
  return l;
}

rl::TrainSetup initial_nets(const RunConfig& c) {
  rl::TrainSetup s{rbf::ValueNet::zeros(c.grid),
                   rbf::PolicyNet::zeros(c.grid, c.action_bounds)};
  s.value.w[0] = c.reward.terminal_penalty;
  s.policy.std_gain = c.std_gain;
  return s;
}

Result<RunConfig, ConfigError> parse_config(const std::string& json_text) {
  auto parsed = parse_text(json_text);
  if (!parsed.ok()) return parsed.error();
  RunConfig c;
  std::string err;
  parse_into(parsed.value(), &c, &err);
  validate(c, &err);
  if (!err.empty()) return ConfigError{err};
  return c;
}

Result<RunConfig, ConfigError> load_config(const std::string& path) {
  auto text = slurp(path);
  if (!text.ok()) return text.error();
  auto c = parse_config(text.value());
  if (!c.ok()) return ConfigError{path + ": " + c.error().message};
  return c;
}

std::string dump_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& c) {
  return fnv1a(to_json(c).dump());
}

std::string config_hash_hex(const RunConfig& c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                static_cast<unsigned long long>(config_hash(c)));
  return buf;
}

Result<Scenario, ConfigError> parse_scenario(const std::string& json_text) {
  auto parsed = parse_text(json_text);
  if (!parsed.ok()) return parsed.error();
  Scenario s;
  std::string err;
  Reader top(parsed.value(), "scenario", &err);
  top.get("name", &s.name);
  top.get("start", &s.start);
  std::vector<double> deg;
  top.get("turns_deg", &deg);
  if (const json* d = top.array("disturbances")) {
    for (std::size_t i = 0; i < d->size(); ++i) {
      sim::Disturbance dist;
      Reader r((*d)[i], "scenario.disturbances[" + std::to_string(i) + "]",
               &err);
      r.get("time", &dist.time);
      r.get("delta_v", &dist.delta_v);
      r.finish();
      s.disturbances.push_back(dist);
    }
  }
  top.finish();
  if (err.empty() && deg.empty()) err = "scenario.turns_deg: must list one turn per step";
  if (!err.empty()) return ConfigError{err};
  s.turns.reserve(deg.size());
  for (double d : deg) s.turns.push_back(d * M_PI / 180.0);
  return s;
}

Result<Scenario, ConfigError> load_scenario(const std::string& path) {
  auto text = slurp(path);
  if (!text.ok()) return text.error();
  auto s = parse_scenario(text.value());
  if (!s.ok()) return ConfigError{path + ": " + s.error().message};
  return s;
}

}  // namespace pswalk::cfg
