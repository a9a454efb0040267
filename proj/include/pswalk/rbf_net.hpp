#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pswalk/result.hpp"
#include "pswalk/rng.hpp"

namespace pswalk::rbf {

// Regular grid of Gaussians over the 3d apex state (lateral offset, forward
// apex speed, lateral apex speed) plus a constant bias entry at index 0.
// Feature i for state s is exp(-sum_a (s_a - c_a)^2 / (2 width_a^2)).
struct RbfGrid {
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Zero();
  std::array<int, 3> counts = {0, 0, 0};
  Eigen::Vector3d spacing = Eigen::Vector3d::Zero();
  Eigen::Vector3d widths = Eigen::Vector3d::Zero();
  // Features farther than this many widths (in normalized radius) are exactly
  // zero; exp(-cutoff^2/2) at the default is below double roundoff of the
  // bias entry.
  double cutoff_widths = 8.0;

  int feature_dim() const { return counts[0] * counts[1] * counts[2] + 1; }
  bool valid() const;
  static RbfGrid make_default();
};

// Sparse feature evaluation: idx[0] is always the bias entry (value 1).
struct SparseFeatures {
  std::vector<int> idx;
  std::vector<double> val;
  int dim = 0;

  Eigen::VectorXd dense() const;
  double squared_norm() const;
};

void features_into(const RbfGrid& grid, const Eigen::Vector3d& s,
                   SparseFeatures* out);
SparseFeatures features(const RbfGrid& grid, const Eigen::Vector3d& s);

struct ValueNet {
  RbfGrid grid;
  Eigen::VectorXd w;  // feature_dim entries

  static ValueNet zeros(const RbfGrid& grid);
};

double value(const ValueNet& net, const SparseFeatures& f);
double value(const ValueNet& net, const Eigen::Vector3d& s);

struct ActionBounds {
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Zero();

  static ActionBounds make_default();
};

// Independent truncated normals per action axis.
struct TruncatedNormal3 {
  Eigen::Vector3d mean;
  Eigen::Vector3d std;
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;
};

// Row-major so one feature's six outputs sit together in memory; the
// training loop updates rows of active features.
using PolicyMatrix = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;

// Linear policy head over the shared features. Column j < 3 drives the mean
// of axis j (midpoint offset, clamped into bounds); column 3 + j drives the
// standard deviation through a scaled softplus with a positive floor.
// Zero weights give means at the range midpoints and std equal to
// std_init_frac * range. The constant feature feeds the spread columns only:
// exploration narrows globally, but the means stay local to their radial
// cells so no single weight can shift the whole action surface.
struct PolicyNet {
  RbfGrid grid;
  ActionBounds bounds;
  PolicyMatrix theta;  // feature_dim x 6
  double std_init_frac = 0.25;
  double std_min_frac = 1e-3;
  // Slope gain inside the std softplus: std = floor + scale*softplus(gain*raw).
  // Leaves std(0) and the floor untouched but scales how fast the std channel
  // responds relative to the mean channel, whose slope is 1.
  double std_gain = 1.0;

  static PolicyNet zeros(const RbfGrid& grid, const ActionBounds& bounds);
  Eigen::Vector3d std_scale() const;
  Eigen::Vector3d std_min() const;
};

// Distribution plus the pre-activation values needed for exact gradients.
struct PolicyEval {
  TruncatedNormal3 dist;
  Eigen::Vector3d raw_mean;
  Eigen::Vector3d raw_std;
};

PolicyEval policy_eval(const PolicyNet& net, const SparseFeatures& f);
TruncatedNormal3 policy_distribution(const PolicyNet& net,
                                     const Eigen::Vector3d& s);

// Inverse-CDF draw; consumes exactly three uniforms from rng.
Eigen::Vector3d sample_action(const TruncatedNormal3& dist, RngStream& rng);

enum class PolicyError {
  OutOfSupport,  // action outside the closed bound box
};

Result<double, PolicyError> log_prob(const TruncatedNormal3& dist,
                                     const Eigen::Vector3d& a);

// Score of log pi wrt the six pre-activation outputs (means then stds),
// including the dependence of the truncation normalizer on both. The full
// weight gradient is the outer product features x score.
Result<Eigen::Matrix<double, 6, 1>, PolicyError> log_prob_score(
    const PolicyNet& net, const PolicyEval& eval, const Eigen::Vector3d& a);

// Trainer-side variant: where the clamp saturates a mean, the true gradient
// is zero and ascent can never pull the mean back into the box. This version
// passes the mean gradient at saturation when (and only when) it points back
// inside — projected ascent on the action box. Identical to log_prob_score on
// unsaturated axes.
Result<Eigen::Matrix<double, 6, 1>, PolicyError> log_prob_score_recoverable(
    const PolicyNet& net, const PolicyEval& eval, const Eigen::Vector3d& a);

// Dense gradient of log pi wrt theta; test/diagnostic convenience.
Result<Eigen::MatrixXd, PolicyError> log_prob_grad_dense(
    const PolicyNet& net, const Eigen::Vector3d& s, const Eigen::Vector3d& a);

// Standard normal CDF and its inverse (used by the inverse-CDF sampler).
double normal_cdf(double z);
double normal_icdf(double p);

struct Checkpoint {
  ValueNet value;
  PolicyNet policy;
};

enum class IoError {
  OpenFailed,
  BadMagic,
  BadVersion,
  Truncated,
  InconsistentShapes,
};

const char* to_string(IoError e);

// Binary checkpoint: fixed header (magic, version, grid geometry, action
// bounds) followed by the value weights and the policy weight matrix, all
// little-endian f64. Layout documented in docs/file_formats.md.
Result<bool, IoError> save_checkpoint(const std::string& path,
                                      const Checkpoint& ckpt);
Result<Checkpoint, IoError> load_checkpoint(const std::string& path);

}  // namespace pswalk::rbf
