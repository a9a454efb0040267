#include "pswalk/rbf_net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace pswalk::rbf {

bool RbfGrid::valid() const {
  for (int a = 0; a < 3; ++a) {
    if (counts[a] < 1 || spacing[a] <= 0.0 || widths[a] <= 0.0) return false;
    const double span = lo[a] + (counts[a] - 1) * spacing[a];
    if (std::abs(span - hi[a]) > 1e-9) return false;
  }
  return cutoff_widths > 0.0;
}

RbfGrid RbfGrid::make_default() {
  RbfGrid g;
  g.lo = {-0.14, 0.03, -0.55};
  g.hi = {0.2, 0.61, 0.55};
  g.counts = {18, 30, 56};
  g.spacing = {0.02, 0.02, 0.02};
  g.widths = g.spacing;
  return g;
}

Eigen::VectorXd SparseFeatures::dense() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  for (std::size_t k = 0; k < idx.size(); ++k) v[idx[k]] = val[k];
  return v;
}

double SparseFeatures::squared_norm() const {
  double s = 0.0;
  for (double v : val) s += v * v;
  return s;
}

void features_into(const RbfGrid& grid, const Eigen::Vector3d& s,
                   SparseFeatures* out) {
  out->dim = grid.feature_dim();
  out->idx.clear();
  out->val.clear();
  out->idx.push_back(0);
  out->val.push_back(1.0);

  // Per-axis candidate cells inside the cutoff radius, with normalized
  // squared distances and 1d Gaussian values (the 3d value factorizes).
  struct AxisCell {
    int m;
    double dsq;
    double g;
  };
  std::array<std::vector<AxisCell>, 3> cells;
  const double cw2 = grid.cutoff_widths * grid.cutoff_widths;
  for (int a = 0; a < 3; ++a) {
    const double reach = grid.cutoff_widths * grid.widths[a];
    int m_lo = static_cast<int>(std::ceil((s[a] - reach - grid.lo[a]) /
                                          grid.spacing[a]));
    int m_hi = static_cast<int>(std::floor((s[a] + reach - grid.lo[a]) /
                                           grid.spacing[a]));
    m_lo = std::max(m_lo, 0);
    m_hi = std::min(m_hi, grid.counts[a] - 1);
    for (int m = m_lo; m <= m_hi; ++m) {
      const double d = (s[a] - (grid.lo[a] + m * grid.spacing[a])) /
                       grid.widths[a];
      const double dsq = d * d;
      if (dsq > cw2) continue;
      cells[a].push_back({m, dsq, std::exp(-0.5 * dsq)});
    }
  }

  const int c1 = grid.counts[1], c2 = grid.counts[2];
  for (const auto& cx : cells[0]) {
    for (const auto& cy : cells[1]) {
      const double dxy = cx.dsq + cy.dsq;
      if (dxy > cw2) continue;
      const double gxy = cx.g * cy.g;
      const int base = 1 + (cx.m * c1 + cy.m) * c2;
      for (const auto& cz : cells[2]) {
        if (dxy + cz.dsq > cw2) continue;
        out->idx.push_back(base + cz.m);
        out->val.push_back(gxy * cz.g);
      }
    }
  }
}

SparseFeatures features(const RbfGrid& grid, const Eigen::Vector3d& s) {
  SparseFeatures f;
  features_into(grid, s, &f);
  return f;
}

ValueNet ValueNet::zeros(const RbfGrid& grid) {
  return ValueNet{grid, Eigen::VectorXd::Zero(grid.feature_dim())};
}

double value(const ValueNet& net, const SparseFeatures& f) {
  double acc = 0.0;
  for (std::size_t k = 0; k < f.idx.size(); ++k)
    acc += net.w[f.idx[k]] * f.val[k];
  return acc;
}

double value(const ValueNet& net, const Eigen::Vector3d& s) {
  return value(net, features(net.grid, s));
}

ActionBounds ActionBounds::make_default() {
  ActionBounds b;
  b.lo = {0.1, 0.03, -0.25};
  b.hi = {0.5, 0.37, 0.25};
  return b;
}

PolicyNet PolicyNet::zeros(const RbfGrid& grid, const ActionBounds& bounds) {
  PolicyNet net;
  net.grid = grid;
  net.bounds = bounds;
  net.theta = PolicyMatrix::Zero(grid.feature_dim(), 6);
  return net;
}

Eigen::Vector3d PolicyNet::std_min() const {
  return std_min_frac * (bounds.hi - bounds.lo);
}

Eigen::Vector3d PolicyNet::std_scale() const {
  // softplus(0) = ln 2, so zero weights give std_init_frac * range.
  const Eigen::Vector3d range = bounds.hi - bounds.lo;
  return (std_init_frac * range - std_min_frac * range) / std::log(2.0);
}

static double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

PolicyEval policy_eval(const PolicyNet& net, const SparseFeatures& f) {
  Eigen::Matrix<double, 6, 1> raw = Eigen::Matrix<double, 6, 1>::Zero();
  // The constant entry reaches only the spread channels. Exploration is a
  // global schedule and may narrow everywhere at once, but a constant term in
  // the means would let the state-box average gradient drag every state's
  // action together (one saturated channel for the whole surface); the means
  // read the radial cells alone and fall back to the range midpoints where
  // no cell has been trained.
  for (std::size_t k = 1; k < f.idx.size(); ++k)
    raw += net.theta.row(f.idx[k]).transpose() * f.val[k];
  raw.tail<3>() += net.theta.row(0).tail<3>().transpose() * f.val[0];

  PolicyEval ev;
  ev.raw_mean = raw.head<3>();
  ev.raw_std = raw.tail<3>();
  const Eigen::Vector3d mid = 0.5 * (net.bounds.lo + net.bounds.hi);
  const Eigen::Vector3d scale = net.std_scale();
  const Eigen::Vector3d floor = net.std_min();
  for (int j = 0; j < 3; ++j) {
    const double m = mid[j] + ev.raw_mean[j];
    ev.dist.mean[j] =
        std::min(std::max(m, net.bounds.lo[j]), net.bounds.hi[j]);
    ev.dist.std[j] = floor[j] + scale[j] * softplus(net.std_gain * ev.raw_std[j]);
  }
  ev.dist.lo = net.bounds.lo;
  ev.dist.hi = net.bounds.hi;
  return ev;
}

TruncatedNormal3 policy_distribution(const PolicyNet& net,
                                     const Eigen::Vector3d& s) {
  return policy_eval(net, features(net.grid, s)).dist;
}

static double norm_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_icdf(double p) {
  // Acklam's rational approximation with one Halley refinement.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

Eigen::Vector3d sample_action(const TruncatedNormal3& dist, RngStream& rng) {
  Eigen::Vector3d a;
  for (int j = 0; j < 3; ++j) {
    const double alpha = (dist.lo[j] - dist.mean[j]) / dist.std[j];
    const double beta = (dist.hi[j] - dist.mean[j]) / dist.std[j];
    const double pa = normal_cdf(alpha), pb = normal_cdf(beta);
    const double u = rng.uniform01();
    // Keep p strictly inside (0,1): pa can underflow to 0 when the mean sits
    // far past a bound, and icdf(0) would poison the sample with -inf.
    const double p =
        std::min(std::max(pa + u * (pb - pa), 1e-300), 1.0 - 1e-16);
    const double z = normal_icdf(p);
    a[j] = std::min(std::max(dist.mean[j] + dist.std[j] * z, dist.lo[j]),
                    dist.hi[j]);
  }
  return a;
}

Result<double, PolicyError> log_prob(const TruncatedNormal3& dist,
                                     const Eigen::Vector3d& a) {
  double lp = 0.0;
  for (int j = 0; j < 3; ++j) {
    if (a[j] < dist.lo[j] || a[j] > dist.hi[j])
      return PolicyError::OutOfSupport;
    const double sigma = dist.std[j];
    const double z = (a[j] - dist.mean[j]) / sigma;
    const double alpha = (dist.lo[j] - dist.mean[j]) / sigma;
    const double beta = (dist.hi[j] - dist.mean[j]) / sigma;
    const double zmass = normal_cdf(beta) - normal_cdf(alpha);
    lp += -0.5 * z * z - std::log(sigma) - std::log(zmass) -
          0.5 * std::log(2.0 * M_PI);
  }
  return lp;
}

namespace {

Result<Eigen::Matrix<double, 6, 1>, PolicyError> score_impl(
    const PolicyNet& net, const PolicyEval& eval, const Eigen::Vector3d& a,
    bool recover_saturated) {
  const auto& dist = eval.dist;
  Eigen::Matrix<double, 6, 1> score;
  const Eigen::Vector3d mid = 0.5 * (net.bounds.lo + net.bounds.hi);
  const Eigen::Vector3d scale = net.std_scale();
  for (int j = 0; j < 3; ++j) {
    if (a[j] < dist.lo[j] || a[j] > dist.hi[j])
      return PolicyError::OutOfSupport;
    const double sigma = dist.std[j];
    const double z = (a[j] - dist.mean[j]) / sigma;
    const double alpha = (dist.lo[j] - dist.mean[j]) / sigma;
    const double beta = (dist.hi[j] - dist.mean[j]) / sigma;
    const double zmass = normal_cdf(beta) - normal_cdf(alpha);
    const double pa = norm_pdf(alpha), pb = norm_pdf(beta);
    const double dmu = z / sigma - (pa - pb) / (sigma * zmass);
    const double dsigma =
        (z * z - 1.0) / sigma - (alpha * pa - beta * pb) / (sigma * zmass);
    // The mean clamp blocks gradient flow outside the open interval. In
    // recovery mode a saturated mean still passes gradient pointing back in,
    // so ascent cannot pin a mean against a bound permanently.
    const double m = mid[j] + eval.raw_mean[j];
    double gm = 0.0;
    if (m > net.bounds.lo[j] && m < net.bounds.hi[j])
      gm = dmu;
    else if (recover_saturated)
      gm = (m <= net.bounds.lo[j]) ? std::max(dmu, 0.0) : std::min(dmu, 0.0);
    score[j] = gm;
    score[3 + j] = dsigma * scale[j] * net.std_gain *
                   sigmoid(net.std_gain * eval.raw_std[j]);
  }
  return score;
}

}  // namespace

Result<Eigen::Matrix<double, 6, 1>, PolicyError> log_prob_score(
    const PolicyNet& net, const PolicyEval& eval, const Eigen::Vector3d& a) {
  return score_impl(net, eval, a, false);
}

Result<Eigen::Matrix<double, 6, 1>, PolicyError> log_prob_score_recoverable(
    const PolicyNet& net, const PolicyEval& eval, const Eigen::Vector3d& a) {
  return score_impl(net, eval, a, true);
}

Result<Eigen::MatrixXd, PolicyError> log_prob_grad_dense(
    const PolicyNet& net, const Eigen::Vector3d& s, const Eigen::Vector3d& a) {
  const SparseFeatures f = features(net.grid, s);
  const PolicyEval ev = policy_eval(net, f);
  auto score = log_prob_score(net, ev, a);
  if (!score) return score.error();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(net.grid.feature_dim(), 6);
  for (std::size_t k = 1; k < f.idx.size(); ++k)
    g.row(f.idx[k]) = f.val[k] * score.value().transpose();
  // Constant entry: spread channels only, mirroring policy_eval.
  g.row(0).tail<3>() = f.val[0] * score.value().tail<3>().transpose();
  return g;
}

const char* to_string(IoError e) {
  switch (e) {
    case IoError::OpenFailed: return "OpenFailed";
    case IoError::BadMagic: return "BadMagic";
    case IoError::BadVersion: return "BadVersion";
    case IoError::Truncated: return "Truncated";
    case IoError::InconsistentShapes: return "InconsistentShapes";
  }
  return "?";
}

namespace {

constexpr char kMagic[8] = {'P', 'S', 'W', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool get(std::ifstream& is, T* v) {
  is.read(reinterpret_cast<char*>(v), sizeof(T));
  return is.good();
}

}  // namespace

Result<bool, IoError> save_checkpoint(const std::string& path,
                                      const Checkpoint& ckpt) {
  const RbfGrid& g = ckpt.policy.grid;
  if (ckpt.value.grid.counts != g.counts ||
      ckpt.value.w.size() != g.feature_dim() ||
      ckpt.policy.theta.rows() != g.feature_dim() ||
      ckpt.policy.theta.cols() != 6)
    return IoError::InconsistentShapes;

  std::ofstream os(path, std::ios::binary);
  if (!os) return IoError::OpenFailed;
  os.write(kMagic, sizeof(kMagic));
  put(os, kVersion);
  put(os, std::uint32_t{0});
  for (int a = 0; a < 3; ++a) put(os, g.lo[a]);
  for (int a = 0; a < 3; ++a) put(os, g.hi[a]);
  for (int a = 0; a < 3; ++a) put(os, static_cast<std::uint32_t>(g.counts[a]));
  put(os, std::uint32_t{0});
  for (int a = 0; a < 3; ++a) put(os, g.spacing[a]);
  for (int a = 0; a < 3; ++a) put(os, g.widths[a]);
  put(os, g.cutoff_widths);
  for (int a = 0; a < 3; ++a) put(os, ckpt.policy.bounds.lo[a]);
  for (int a = 0; a < 3; ++a) put(os, ckpt.policy.bounds.hi[a]);
  put(os, ckpt.policy.std_init_frac);
  put(os, ckpt.policy.std_min_frac);
  put(os, ckpt.policy.std_gain);
  put(os, static_cast<std::uint64_t>(g.feature_dim()));
  os.write(reinterpret_cast<const char*>(ckpt.value.w.data()),
           sizeof(double) * ckpt.value.w.size());
  // Row-major on disk: all six outputs of a feature stay adjacent.
  for (int i = 0; i < ckpt.policy.theta.rows(); ++i)
    for (int j = 0; j < 6; ++j) put(os, ckpt.policy.theta(i, j));
  os.flush();
  return os.good() ? Result<bool, IoError>(true)
                   : Result<bool, IoError>(IoError::OpenFailed);
}

Result<Checkpoint, IoError> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return IoError::OpenFailed;
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is.good() || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    return IoError::BadMagic;
  std::uint32_t version = 0, reserved = 0;
  if (!get(is, &version)) return IoError::Truncated;
  if (version != kVersion) return IoError::BadVersion;
  if (!get(is, &reserved)) return IoError::Truncated;

  RbfGrid g;
  for (int a = 0; a < 3; ++a)
    if (!get(is, &g.lo[a])) return IoError::Truncated;
  for (int a = 0; a < 3; ++a)
    if (!get(is, &g.hi[a])) return IoError::Truncated;
  for (int a = 0; a < 3; ++a) {
    std::uint32_t c = 0;
    if (!get(is, &c)) return IoError::Truncated;
    g.counts[a] = static_cast<int>(c);
  }
  if (!get(is, &reserved)) return IoError::Truncated;
  for (int a = 0; a < 3; ++a)
    if (!get(is, &g.spacing[a])) return IoError::Truncated;
  for (int a = 0; a < 3; ++a)
    if (!get(is, &g.widths[a])) return IoError::Truncated;
  if (!get(is, &g.cutoff_widths)) return IoError::Truncated;

  ActionBounds bounds;
  for (int a = 0; a < 3; ++a)
    if (!get(is, &bounds.lo[a])) return IoError::Truncated;
  for (int a = 0; a < 3; ++a)
    if (!get(is, &bounds.hi[a])) return IoError::Truncated;
  double std_init = 0.0, std_min = 0.0, std_gain = 0.0;
  if (!get(is, &std_init) || !get(is, &std_min) || !get(is, &std_gain))
    return IoError::Truncated;
  std::uint64_t dim = 0;
  if (!get(is, &dim)) return IoError::Truncated;
  if (!g.valid() || dim != static_cast<std::uint64_t>(g.feature_dim()))
    return IoError::InconsistentShapes;

  Checkpoint ckpt;
  ckpt.value.grid = g;
  ckpt.value.w.resize(g.feature_dim());
  is.read(reinterpret_cast<char*>(ckpt.value.w.data()),
          sizeof(double) * ckpt.value.w.size());
  if (!is.good()) return IoError::Truncated;
  ckpt.policy.grid = g;
  ckpt.policy.bounds = bounds;
  ckpt.policy.std_init_frac = std_init;
  ckpt.policy.std_min_frac = std_min;
  ckpt.policy.std_gain = std_gain;
  ckpt.policy.theta.resize(g.feature_dim(), 6);
  for (int i = 0; i < ckpt.policy.theta.rows(); ++i)
    for (int j = 0; j < 6; ++j)
      if (!get(is, &ckpt.policy.theta(i, j))) return IoError::Truncated;
  return ckpt;
}

}  // namespace pswalk::rbf
