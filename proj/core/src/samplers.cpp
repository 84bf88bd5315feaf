#include "lsstream/samplers.hpp"

#include "lsstream/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>

namespace lsstream {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::kBernoulli: return "bernoulli";
    case SamplerMode::kLss: return "lss";
    case SamplerMode::kRelaxed: return "relaxed";
  }
  return "unknown";
}

SamplerMode parse_sampler_mode(const std::string& name) {
  if (name == "bernoulli") return SamplerMode::kBernoulli;
  if (name == "lss") return SamplerMode::kLss;
  if (name == "relaxed" || name == "relaxed_lss") return SamplerMode::kRelaxed;
  throw ValidationError("unknown sampler mode '" + name + "'");
}

std::string to_string(Branch branch) {
  switch (branch) {
    case Branch::kBase: return "base";
    case Branch::kLeverage: return "leverage";
    case Branch::kRejected: return "rejected";
  }
  return "unknown";
}

double SamplerConfig::effective_q0() const {
  switch (mode) {
    case SamplerMode::kBernoulli: return q;
    case SamplerMode::kLss: return 0.0;
    case SamplerMode::kRelaxed: return q0;
  }
  return q0;
}

double SamplerConfig::tail_target() const {
  const double base = effective_q0();
  if (base >= q) return 0.0;
  return (q - base) / (1.0 - base);
}

double precision_scale(double count, int p, bool debias) {
  if (!debias) return count;
  // (M - p - 1) W^{-1} is unbiased for a Wishart(M) sum W; the M/2 floor
  // keeps the factor positive (and continuous) for tiny M.
  const double shifted = count - p - 1.0;
  return std::max(shifted, 0.5 * count);
}

void validate_sampler_config(const SamplerConfig& config, int p) {
  if (!(config.q > 0.0 && config.q <= 1.0)) {
    throw ValidationError("sampling rate q must lie in (0, 1]");
  }
  if (config.mode == SamplerMode::kRelaxed &&
      !(config.q0 >= 0.0 && config.q0 <= config.q)) {
    throw ValidationError("base rate q0 must lie in [0, q]");
  }
  if (!(config.u >= 0.0 && config.u <= 1.0)) {
    throw ValidationError("precision update rate u must lie in [0, 1]");
  }
  if (config.n0 < p + 1) {
    throw ValidationError("pilot size n0=" + std::to_string(config.n0) +
                          " must be at least p + 1 = " + std::to_string(p + 1));
  }
  if (config.refresh_every < 1) {
    throw ValidationError("refresh_every must be at least 1");
  }
}

// ---------------------------------------------------------------------------
// StreamingQuantile
// ---------------------------------------------------------------------------

StreamingQuantile::StreamingQuantile(double tail, std::size_t window)
    : tail_(tail), window_(window) {
  if (!(tail >= 0.0 && tail <= 1.0)) {
    throw ValidationError("quantile tail must lie in [0, 1]");
  }
}

std::size_t StreamingQuantile::allowed_exceedances(std::size_t n) const {
  const double m = std::floor(tail_ * static_cast<double>(n) + 1e-9);
  return std::min(n, static_cast<std::size_t>(m));
}

void StreamingQuantile::insert(double score) {
  if (!lower_.empty() && score <= *lower_.rbegin()) {
    lower_.insert(score);
  } else {
    upper_.insert(score);
  }
  if (window_ > 0) {
    order_.push_back(score);
    if (order_.size() > window_) {
      erase_one(order_.front());
      order_.pop_front();
    }
  }
  rebalance();
}

void StreamingQuantile::erase_one(double score) {
  if (!lower_.empty() && score <= *lower_.rbegin()) {
    if (auto it = lower_.find(score); it != lower_.end()) {
      lower_.erase(it);
      return;
    }
  }
  if (auto it = upper_.find(score); it != upper_.end()) upper_.erase(it);
}

void StreamingQuantile::rebalance() {
  const std::size_t m = allowed_exceedances(size());
  while (upper_.size() > m) {
    lower_.insert(lower_.end(), *upper_.begin());
    upper_.erase(upper_.begin());
  }
  while (upper_.size() < m && !lower_.empty()) {
    auto last = std::prev(lower_.end());
    upper_.insert(upper_.begin(), *last);
    lower_.erase(last);
  }
}

double StreamingQuantile::threshold() const {
  if (tail_ <= 0.0) return kInf;
  if (empty()) throw DataError("no leverage scores retained");
  if (lower_.empty()) return -kInf;
  return *lower_.rbegin();
}

// ---------------------------------------------------------------------------
// Auxiliary estimates
// ---------------------------------------------------------------------------

double chi_square_threshold(int p, double tail) {
  if (p <= 0) throw ValidationError("chi-square degrees of freedom must be positive");
  if (!(tail > 0.0 && tail < 1.0)) {
    throw ValidationError("tail probability must lie in (0, 1)");
  }
  const double shape = 0.5 * p;
  auto survival = [shape](double r) { return boost::math::gamma_q(shape, 0.5 * r); };
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(p));
  while (survival(hi) > tail) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (survival(mid) > tail ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SamplerState pilot_fit(const Matrix& ys, const Matrix& xs,
                       const SamplerConfig& config, std::uint64_t seed) {
  const Eigen::Index n = xs.rows();
  const Eigen::Index p = xs.cols();
  if (ys.rows() != n) throw ValidationError("pilot y and x row counts differ");
  if (n < p + 1) {
    throw ValidationError("pilot of size " + std::to_string(n) +
                          " is too small for covariate dimension " +
                          std::to_string(p));
  }
  validate_sampler_config(config, static_cast<int>(p));
  if (n < config.n0) {
    throw ValidationError("pilot holds " + std::to_string(n) + " rows, n0 is " +
                          std::to_string(config.n0));
  }

  SamplerState state;
  state.mu_x_hat = xs.colwise().mean().transpose();
  state.mu_y_hat = ys.colwise().mean().transpose();
  state.count = static_cast<long>(n);

  const Matrix centered = xs.rowwise() - state.mu_x_hat.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const double ridge = 1e-6 * cov.trace() / static_cast<double>(p);
  cov.diagonal().array() += ridge;
  const Matrix cov_inv = linalg::spd_inverse(cov, "pilot covariate covariance");
  state.precision_count = static_cast<double>(n - 1);
  state.sum_inverse = cov_inv / state.precision_count;
  state.precision =
      precision_scale(state.precision_count, static_cast<int>(p), config.debias_precision) *
      state.sum_inverse;

  const double tail = config.tail_target();
  state.leverage_scores = StreamingQuantile(tail, config.quantile_window);
  if (tail <= 0.0) {
    state.r_hat = kInf;
  } else if (tail >= 1.0) {
    state.r_hat = -kInf;
  } else {
    state.r_hat = chi_square_threshold(static_cast<int>(p), tail);
  }
  if (tail > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector d = centered.row(i).transpose();
      state.leverage_scores.insert(d.dot(state.precision * d));
    }
  }

  state.selection_rng.seed(derive_seed(seed, SeedPurpose::kSelection));
  state.update_rng.seed(derive_seed(seed, SeedPurpose::kPrecisionUpdate));
  return state;
}

void update_means(SamplerState& state, const Vector& y, const Vector& x) {
  ++state.count;
  const double inv = 1.0 / static_cast<double>(state.count);
  state.mu_x_hat += (x - state.mu_x_hat) * inv;
  state.mu_y_hat += (y - state.mu_y_hat) * inv;
}

double leverage(const SamplerState& state, const Vector& x) {
  if (x.size() != state.mu_x_hat.size()) {
    throw ValidationError("covariate dimension " + std::to_string(x.size()) +
                          " does not match sampler dimension " +
                          std::to_string(state.mu_x_hat.size()));
  }
  const Vector d = x - state.mu_x_hat;
  return d.dot(state.precision * d);
}

void refresh_threshold(SamplerState& state, const SamplerConfig& config) {
  if (!config.leverage_active()) {
    state.r_hat = kInf;
    return;
  }
  state.r_hat = state.leverage_scores.threshold();
  state.steps_since_refresh = 0;
}

void update_threshold(SamplerState& state, const SamplerConfig& config,
                      const Decision& decision) {
  if (!config.leverage_active()) {
    state.r_hat = kInf;
    return;
  }
  if (std::isfinite(decision.leverage)) {
    state.leverage_scores.insert(decision.leverage);
  }
  if (++state.steps_since_refresh >= config.refresh_every) {
    refresh_threshold(state, config);
  }
}

bool sparse_precision_update(SamplerState& state, const Vector& x,
                             const SamplerConfig& config) {
  const bool jump = uniform_open01(state.update_rng) < config.u;
  if (!jump) return false;
  const Vector d = x - state.mu_x_hat;
  if (d.isZero(0.0)) return false;
  const Vector k = state.sum_inverse * d;
  const double denom = 1.0 + d.dot(k);
  if (!(std::abs(denom) >= 1e-12)) {
    ++state.skipped_precision_updates;
    return false;
  }
  state.sum_inverse.noalias() -= (k / denom) * k.transpose();
  linalg::symmetrize(state.sum_inverse);
  state.precision_count += 1.0;
  state.precision = precision_scale(state.precision_count,
                                    static_cast<int>(state.sum_inverse.rows()),
                                    config.debias_precision) *
                    state.sum_inverse;
  ++state.precision_updates;
  return true;
}

Decision decide(SamplerState& state, const SamplerConfig& config,
                const Vector& x, long t) {
  Decision d;
  d.t = t;
  d.uniform_draw = uniform_open01(state.selection_rng);
  d.threshold = state.r_hat;
  const double base = config.effective_q0();
  if (!config.leverage_active()) {
    d.leverage = std::numeric_limits<double>::quiet_NaN();
    d.s_hat = config.mode == SamplerMode::kBernoulli ? config.q : base;
    d.selected = d.uniform_draw <= d.s_hat;
    d.branch = d.selected ? Branch::kBase : Branch::kRejected;
    return d;
  }
  d.leverage = leverage(state, x);
  const bool exceeds = d.leverage > state.r_hat;
  d.s_hat = exceeds ? 1.0 : base;
  d.selected = d.uniform_draw <= d.s_hat;
  if (d.uniform_draw <= base) {
    d.branch = Branch::kBase;
  } else {
    d.branch = exceeds ? Branch::kLeverage : Branch::kRejected;
  }
  return d;
}

double realized_rate(std::span<const Decision> decisions) {
  if (decisions.empty()) throw ValidationError("no decisions to summarize");
  std::size_t selected = 0;
  for (const auto& d : decisions) selected += d.selected ? 1 : 0;
  return static_cast<double>(selected) / static_cast<double>(decisions.size());
}

}  // namespace lsstream
