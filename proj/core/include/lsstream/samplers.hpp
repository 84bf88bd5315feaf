#ifndef LSSTREAM_SAMPLERS_HPP
#define LSSTREAM_SAMPLERS_HPP

#include "lsstream/linalg.hpp"
#include "lsstream/random.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace lsstream {

enum class SamplerMode { kBernoulli, kLss, kRelaxed };

std::string to_string(SamplerMode mode);
SamplerMode parse_sampler_mode(const std::string& name);

struct SamplerConfig {
  SamplerMode mode = SamplerMode::kRelaxed;
  double q = 0.1;    // target sampling rate
  double q0 = 0.05;  // base rate; forced to 0 for lss and to q for bernoulli
  double u = 0.1;    // precision update rate
  int n0 = 100;      // pilot size
  std::size_t quantile_window = 0;  // 0 keeps every score
  int refresh_every = 1;            // threshold refresh cadence in steps
  /// Scale the inverse running sum by M - p - 1 instead of M. The plain
  /// M-scaled inverse overstates Sigma^{-1} by M / (M - p - 1); since M
  /// grows over the stream, scores drift downward and the cumulative
  /// quantile then undershoots the target rate.
  bool debias_precision = true;

  /// q0 after applying the mode's reduction.
  double effective_q0() const;
  /// Target exceedance probability of the leverage rule,
  /// (q - q0) / (1 - q0); 0 when q0 == q.
  double tail_target() const;
  /// Whether leverage scores influence selection at all.
  bool leverage_active() const { return tail_target() > 0.0; }
};

/// Throws ValidationError unless 0 <= q0 <= q <= 1, q > 0, 0 <= u <= 1,
/// n0 >= p + 1 and refresh_every >= 1.
void validate_sampler_config(const SamplerConfig& config, int p);

/// Exact upper-tail order statistic over a (possibly windowed) stream of
/// scores. The threshold is the smallest retained score r with
/// #{scores > r} <= floor(tail * n); ties go to the smaller threshold.
class StreamingQuantile {
 public:
  explicit StreamingQuantile(double tail = 0.1, std::size_t window = 0);

  void insert(double score);
  /// +inf when tail == 0, -inf when tail * n >= n.
  double threshold() const;

  std::size_t size() const { return lower_.size() + upper_.size(); }
  bool empty() const { return size() == 0; }
  double tail() const { return tail_; }
  std::size_t window() const { return window_; }

 private:
  std::size_t allowed_exceedances(std::size_t n) const;
  void erase_one(double score);
  void rebalance();

  double tail_;
  std::size_t window_;
  std::multiset<double> lower_;  // everything at or below the threshold
  std::multiset<double> upper_;  // the allowed exceedances
  std::deque<double> order_;     // insertion order, windowed mode only
};

struct SamplerState {
  Vector mu_x_hat;
  Vector mu_y_hat;
  long count = 0;  // observations absorbed into the means

  /// Current precision estimate precision_scale(M) * (running centered sum)^{-1}.
  Matrix precision;
  /// Inverse of the running centered sum.
  Matrix sum_inverse;
  double precision_count = 0.0;  // M_n, pilot contributes n0 - 1
  long precision_updates = 0;
  long skipped_precision_updates = 0;

  double r_hat = 0.0;
  StreamingQuantile leverage_scores;
  long steps_since_refresh = 0;

  Rng selection_rng;  // U_t
  Rng update_rng;     // J_t
};

enum class Branch { kBase, kLeverage, kRejected };
std::string to_string(Branch branch);

struct Decision {
  long t = 0;
  bool selected = false;
  double leverage = 0.0;  // NaN when the leverage rule is inactive
  double threshold = 0.0;
  double s_hat = 0.0;
  double uniform_draw = 0.0;
  Branch branch = Branch::kRejected;
};

/// Factor applied to the inverse running sum: M, or with debiasing
/// max(M - p - 1, M / 2).
double precision_scale(double count, int p, bool debias);

/// Smallest r with P(chi2_p > r) <= tail, by bisection on the regularized
/// upper incomplete gamma function to absolute tolerance 1e-10.
double chi_square_threshold(int p, double tail);

/// Initialize means, precision, threshold and leverage tracker from a pilot
/// of (y, x) rows. `ys` is n0 x K, `xs` is n0 x p. The seed feeds the U_t
/// and J_t generators through derive_seed.
SamplerState pilot_fit(const Matrix& ys, const Matrix& xs,
                       const SamplerConfig& config, std::uint64_t seed);

/// Welford step on both running means; call at every time step.
void update_means(SamplerState& state, const Vector& y, const Vector& x);

/// (x - mu_x_hat)' precision (x - mu_x_hat).
double leverage(const SamplerState& state, const Vector& x);

/// Record a decision's leverage (if any) and refresh r_hat per cadence.
void update_threshold(SamplerState& state, const SamplerConfig& config,
                      const Decision& decision);
/// Refresh r_hat from the retained scores unconditionally.
void refresh_threshold(SamplerState& state, const SamplerConfig& config);

/// Draw J_t ~ Bernoulli(u); on success absorb (x - mu)(x - mu)' into the
/// running sum by Sherman-Morrison and rescale. Returns whether absorbed.
bool sparse_precision_update(SamplerState& state, const Vector& x,
                             const SamplerConfig& config);

/// Draw U_t and apply s_hat = q0 + (1 - q0) 1{leverage > r_hat}.
Decision decide(SamplerState& state, const SamplerConfig& config,
                const Vector& x, long t = 0);

/// N / n over a run. Throws ValidationError on an empty list.
double realized_rate(std::span<const Decision> decisions);

}  // namespace lsstream

#endif  // LSSTREAM_SAMPLERS_HPP
