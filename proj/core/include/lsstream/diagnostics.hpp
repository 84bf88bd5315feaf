#ifndef LSSTREAM_DIAGNOSTICS_HPP
#define LSSTREAM_DIAGNOSTICS_HPP

#include "lsstream/linalg.hpp"
#include "lsstream/model.hpp"
#include "lsstream/random.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace lsstream {

/// s(x - mu_X), a selection probability in [0, 1].
using SamplingFunction = std::function<double(const Vector& centered)>;
/// Writes one covariate draw into `out`.
using CovariateSampler = std::function<void(Rng& rng, Eigen::Ref<Vector> out)>;

struct DesignSummary {
  Matrix gamma_hat;
  double q_hat = 0.0;
  double det_gamma = 0.0;
  long n_mc = 0;
  std::vector<double> batch_dets;  // det of each batch's gamma
  double det_se = 0.0;             // batched standard error of det_gamma
};

inline constexpr int kMonteCarloBatches = 20;

/// Monte Carlo E[s(x - mu) (x - mu)(x - mu)'] with 20-fold batching.
DesignSummary estimate_gamma(const SamplingFunction& sampling_fn,
                             const CovariateSampler& covariate_sampler,
                             const Vector& mu_x, long n_mc, std::uint64_t seed);

/// Omega^{-1} (x) (gamma / q), matching column-stacked vec(B).
Matrix precision_matrix(const Matrix& omega, const Matrix& gamma, double q);

/// Law of the leverage score x' Sigma^{-1} x under a centered elliptical
/// covariate with known scatter: chi-square(p) for Gaussian, p * F(p, df)
/// for Student-t.
struct LeverageLaw {
  int p = 1;
  NoiseFamily family = NoiseFamily::kGaussian;
  double df = 0.0;

  /// r with P(leverage > r) = tail; 0 at tail 1 and +inf at tail 0.
  double upper_quantile(double tail) const;
};

struct Candidate {
  std::string name;
  SamplingFunction fn;
  bool admissible = true;  // satisfies s >= q0
};

/// Threshold-rule family at rate q with floor q0, calibrated by `law`:
/// upper_tail (the optimum), lower_tail, middle_band, bernoulli, and for
/// q0 > 0 the unfloored lss rule (reported, not admissible).
std::vector<Candidate> builtin_candidates(double q, double q0,
                                          const LeverageLaw& law,
                                          const Matrix& precision);

struct CandidateResult {
  std::string name;
  bool admissible = true;
  DesignSummary summary;
};

struct OracleReport {
  double q = 0.0;
  double q0 = 0.0;
  std::vector<CandidateResult> ranked;  // descending det_gamma
  std::string leader;                   // best admissible candidate
  std::string runner_up;                // second best admissible candidate
  double gap = 0.0;                     // det(leader) - det(runner_up)
  double gap_se = 0.0;                  // paired batched standard error
  bool optimum_first = false;           // upper_tail leads by > 3 gap_se

  const CandidateResult& find(const std::string& name) const;
};

/// Evaluates det(Gamma) for every candidate on common random numbers and
/// ranks them. Throws ValidationError when a candidate's Monte Carlo rate
/// differs from q by more than 0.01.
OracleReport d_optimality_oracle(double q, double q0,
                                 const CovariateSampler& covariate_sampler,
                                 const Vector& mu_x,
                                 const std::vector<Candidate>& candidates,
                                 long n_mc, std::uint64_t seed);

struct NormalityReport {
  Matrix empirical_cov;
  Matrix target_cov;
  double relative_frobenius = 0.0;
  Vector variance_ratios;  // diag(empirical) ./ diag(target)
  int replicates = 0;
};

/// Compares the replicate covariance of sqrt(N) vec(B_hat - B) with P^{-1}.
NormalityReport normality_check(
    const std::vector<std::pair<Matrix, long>>& replicate_estimates,
    const Matrix& b_true, const Matrix& precision);

/// ||b_hat - b_ref||_F / ||b_ref||_F.
double estimation_error(const Matrix& b_hat, const Matrix& b_ref);

/// ||y_hat - y|| / ||y||.
double prediction_error(const Vector& y_hat, const Vector& y);

struct MetricRecord {
  long tau = 0;  // number of estimator updates so far
  long t = 0;
  double est_error = 0.0;
  double pred_error = 0.0;
  long n_selected = 0;
};

}  // namespace lsstream

#endif  // LSSTREAM_DIAGNOSTICS_HPP
