#ifndef LSSTREAM_MODEL_HPP
#define LSSTREAM_MODEL_HPP

#include "lsstream/error.hpp"
#include "lsstream/linalg.hpp"
#include "lsstream/random.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

namespace lsstream {

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseFamily { kGaussian, kStudentT };

std::string to_string(NoiseFamily family);
NoiseFamily parse_noise_family(const std::string& name);

/// Elliptical noise law. `scale` is the scatter matrix; for Student-t the
/// covariance is df / (df - 2) * scale.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::kGaussian;
  double df = 0.0;  // Student-t only, must exceed 2
  Matrix scale;
};

void validate_noise(const NoiseSpec& noise);

/// Covariance implied by a family/df pair and a scatter matrix.
Matrix noise_covariance(NoiseFamily family, double df, const Matrix& scatter);

/// Draws mu + xi * Sigma^{1/2} * S. The Gaussian law is realized as a standard
/// normal vector pushed through the symmetric root; Student-t divides that
/// by sqrt(W / df) with W chi-square(df). The root is computed once.
class EllipticalSampler {
 public:
  EllipticalSampler(Vector mu, const Matrix& scatter, NoiseFamily family,
                    double df = 0.0);

  Vector draw(Rng& rng) const;
  void draw_into(Rng& rng, Eigen::Ref<Vector> out) const;

  const Matrix& root() const { return root_; }
  Eigen::Index dim() const { return mu_.size(); }

 private:
  Vector mu_;
  Matrix root_;
  NoiseFamily family_;
  double df_;
};

/// One-off elliptical draw. The symmetric root of the most recent distinct
/// scatter is cached per thread.
Vector sample_elliptical(const Vector& mu, const Matrix& sigma,
                         NoiseFamily family, double df, Rng& rng);

// ---------------------------------------------------------------------------
// Model specifications
// ---------------------------------------------------------------------------

/// Which lags of y and v enter the covariate, in stacking order.
struct LagLayout {
  int K = 0;
  std::vector<int> y_lags;
  std::vector<int> v_lags;

  int dim() const {
    return K * static_cast<int>(y_lags.size() + v_lags.size());
  }
  int max_lag() const;
  bool has_exogenous() const { return !v_lags.empty(); }
};

/// y_t - mu_y = sum_i phi[i-1] (y_{t-i} - mu_y)
///            + sum_j psi[j-1] (v_{t-j} - mu_v) + e_t,  e_t with scatter omega.
struct VarxSpec {
  int K = 0;
  int p1 = 0;
  int p2 = 0;
  std::vector<Matrix> phi;
  std::vector<Matrix> psi;
  Matrix omega;
  Vector mu_y;
  Vector mu_v;

  int dim() const { return K * (p1 + p2); }
  LagLayout layout() const;
  /// B, the dim() x K stack of phi_1', ..., phi_p1', psi_1', ..., psi_p2'.
  Matrix coefficient_stack() const;
  /// Stationary mean of the embedded covariate.
  Vector covariate_mean() const;
};

/// y_t - mu_y = sum_i phi[i-1] (y_{t-i} - mu_y)
///            + sum_j theta[j-1] (y_{t-period*j} - mu_y) + e_t.
struct SeasonalVarxSpec {
  int K = 0;
  int p1 = 0;
  int p2_seasonal = 0;
  int period = 24;
  std::vector<Matrix> phi;
  std::vector<Matrix> theta;
  Matrix omega;
  Vector mu_y;

  int dim() const { return K * (p1 + p2_seasonal); }
  LagLayout layout() const;
  Matrix coefficient_stack() const;
  Vector covariate_mean() const;
};

/// Model-agnostic view used by simulation and moment computations: one K x K
/// block per entry of the layout (y lags first, then v lags).
struct LinearSystem {
  LagLayout layout;
  std::vector<Matrix> blocks;
  Matrix omega;
  Vector mu_y;
  Vector mu_v;

  Matrix coefficient_stack() const;
  Vector covariate_mean() const;
};

LinearSystem to_system(const VarxSpec& spec);
LinearSystem to_system(const SeasonalVarxSpec& spec);

enum class SpecErrorKind {
  kDimensionMismatch,
  kNotSymmetric,
  kNotPositiveDefinite,
  kNonStationary,
  kOutOfRange,
};

class SpecError : public ValidationError {
 public:
  SpecError(SpecErrorKind kind, const std::string& what)
      : ValidationError(what), kind_(kind) {}
  SpecErrorKind kind() const { return kind_; }

 private:
  SpecErrorKind kind_;
};

/// Companion matrix of the autoregressive part. `ar_blocks[l-1]` is the
/// coefficient on y_{t-l}; zero blocks fill unused lags.
Matrix companion_matrix(const std::vector<Matrix>& ar_blocks);

/// Spectral radius of the companion form, seasonal lags expanded.
double companion_radius(const LinearSystem& system);

/// Return the spec unchanged when every invariant holds; throw SpecError
/// naming the first violated invariant otherwise.
const VarxSpec& validate_spec(const VarxSpec& spec);
const SeasonalVarxSpec& validate_spec(const SeasonalVarxSpec& spec);

/// Seeded random stationary VARX. Autoregressive entries are i.i.d. N(0,1)
/// and the lag-i block is then multiplied by c^i with c = target / radius,
/// which scales every companion eigenvalue by exactly c. Exogenous entries
/// are N(0, 1/K); omega = A A' + 0.1 I with A entries N(0, 1/K). Means are
/// zero.
VarxSpec generate_random_stable_coefficients(int K, int p1, int p2,
                                             double target_radius,
                                             std::uint64_t seed);

/// Seeded random stationary seasonal VARX. All entries N(0, 1/K), then a
/// common scale factor is bisected so that the expanded companion radius
/// lands at (or just under) `target_radius`.
SeasonalVarxSpec generate_random_stable_seasonal(int K, int p1, int p2_seasonal,
                                                 int period,
                                                 double target_radius,
                                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Streams
// ---------------------------------------------------------------------------

struct StreamPoint {
  long t = 0;
  Vector y;
  Vector v;  // empty when the model has no exogenous input
};

struct Covariate {
  Vector x;
  long t = 0;  // the time index the covariate regresses for
};

/// Lag embedding x_t = (y_{t-l} for l in y_lags, v_{t-l} for l in v_lags)
/// from a history whose last element is time t-1. Throws DataError when the
/// history is shorter than the largest lag.
Covariate embed_covariate(std::span<const StreamPoint> history,
                          const LagLayout& layout);
Covariate embed_covariate(std::span<const StreamPoint> history,
                          const VarxSpec& spec);
Covariate embed_covariate(std::span<const StreamPoint> history,
                          const SeasonalVarxSpec& spec);

/// Bounded ring of the most recent max_lag points.
class CovariateEmbedder {
 public:
  explicit CovariateEmbedder(LagLayout layout);

  void push(StreamPoint point);
  bool ready() const;
  /// Covariate for the time step after the most recent pushed point.
  Covariate next() const;

  std::size_t buffered() const { return history_.size(); }
  std::size_t capacity() const { return capacity_; }
  const LagLayout& layout() const { return layout_; }

 private:
  LagLayout layout_;
  std::size_t capacity_;
  std::deque<StreamPoint> history_;
};

struct Simulation {
  std::vector<StreamPoint> points;
  std::vector<Vector> covariates;   // x_t used to generate points[i]
  std::vector<Vector> innovations;  // e_t added at points[i]
};

/// Default burn-in: ten times the largest lag.
int default_burn_in(const LagLayout& layout);

/// Simulate n retained points after `burn_in` discarded steps (negative
/// selects the default). Innovations
/// use `noise.family`/`noise.df` with scatter omega; exogenous inputs use
/// the same family with scatter `noise.scale` (identity when empty),
/// centered at mu_v. The pre-sample is held at the means. Retained points
/// have t = 0..n-1.
Simulation simulate_detailed(const LinearSystem& system, const NoiseSpec& noise,
                             long n, int burn_in, std::uint64_t seed);

std::vector<StreamPoint> simulate(const VarxSpec& spec, const NoiseSpec& noise,
                                  long n, int burn_in, std::uint64_t seed);
std::vector<StreamPoint> simulate(const SeasonalVarxSpec& spec,
                                  const NoiseSpec& noise, long n, int burn_in,
                                  std::uint64_t seed);

/// Stationary covariance of the embedded covariate, given the covariance of
/// the innovations and of the exogenous inputs (solved with the doubling
/// iteration on the companion state).
Matrix stationary_covariate_covariance(const LinearSystem& system,
                                       const Matrix& innovation_cov,
                                       const Matrix& exogenous_cov);

}  // namespace lsstream

#endif  // LSSTREAM_MODEL_HPP
