#ifndef LSSTREAM_PIPELINE_HPP
#define LSSTREAM_PIPELINE_HPP

#include "lsstream/diagnostics.hpp"
#include "lsstream/estimator.hpp"
#include "lsstream/ingest.hpp"
#include "lsstream/model.hpp"
#include "lsstream/samplers.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace lsstream {

/// A response together with its lag-embedded covariate.
struct Observation {
  long t = 0;
  Vector y;
  Vector x;
};

/// Embeds a stream under a layout; the first max_lag points only feed lags.
std::vector<Observation> observations_from_stream(
    std::span<const StreamPoint> points, const LagLayout& layout);
std::vector<Observation> observations_from_table(const LoadTable& table,
                                                 const LagLayout& layout);
std::vector<Observation> observations_from_table(const LoadTable& table,
                                                 const SeasonalVarxSpec& spec);

/// Stacks observations into design (n x p) and response (n x K) matrices.
void stack_observations(std::span<const Observation> obs, Matrix& xs, Matrix& ys);

/// Least squares over every observation after centering by the full-sample
/// means: the offline reference fit.
Matrix full_sample_fit(std::span<const Observation> obs);

struct PipelineConfig {
  SamplerConfig sampler;
  std::uint64_t seed = 0;        // feeds U_t and J_t
  std::optional<double> ridge;   // estimator initialization ridge
};

/// Sampler-assisted online least squares over a stationary linear model.
///
/// Per observation: update the running means, score and decide; when
/// selected, center by the current means, run the recursive update and
/// refresh the residual covariance; then refresh the threshold and, with
/// probability u, absorb the point into the precision estimate.
class OnlineEstimator {
 public:
  OnlineEstimator(const Matrix& pilot_ys, const Matrix& pilot_xs,
                  PipelineConfig config);

  Decision step(const Vector& y, const Vector& x, long t);

  /// One-step-ahead prediction for the covariate of the next observation.
  Vector predict(const Vector& x_next) const;

  const SamplerState& sampler() const { return sampler_; }
  const RlsState& estimator() const { return rls_; }
  const PipelineConfig& config() const { return config_; }
  long steps() const { return steps_; }

 private:
  PipelineConfig config_;
  SamplerState sampler_;
  RlsState rls_;
  long steps_ = 0;
};

enum class MetricCadence { kPerUpdate, kPerStep };

struct RunOptions {
  PipelineConfig pipeline;
  MetricCadence cadence = MetricCadence::kPerUpdate;
  std::optional<Matrix> reference_b;  // est_error is NaN without one
  bool keep_decisions = false;
};

struct RunResult {
  std::vector<MetricRecord> metrics;
  std::vector<Decision> decisions;
  RlsState final_state;
  Vector mu_x_hat;
  Vector mu_y_hat;
  long steps = 0;
  long selected = 0;

  double rate() const {
    return steps > 0 ? static_cast<double>(selected) / static_cast<double>(steps) : 0.0;
  }
};

/// Uses the first n0 observations as the pilot and streams the rest.
RunResult run_online(std::span<const Observation> obs, const RunOptions& options);

}  // namespace lsstream

#endif  // LSSTREAM_PIPELINE_HPP
