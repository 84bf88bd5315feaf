#ifndef LSSTREAM_EXPERIMENT_HPP
#define LSSTREAM_EXPERIMENT_HPP

#include "lsstream/model.hpp"
#include "lsstream/pipeline.hpp"
#include "lsstream/samplers.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace lsstream {

/// Runs fn(0..n-1) on up to `parallelism` threads. Each index is handled
/// exactly once; the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int parallelism,
                  const std::function<void(std::size_t)>& fn);

struct BenchConfig {
  int K = 10;
  int p1 = 1;
  int p2 = 1;
  double radius = 0.8;  // companion radius of the generated model
  NoiseSpec noise;
  long n = 5000;        // simulated stream length per replicate
  int burn_in = -1;     // < 0 selects the default
  SamplerConfig sampler;
  std::vector<SamplerMode> modes{SamplerMode::kBernoulli, SamplerMode::kLss,
                                 SamplerMode::kRelaxed};
  std::uint64_t seed = 0;  // master seed
};

void validate_bench_config(const BenchConfig& config);

/// The model shared by every replicate of a bench run.
VarxSpec bench_spec(const BenchConfig& config);

/// One replicate: a single simulated stream, every mode run on it.
struct ReplicateOutcome {
  std::vector<std::vector<double>> errors;  // [mode][tau - 1]
  std::vector<Matrix> final_b;              // [mode]
  std::vector<long> selected;               // [mode]
  std::vector<long> steps;                  // [mode]
};

ReplicateOutcome run_replicate(const BenchConfig& config, const VarxSpec& spec,
                               std::size_t index);

struct BenchResult {
  std::vector<SamplerMode> modes;
  long common_tau = 0;  // largest tau reached by every replicate and mode
  Matrix mean;          // common_tau x modes
  Matrix sd;
  /// est_error at common_tau, [mode][replicate], for paired comparisons.
  std::vector<std::vector<double>> final_errors;
  std::vector<std::vector<double>> realized_rates;  // [mode][replicate]
};

/// Replicates share one model; replicate i simulates its stream from
/// replicate_seed(seed, i) and every mode sees the same stream. The result
/// depends only on the config and replicate count.
BenchResult run_bench(const BenchConfig& config, int replicates, int parallelism);

/// tau,<mode>_mean,<mode>_sd,... with %.17g values.
void write_bench_table(std::ostream& out, const BenchResult& result);

}  // namespace lsstream

#endif  // LSSTREAM_EXPERIMENT_HPP
