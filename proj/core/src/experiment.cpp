#include "lsstream/experiment.hpp"

#include "lsstream/error.hpp"
#include "lsstream/io.hpp"
#include "lsstream/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

namespace lsstream {

void parallel_for(std::size_t n, int parallelism,
                  const std::function<void(std::size_t)>& fn) {
  if (parallelism < 1) throw ValidationError("parallelism must be at least 1");
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(parallelism));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void validate_bench_config(const BenchConfig& config) {
  if (config.K < 1 || config.p1 < 1 || config.p2 < 0) {
    throw ValidationError("bench model needs K >= 1, p1 >= 1, p2 >= 0");
  }
  if (!(config.radius > 0.0 && config.radius < 1.0)) {
    throw ValidationError("bench radius must lie in (0, 1)");
  }
  if (config.modes.empty()) throw ValidationError("no sampler modes to run");
  validate_noise(config.noise);
  const int p = config.K * (config.p1 + config.p2);
  validate_sampler_config(config.sampler, p);
  if (config.n <= config.sampler.n0 + config.p1 + config.p2) {
    throw ValidationError("stream length n=" + std::to_string(config.n) +
                          " leaves no observations after the pilot of " +
                          std::to_string(config.sampler.n0));
  }
}

VarxSpec bench_spec(const BenchConfig& config) {
  return generate_random_stable_coefficients(
      config.K, config.p1, config.p2, config.radius,
      derive_seed(config.seed, SeedPurpose::kCoefficients));
}

ReplicateOutcome run_replicate(const BenchConfig& config, const VarxSpec& spec,
                               std::size_t index) {
  const std::uint64_t rseed = replicate_seed(config.seed, index);
  const LagLayout layout = spec.layout();
  const int burn = config.burn_in >= 0 ? config.burn_in : default_burn_in(layout);
  const auto points = simulate(spec, config.noise, config.n, burn, rseed);
  const auto obs = observations_from_stream(points, layout);

  ReplicateOutcome out;
  RunOptions options;
  options.reference_b = spec.coefficient_stack();
  options.cadence = MetricCadence::kPerUpdate;
  for (SamplerMode mode : config.modes) {
    options.pipeline.sampler = config.sampler;
    options.pipeline.sampler.mode = mode;
    options.pipeline.seed = rseed;
    const RunResult run = run_online(obs, options);
    std::vector<double> errs;
    errs.reserve(run.metrics.size());
    for (const auto& m : run.metrics) errs.push_back(m.est_error);
    out.errors.push_back(std::move(errs));
    out.final_b.push_back(run.final_state.b_hat);
    out.selected.push_back(run.selected);
    out.steps.push_back(run.steps);
  }
  return out;
}

BenchResult run_bench(const BenchConfig& config, int replicates, int parallelism) {
  if (replicates < 2) {
    throw ValidationError("bench needs at least 2 replicates, got " +
                          std::to_string(replicates));
  }
  validate_bench_config(config);
  const VarxSpec spec = bench_spec(config);

  const auto n_rep = static_cast<std::size_t>(replicates);
  std::vector<ReplicateOutcome> outcomes(n_rep);
  parallel_for(n_rep, parallelism,
               [&](std::size_t i) { outcomes[i] = run_replicate(config, spec, i); });

  // Deterministic reduce in replicate order.
  const std::size_t n_modes = config.modes.size();
  std::size_t common = std::numeric_limits<std::size_t>::max();
  for (const auto& o : outcomes) {
    for (const auto& e : o.errors) common = std::min(common, e.size());
  }
  if (common == 0) throw DataError("some replicate selected no points");

  BenchResult result;
  result.modes = config.modes;
  result.common_tau = static_cast<long>(common);
  result.mean.setZero(static_cast<Eigen::Index>(common), static_cast<Eigen::Index>(n_modes));
  result.sd.setZero(result.mean.rows(), result.mean.cols());
  result.final_errors.assign(n_modes, {});
  result.realized_rates.assign(n_modes, {});
  const double r = static_cast<double>(n_rep);
  for (std::size_t m = 0; m < n_modes; ++m) {
    for (std::size_t tau = 0; tau < common; ++tau) {
      double sum = 0.0;
      for (const auto& o : outcomes) sum += o.errors[m][tau];
      const double mean = sum / r;
      double ss = 0.0;
      for (const auto& o : outcomes) ss += (o.errors[m][tau] - mean) * (o.errors[m][tau] - mean);
      result.mean(tau, m) = mean;
      result.sd(tau, m) = std::sqrt(ss / (r - 1.0));
    }
    for (const auto& o : outcomes) {
      result.final_errors[m].push_back(o.errors[m][common - 1]);
      result.realized_rates[m].push_back(static_cast<double>(o.selected[m]) /
                                         static_cast<double>(o.steps[m]));
    }
  }
  return result;
}

void write_bench_table(std::ostream& out, const BenchResult& result) {
  out << "tau";
  for (SamplerMode m : result.modes) out << ',' << to_string(m) << "_mean," << to_string(m) << "_sd";
  out << '\n';
  for (Eigen::Index tau = 0; tau < result.mean.rows(); ++tau) {
    out << tau + 1;
    for (Eigen::Index m = 0; m < result.mean.cols(); ++m) {
      out << ',' << io::format_double(result.mean(tau, m)) << ','
          << io::format_double(result.sd(tau, m));
    }
    out << '\n';
  }
}

}  // namespace lsstream
