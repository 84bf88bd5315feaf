#include "lsstream/diagnostics.hpp"
#include "lsstream/error.hpp"
#include "lsstream/pipeline.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <chrono>

using namespace lsstream;

namespace {

std::vector<Observation> varx_observations(int K, long n, std::uint64_t seed, VarxSpec* out = nullptr) {
  const VarxSpec spec = generate_random_stable_coefficients(K, 1, 1, 0.8, seed);
  if (out) *out = spec;
  return observations_from_stream(simulate(spec, NoiseSpec{}, n, -1, seed + 1), spec.layout());
}

RunOptions options(SamplerMode mode, double q, double q0, int n0) {
  RunOptions o;
  o.pipeline.sampler.mode = mode;
  o.pipeline.sampler.q = q;
  o.pipeline.sampler.q0 = q0;
  o.pipeline.sampler.n0 = n0;
  o.pipeline.seed = 77;
  o.keep_decisions = true;
  return o;
}

}  // namespace

TEST(Observations, FromStreamMatchesSimulation) {
  const VarxSpec spec = generate_random_stable_coefficients(2, 2, 1, 0.8, 3);
  const Simulation sim = simulate_detailed(to_system(spec), NoiseSpec{}, 100, -1, 4);
  const auto obs = observations_from_stream(sim.points, spec.layout());
  ASSERT_EQ(obs.size(), 98u);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    EXPECT_EQ(obs[i].x, sim.covariates[i + 2]);
    EXPECT_EQ(obs[i].y, sim.points[i + 2].y);
  }
  LagLayout wrong = spec.layout();
  wrong.K = 3;
  EXPECT_THROW(observations_from_stream(sim.points, wrong), DataError);
}

TEST(FullSample, CentersByFullSampleMeans) {
  const auto obs = varx_observations(2, 500, 5);
  Matrix xs, ys;
  stack_observations(obs, xs, ys);
  const Matrix xc = xs.rowwise() - xs.colwise().mean();
  const Matrix yc = ys.rowwise() - ys.colwise().mean();
  const Matrix b = full_sample_fit(obs);
  EXPECT_LT((b - oracle::least_squares(xc, yc)).norm() / b.norm(), 1e-10);
}

TEST(Online, FullRateMatchesSequentialBatchOracle) {
  const auto obs = varx_observations(3, 1500, 6);
  auto o = options(SamplerMode::kRelaxed, 1.0, 1.0, 60);
  const RunResult r = run_online(obs, o);
  EXPECT_EQ(r.selected, r.steps);
  EXPECT_EQ(r.steps, 1500 - 1 - 60);

  // rows the estimator saw: pilot centered by pilot means, online rows
  // centered by the running means including the current point.
  Matrix xs, ys;
  stack_observations(obs, xs, ys);
  const int n = static_cast<int>(obs.size());
  Matrix cx(n, xs.cols()), cy(n, ys.cols());
  const Vector mx0 = xs.topRows(60).colwise().mean().transpose();
  const Vector my0 = ys.topRows(60).colwise().mean().transpose();
  for (int i = 0; i < 60; ++i) {
    cx.row(i) = xs.row(i) - mx0.transpose();
    cy.row(i) = ys.row(i) - my0.transpose();
  }
  Vector sx = xs.topRows(60).colwise().sum().transpose();
  Vector sy = ys.topRows(60).colwise().sum().transpose();
  for (int i = 60; i < n; ++i) {
    sx += xs.row(i).transpose();
    sy += ys.row(i).transpose();
    cx.row(i) = xs.row(i) - sx.transpose() / (i + 1);
    cy.row(i) = ys.row(i) - sy.transpose() / (i + 1);
  }
  const Matrix ref = oracle::ridge_least_squares(cx, cy, r.final_state.ridge);
  EXPECT_LT((r.final_state.b_hat - ref).norm() / ref.norm(), 1e-6);
  EXPECT_LT((r.mu_x_hat - xs.colwise().mean().transpose()).norm(), 1e-10 * xs.norm());
  // and the online fit lands on the offline reference
  const Matrix full = full_sample_fit(obs);
  EXPECT_LT((r.final_state.b_hat - full).norm() / full.norm(), 1e-2);
}

TEST(Online, MetricsCadenceAndBookkeeping) {
  VarxSpec spec;
  const auto obs = varx_observations(2, 3000, 7, &spec);
  auto o = options(SamplerMode::kRelaxed, 0.1, 0.05, 100);
  o.reference_b = spec.coefficient_stack();
  const RunResult per_update = run_online(obs, o);
  EXPECT_EQ(static_cast<long>(per_update.metrics.size()), per_update.selected);
  for (std::size_t i = 0; i < per_update.metrics.size(); ++i) {
    EXPECT_EQ(per_update.metrics[i].tau, static_cast<long>(i + 1));
    EXPECT_GE(per_update.metrics[i].est_error, 0.0);
  }
  EXPECT_EQ(per_update.decisions.size(), static_cast<std::size_t>(per_update.steps));
  EXPECT_NEAR(per_update.rate(), 0.1, 0.03);

  o.cadence = MetricCadence::kPerStep;
  o.reference_b.reset();
  const RunResult per_step = run_online(obs, o);
  EXPECT_EQ(static_cast<long>(per_step.metrics.size()), per_step.steps);
  EXPECT_TRUE(std::isnan(per_step.metrics.front().est_error));
  EXPECT_EQ(per_step.final_state.b_hat, per_update.final_state.b_hat);
  for (std::size_t i = 1; i < per_step.metrics.size(); ++i) {
    EXPECT_GE(per_step.metrics[i].tau, per_step.metrics[i - 1].tau);
  }

  o.reference_b = Matrix::Ones(1, 1);
  EXPECT_THROW(run_online(obs, o), ValidationError);
  EXPECT_THROW(run_online(std::span(obs).first(100), options(SamplerMode::kLss, 0.1, 0, 100)),
               DataError);
}

TEST(Online, LssNeverUsesBaseBranch) {
  const auto obs = varx_observations(2, 2000, 8);
  const RunResult r = run_online(obs, options(SamplerMode::kLss, 0.1, 0.05, 100));
  for (const auto& d : r.decisions) EXPECT_NE(d.branch, Branch::kBase);
  EXPECT_NEAR(r.rate(), 0.1, 0.03);
}

TEST(Online, UnselectedStepsCarryTheEstimate) {
  const auto obs = varx_observations(2, 600, 9);
  Matrix xs, ys;
  stack_observations(std::span(obs).first(100), xs, ys);
  PipelineConfig cfg;
  cfg.sampler.mode = SamplerMode::kRelaxed;
  cfg.sampler.n0 = 100;
  cfg.seed = 1;
  OnlineEstimator est(ys, xs, cfg);
  for (std::size_t i = 100; i < obs.size(); ++i) {
    const Matrix before = est.estimator().b_hat;
    const long n_before = est.estimator().n_selected;
    const Decision d = est.step(obs[i].y, obs[i].x, obs[i].t);
    if (!d.selected) {
      EXPECT_EQ(est.estimator().b_hat, before);
      EXPECT_EQ(est.estimator().n_selected, n_before);
    } else {
      EXPECT_EQ(est.estimator().n_selected, n_before + 1);
    }
  }
  EXPECT_EQ(est.steps(), 499);
}

TEST(Online, PredictionBeatsZeroCoefficients) {
  const auto obs = varx_observations(3, 6000, 10);
  auto o = options(SamplerMode::kRelaxed, 0.1, 0.05, 100);
  o.cadence = MetricCadence::kPerStep;
  const RunResult r = run_online(obs, o);
  double model = 0.0, zero = 0.0;
  int count = 0;
  for (std::size_t i = 1000; i < r.metrics.size(); ++i) {
    const auto& ob = obs[100 + i];
    model += r.metrics[i].pred_error;
    zero += prediction_error(r.mu_y_hat, ob.y);
    ++count;
  }
  EXPECT_LT(model / count, zero / count);
}

TEST(Online, SelectedStepCostIsQuadratic) {
  // A selected step adds O(p^2 + pK) on top of the O(p^2) score; neither
  // step kind may approach O(p^3).
  const int K = 60;
  const VarxSpec spec = generate_random_stable_coefficients(K, 1, 0, 0.5, 1);
  const auto obs = observations_from_stream(simulate(spec, NoiseSpec{}, 400, -1, 2), spec.layout());
  Matrix xs, ys;
  stack_observations(std::span(obs).first(200), xs, ys);
  auto timed = [&](double q) {
    PipelineConfig cfg;
    cfg.sampler.mode = SamplerMode::kBernoulli;
    cfg.sampler.q = q;
    cfg.sampler.n0 = 200;
    OnlineEstimator est(ys, xs, cfg);
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 200; i < obs.size(); ++i) est.step(obs[i].y, obs[i].x, obs[i].t);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  timed(1.0);  // warm up
  const double all = timed(1.0);
  // a p x p inverse per step would cost far more than 20 rank-one updates
  Matrix a = Matrix::Random(K, K);
  a = a * a.transpose() + Matrix::Identity(K, K);
  const auto start = std::chrono::steady_clock::now();
  double sink = 0.0;
  for (int i = 0; i < 200; ++i) sink += a.inverse()(0, 0);
  const double inverses = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_GT(sink, 0.0);
  EXPECT_LT(all, inverses);
}
