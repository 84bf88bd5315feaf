#include "lsstream/pipeline.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace lsstream {

std::vector<Observation> observations_from_stream(
    std::span<const StreamPoint> points, const LagLayout& layout) {
  CovariateEmbedder embedder(layout);
  std::vector<Observation> out;
  if (points.size() > embedder.capacity()) out.reserve(points.size() - embedder.capacity());
  for (const auto& pt : points) {
    if (pt.y.size() != layout.K) {
      throw DataError("stream dimension " + std::to_string(pt.y.size()) +
                      " does not match model dimension " + std::to_string(layout.K));
    }
    if (embedder.ready()) out.push_back(Observation{pt.t, pt.y, embedder.next().x});
    embedder.push(pt);
  }
  return out;
}

std::vector<Observation> observations_from_table(const LoadTable& table,
                                                 const SeasonalVarxSpec& spec) {
  return observations_from_table(table, spec.layout());
}

std::vector<Observation> observations_from_table(const LoadTable& table,
                                                 const LagLayout& layout) {
  Replay replay(table, layout);
  std::vector<Observation> out;
  out.reserve(replay.total());
  while (auto item = replay.next()) {
    out.push_back(Observation{item->first.t, std::move(item->first.y),
                              std::move(item->second.x)});
  }
  return out;
}

void stack_observations(std::span<const Observation> obs, Matrix& xs, Matrix& ys) {
  if (obs.empty()) throw ValidationError("no observations");
  const Eigen::Index n = static_cast<Eigen::Index>(obs.size());
  xs.resize(n, obs.front().x.size());
  ys.resize(n, obs.front().y.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    xs.row(i) = obs[i].x.transpose();
    ys.row(i) = obs[i].y.transpose();
  }
}

Matrix full_sample_fit(std::span<const Observation> obs) {
  Matrix xs;
  Matrix ys;
  stack_observations(obs, xs, ys);
  const Matrix xc = xs.rowwise() - xs.colwise().mean();
  const Matrix yc = ys.rowwise() - ys.colwise().mean();
  return batch_ls(xc, yc);
}

namespace {

SamplerState make_sampler(const Matrix& ys, const Matrix& xs,
                          const PipelineConfig& config) {
  return pilot_fit(ys, xs, config.sampler, config.seed);
}

RlsState make_estimator(const Matrix& ys, const Matrix& xs,
                        const SamplerState& sampler,
                        const PipelineConfig& config) {
  const Matrix xc = xs.rowwise() - sampler.mu_x_hat.transpose();
  const Matrix yc = ys.rowwise() - sampler.mu_y_hat.transpose();
  return init_estimator(xc, yc, config.ridge);
}

}  // namespace

OnlineEstimator::OnlineEstimator(const Matrix& pilot_ys, const Matrix& pilot_xs,
                                 PipelineConfig config)
    : config_(std::move(config)),
      sampler_(make_sampler(pilot_ys, pilot_xs, config_)),
      rls_(make_estimator(pilot_ys, pilot_xs, sampler_, config_)) {}

Decision OnlineEstimator::step(const Vector& y, const Vector& x, long t) {
  update_means(sampler_, y, x);
  Decision decision = decide(sampler_, config_.sampler, x, t);
  if (decision.selected) {
    const Vector xc = x - sampler_.mu_x_hat;
    const Vector yc = y - sampler_.mu_y_hat;
    if (rls_update(rls_, xc, yc)) {
      update_omega(rls_, yc - rls_.b_hat.transpose() * xc);
    }
  }
  update_threshold(sampler_, config_.sampler, decision);
  if (config_.sampler.leverage_active()) {
    sparse_precision_update(sampler_, x, config_.sampler);
  }
  ++steps_;
  return decision;
}

Vector OnlineEstimator::predict(const Vector& x_next) const {
  return lsstream::predict(rls_, sampler_.mu_x_hat, sampler_.mu_y_hat, x_next);
}

RunResult run_online(std::span<const Observation> obs, const RunOptions& options) {
  const auto n0 = static_cast<std::size_t>(options.pipeline.sampler.n0);
  if (obs.size() <= n0) {
    throw DataError("stream of " + std::to_string(obs.size()) +
                    " observations is too short for a pilot of " + std::to_string(n0));
  }
  Matrix pilot_xs;
  Matrix pilot_ys;
  stack_observations(obs.first(n0), pilot_xs, pilot_ys);
  if (options.reference_b &&
      (options.reference_b->rows() != pilot_xs.cols() ||
       options.reference_b->cols() != pilot_ys.cols())) {
    throw ValidationError("reference coefficients have the wrong shape");
  }

  OnlineEstimator est(pilot_ys, pilot_xs, options.pipeline);
  RunResult result;
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  const auto online = obs.subspan(n0);
  result.metrics.reserve(options.cadence == MetricCadence::kPerStep ? online.size() : 0);
  if (options.keep_decisions) result.decisions.reserve(online.size());

  for (const auto& o : online) {
    const Vector y_hat = est.predict(o.x);
    const double ynorm = o.y.norm();
    const double pred = ynorm > 0.0 ? (y_hat - o.y).norm() / ynorm : kNaN;

    const Decision d = est.step(o.y, o.x, o.t);
    if (d.selected) ++result.selected;
    if (options.keep_decisions) result.decisions.push_back(d);

    const bool record = options.cadence == MetricCadence::kPerStep || d.selected;
    if (record) {
      MetricRecord r;
      r.tau = est.estimator().n_selected;
      r.t = o.t;
      r.n_selected = est.estimator().n_selected;
      r.pred_error = pred;
      r.est_error = options.reference_b
                        ? estimation_error(est.estimator().b_hat, *options.reference_b)
                        : kNaN;
      result.metrics.push_back(r);
    }
  }
  result.steps = est.steps();
  result.final_state = est.estimator();
  result.mu_x_hat = est.sampler().mu_x_hat;
  result.mu_y_hat = est.sampler().mu_y_hat;
  return result;
}

}  // namespace lsstream
