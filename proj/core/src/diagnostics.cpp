#include "lsstream/diagnostics.hpp"

#include "lsstream/error.hpp"
#include "lsstream/samplers.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lsstream {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

DesignSummary estimate_gamma(const SamplingFunction& sampling_fn,
                             const CovariateSampler& covariate_sampler,
                             const Vector& mu_x, long n_mc, std::uint64_t seed) {
  if (n_mc <= 0) throw ValidationError("n_mc must be positive");
  const Eigen::Index p = mu_x.size();
  const int batches = n_mc >= kMonteCarloBatches ? kMonteCarloBatches : 1;

  Rng rng(derive_seed(seed, SeedPurpose::kMonteCarlo));
  Matrix total = Matrix::Zero(p, p);
  double rate_sum = 0.0;
  Vector x(p);
  Vector d(p);
  DesignSummary out;
  out.n_mc = n_mc;
  long drawn = 0;
  for (int b = 0; b < batches; ++b) {
    const long end = n_mc * (b + 1) / batches;
    const long count = end - drawn;
    Matrix batch = Matrix::Zero(p, p);
    for (; drawn < end; ++drawn) {
      covariate_sampler(rng, x);
      d = x - mu_x;
      const double s = sampling_fn(d);
      rate_sum += s;
      if (s != 0.0) batch.selfadjointView<Eigen::Lower>().rankUpdate(d, s);
    }
    batch = batch.selfadjointView<Eigen::Lower>();
    total += batch;
    if (batches > 1) out.batch_dets.push_back((batch / static_cast<double>(count)).determinant());
  }
  out.gamma_hat = total / static_cast<double>(n_mc);
  out.q_hat = rate_sum / static_cast<double>(n_mc);
  out.det_gamma = out.gamma_hat.determinant();
  out.det_se = sample_sd(out.batch_dets) / std::sqrt(static_cast<double>(batches));
  return out;
}

Matrix precision_matrix(const Matrix& omega, const Matrix& gamma, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("rate q must lie in (0, 1]");
  if (omega.rows() != omega.cols() || gamma.rows() != gamma.cols()) {
    throw ValidationError("omega and gamma must be square");
  }
  const Matrix omega_inv = linalg::spd_inverse(omega, "omega");
  // Only checks that gamma is invertible.
  (void)linalg::spd_inverse(gamma, "gamma");
  return linalg::kron(omega_inv, gamma / q);
}

double LeverageLaw::upper_quantile(double tail) const {
  if (tail <= 0.0) return kInf;
  if (tail >= 1.0) return 0.0;
  if (family == NoiseFamily::kGaussian) return chi_square_threshold(p, tail);
  const boost::math::fisher_f_distribution<double> f(p, df);
  return p * boost::math::quantile(boost::math::complement(f, tail));
}

std::vector<Candidate> builtin_candidates(double q, double q0,
                                          const LeverageLaw& law,
                                          const Matrix& precision) {
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("rate q must lie in (0, 1]");
  if (!(q0 >= 0.0 && q0 <= q)) throw ValidationError("base rate q0 must lie in [0, q]");
  const double a = q0 >= q ? 0.0 : (q - q0) / (1.0 - q0);
  auto lev = [precision](const Vector& d) { return d.dot(precision * d); };
  auto mix = [q0](bool hit) { return hit ? 1.0 : q0; };

  const double r_upper = law.upper_quantile(a);
  const double r_lower = law.upper_quantile(1.0 - a);
  const double band_lo = law.upper_quantile(0.5 + 0.5 * a);
  const double band_hi = law.upper_quantile(0.5 - 0.5 * a);

  std::vector<Candidate> out;
  out.push_back({"upper_tail",
                 [=](const Vector& d) { return mix(a > 0.0 && lev(d) > r_upper); },
                 true});
  out.push_back({"lower_tail",
                 [=](const Vector& d) { return mix(a > 0.0 && lev(d) <= r_lower); },
                 true});
  out.push_back({"middle_band",
                 [=](const Vector& d) {
                   const double l = lev(d);
                   return mix(a > 0.0 && l > band_lo && l <= band_hi);
                 },
                 true});
  out.push_back({"bernoulli", [q](const Vector&) { return q; }, true});
  if (q0 > 0.0) {
    const double r_lss = law.upper_quantile(q);
    out.push_back({"lss", [=](const Vector& d) { return lev(d) > r_lss ? 1.0 : 0.0; },
                   false});
  }
  return out;
}

const CandidateResult& OracleReport::find(const std::string& name) const {
  for (const auto& r : ranked) {
    if (r.name == name) return r;
  }
  throw ValidationError("no candidate named '" + name + "'");
}

OracleReport d_optimality_oracle(double q, double q0,
                                 const CovariateSampler& covariate_sampler,
                                 const Vector& mu_x,
                                 const std::vector<Candidate>& candidates,
                                 long n_mc, std::uint64_t seed) {
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("rate q must lie in (0, 1]");
  if (!(q0 >= 0.0 && q0 <= q)) throw ValidationError("base rate q0 must lie in [0, q]");
  if (candidates.empty()) throw ValidationError("no candidates");

  OracleReport report;
  report.q = q;
  report.q0 = q0;
  for (const auto& c : candidates) {
    CandidateResult r{c.name, c.admissible,
                      estimate_gamma(c.fn, covariate_sampler, mu_x, n_mc, seed)};
    if (std::abs(r.summary.q_hat - q) > 0.01) {
      throw ValidationError("candidate '" + c.name + "' has Monte Carlo rate " +
                            std::to_string(r.summary.q_hat) + ", target " +
                            std::to_string(q));
    }
    report.ranked.push_back(std::move(r));
  }
  std::stable_sort(report.ranked.begin(), report.ranked.end(),
                   [](const CandidateResult& a, const CandidateResult& b) {
                     return a.summary.det_gamma > b.summary.det_gamma;
                   });

  const CandidateResult* first = nullptr;
  const CandidateResult* second = nullptr;
  for (const auto& r : report.ranked) {
    if (!r.admissible) continue;
    if (!first) {
      first = &r;
    } else if (!second) {
      second = &r;
    }
  }
  if (first) report.leader = first->name;
  if (first && second) {
    report.runner_up = second->name;
    report.gap = first->summary.det_gamma - second->summary.det_gamma;
    std::vector<double> diffs;
    const auto& a = first->summary.batch_dets;
    const auto& b = second->summary.batch_dets;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      diffs.push_back(a[i] - b[i]);
    }
    report.gap_se = sample_sd(diffs) / std::sqrt(static_cast<double>(diffs.size()));
    report.optimum_first =
        first->name == "upper_tail" && std::isfinite(report.gap_se) &&
        report.gap > 3.0 * report.gap_se;
  }
  return report;
}

NormalityReport normality_check(
    const std::vector<std::pair<Matrix, long>>& replicate_estimates,
    const Matrix& b_true, const Matrix& precision) {
  const int n = static_cast<int>(replicate_estimates.size());
  if (n < 50) {
    throw ValidationError("normality check needs at least 50 replicates, got " +
                          std::to_string(n));
  }
  const Eigen::Index dim = b_true.size();
  if (precision.rows() != dim || precision.cols() != dim) {
    throw ValidationError("precision matrix dimension does not match vec(B)");
  }
  Matrix z(n, dim);
  for (int r = 0; r < n; ++r) {
    const auto& [b_hat, count] = replicate_estimates[r];
    if (b_hat.rows() != b_true.rows() || b_hat.cols() != b_true.cols()) {
      throw ValidationError("replicate estimate has the wrong shape");
    }
    z.row(r) = std::sqrt(static_cast<double>(count)) *
               linalg::vec(b_hat - b_true).transpose();
  }
  const Vector mean = z.colwise().mean().transpose();
  const Matrix centered = z.rowwise() - mean.transpose();

  NormalityReport report;
  report.replicates = n;
  report.empirical_cov = centered.transpose() * centered / static_cast<double>(n - 1);
  report.target_cov = linalg::spd_inverse(precision, "precision matrix");
  report.relative_frobenius =
      linalg::relative_frobenius(report.empirical_cov, report.target_cov);
  report.variance_ratios = report.empirical_cov.diagonal().cwiseQuotient(
      report.target_cov.diagonal());
  return report;
}

double estimation_error(const Matrix& b_hat, const Matrix& b_ref) {
  if (b_hat.rows() != b_ref.rows() || b_hat.cols() != b_ref.cols()) {
    throw ValidationError("coefficient shapes differ");
  }
  const double ref = b_ref.norm();
  if (ref == 0.0) throw ValidationError("reference coefficients are all zero");
  return (b_hat - b_ref).norm() / ref;
}

double prediction_error(const Vector& y_hat, const Vector& y) {
  if (y_hat.size() != y.size()) throw ValidationError("prediction length differs");
  const double ref = y.norm();
  if (ref == 0.0) throw ValidationError("observed response is all zeros");
  return (y_hat - y).norm() / ref;
}

}  // namespace lsstream
