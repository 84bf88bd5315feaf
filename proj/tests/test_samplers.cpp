#include "lsstream/error.hpp"
#include "lsstream/model.hpp"
#include "lsstream/samplers.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace lsstream;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// n0 x p standard Gaussian pilot.
void gaussian_pilot(int n, int p, int K, std::uint64_t seed, Matrix& ys, Matrix& xs) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  xs.resize(n, p);
  ys.resize(n, K);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) xs(i, j) = z(rng);
    for (int k = 0; k < K; ++k) ys(i, k) = z(rng);
  }
}

SamplerConfig config(SamplerMode mode, double q, double q0, int n0) {
  SamplerConfig c;
  c.mode = mode;
  c.q = q;
  c.q0 = q0;
  c.u = 0.1;
  c.n0 = n0;
  return c;
}

}  // namespace

TEST(ChiSquare, ClosedFormsForTwoDegrees) {
  EXPECT_NEAR(chi_square_threshold(2, 0.1), -2.0 * std::log(0.1), 1e-9);
  EXPECT_NEAR(chi_square_threshold(2, 0.5), -2.0 * std::log(0.5), 1e-9);
  EXPECT_THROW(chi_square_threshold(2, 1.0), ValidationError);
  EXPECT_THROW(chi_square_threshold(2, 0.0), ValidationError);
}

TEST(ChiSquare, MatchesEvenDegreeSeries) {
  for (int p : {4, 10, 20, 50}) {
    for (double tail : {0.01, 0.05, 0.1, 0.5}) {
      EXPECT_NEAR(chi_square_threshold(p, tail), oracle::chi2_upper_quantile_even(p, tail), 1e-8)
          << "p=" << p << " tail=" << tail;
    }
  }
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(validate_sampler_config(config(SamplerMode::kRelaxed, 0.1, 0.05, 100), 20));
  EXPECT_THROW(validate_sampler_config(config(SamplerMode::kRelaxed, 0.1, 0.2, 100), 20),
               ValidationError);
  EXPECT_THROW(validate_sampler_config(config(SamplerMode::kRelaxed, 0.0, 0.0, 100), 20),
               ValidationError);
  EXPECT_THROW(validate_sampler_config(config(SamplerMode::kRelaxed, 0.1, 0.05, 20), 20),
               ValidationError);
  auto c = config(SamplerMode::kLss, 0.1, 0.07, 100);
  EXPECT_EQ(c.effective_q0(), 0.0);
  EXPECT_NEAR(c.tail_target(), 0.1, 1e-15);
  c.mode = SamplerMode::kBernoulli;
  EXPECT_FALSE(c.leverage_active());
  c = config(SamplerMode::kRelaxed, 0.1, 0.05, 100);
  EXPECT_NEAR(c.tail_target(), 0.05 / 0.95, 1e-15);
}

TEST(Quantile, HandExample) {
  StreamingQuantile q(0.2);
  for (int i = 10; i >= 1; --i) q.insert(i);
  EXPECT_EQ(q.threshold(), 8.0);
}

TEST(Quantile, Sentinels) {
  StreamingQuantile zero(0.0);
  zero.insert(1.0);
  EXPECT_EQ(zero.threshold(), kInf);
  StreamingQuantile all(1.0);
  all.insert(1.0);
  all.insert(2.0);
  EXPECT_EQ(all.threshold(), -kInf);
  StreamingQuantile empty(0.1);
  EXPECT_THROW(empty.threshold(), DataError);
}

TEST(Quantile, MatchesSortingOracleUnderTiesAndWindow) {
  Rng rng(5);
  std::uniform_int_distribution<int> d(0, 30);
  for (std::size_t window : {std::size_t{0}, std::size_t{37}}) {
    StreamingQuantile q(0.13, window);
    std::vector<double> all;
    for (int i = 0; i < 3000; ++i) {
      const double s = d(rng);
      q.insert(s);
      all.push_back(s);
      std::vector<double> kept = all;
      if (window > 0 && kept.size() > window) kept.erase(kept.begin(), kept.end() - window);
      ASSERT_EQ(q.threshold(), oracle::upper_threshold(kept, 0.13)) << "step " << i;
    }
    if (window > 0) EXPECT_EQ(q.size(), window);
  }
}

TEST(Quantile, ChiSquareTwoDraws) {
  Rng rng(6);
  std::normal_distribution<double> z;
  StreamingQuantile q(0.1);
  for (int i = 0; i < 100000; ++i) {
    const double a = z(rng);
    const double b = z(rng);
    q.insert(a * a + b * b);
  }
  EXPECT_NEAR(q.threshold(), 4.6052, 0.1);
}

TEST(Means, WelfordMatchesBatch) {
  SamplerState s;
  s.mu_x_hat = Vector::Zero(1);
  s.mu_y_hat = Vector::Zero(1);
  s.count = 0;
  for (double v : {1.0, 2.0, 3.0}) update_means(s, Vector::Constant(1, v), Vector::Constant(1, v));
  EXPECT_DOUBLE_EQ(s.mu_x_hat(0), 2.0);
  update_means(s, Vector::Constant(1, 2.0), Vector::Constant(1, 2.0));
  EXPECT_DOUBLE_EQ(s.mu_x_hat(0), 2.0);

  Rng rng(7);
  std::normal_distribution<double> z(5.0, 1.0);
  SamplerState t;
  t.mu_x_hat = Vector::Zero(1);
  t.mu_y_hat = Vector::Zero(1);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double v = z(rng);
    sum += v;
    update_means(t, Vector::Constant(1, v), Vector::Constant(1, v));
  }
  EXPECT_NEAR(t.mu_x_hat(0), 5.0, 0.05);
  EXPECT_NEAR(t.mu_x_hat(0), sum / 10000.0, 1e-10 * 5.0);
}

TEST(Leverage, HandExamples) {
  SamplerState s;
  s.mu_x_hat = Vector::Zero(2);
  s.precision = Matrix::Identity(2, 2);
  EXPECT_DOUBLE_EQ(leverage(s, (Vector(2) << 3, 4).finished()), 25.0);
  EXPECT_DOUBLE_EQ(leverage(s, Vector::Zero(2)), 0.0);
  s.precision = Vector(Vector::LinSpaced(2, 2, 1)).asDiagonal();
  EXPECT_DOUBLE_EQ(leverage(s, Vector::Ones(2)), 3.0);
  EXPECT_THROW(leverage(s, Vector::Ones(3)), ValidationError);
}

TEST(Pilot, SixProtocolAndFiveProtocol) {
  Matrix ys, xs;
  gaussian_pilot(100, 20, 10, 1, ys, xs);
  auto c = config(SamplerMode::kRelaxed, 0.1, 0.05, 100);
  const SamplerState s = pilot_fit(ys, xs, c, 9);
  EXPECT_EQ(s.count, 100);
  EXPECT_NEAR(s.r_hat, chi_square_threshold(20, 0.05 / 0.95), 1e-12);
  EXPECT_EQ(s.leverage_scores.size(), 100u);
  EXPECT_TRUE(linalg::is_symmetric(s.precision));

  gaussian_pilot(500, 12, 4, 2, ys, xs);
  c = config(SamplerMode::kRelaxed, 0.05, 0.025, 500);
  c.u = 0.025;
  EXPECT_NO_THROW(pilot_fit(ys, xs, c, 9));
}

TEST(Pilot, PrecisionIsRegularizedInverseCovariance) {
  Matrix ys, xs;
  gaussian_pilot(60, 5, 1, 3, ys, xs);
  auto c = config(SamplerMode::kLss, 0.1, 0.0, 60);
  c.debias_precision = false;
  const SamplerState s = pilot_fit(ys, xs, c, 1);
  const Matrix centered = xs.rowwise() - xs.colwise().mean();
  Matrix cov = centered.transpose() * centered / 59.0;
  cov.diagonal().array() += 1e-6 * cov.trace() / 5.0;
  EXPECT_LT((s.precision - cov.inverse()).norm() / cov.inverse().norm(), 1e-10);
  EXPECT_LT((s.mu_x_hat - xs.colwise().mean().transpose()).norm(), 1e-14);
}

TEST(Pilot, TooSmallRejected) {
  Matrix ys, xs;
  gaussian_pilot(5, 5, 1, 3, ys, xs);
  EXPECT_THROW(pilot_fit(ys, xs, config(SamplerMode::kLss, 0.1, 0.0, 5), 1), ValidationError);
}

TEST(Pilot, BernoulliThresholdIsInfinite) {
  Matrix ys, xs;
  gaussian_pilot(30, 3, 1, 3, ys, xs);
  const SamplerState s = pilot_fit(ys, xs, config(SamplerMode::kBernoulli, 0.1, 0.0, 30), 1);
  EXPECT_EQ(s.r_hat, kInf);
}

TEST(Decide, BranchExamples) {
  SamplerState s;
  s.mu_x_hat = Vector::Zero(1);
  s.precision = Matrix::Identity(1, 1);
  s.r_hat = 5.0;
  const auto c = config(SamplerMode::kRelaxed, 0.1, 0.05, 2);
  // Find draws with the required U_t by scanning seeds.
  auto with_draw = [&](auto pred) {
    for (std::uint64_t seed = 0;; ++seed) {
      Rng r(seed);
      if (pred(uniform_open01(r))) return seed;
    }
  };
  s.selection_rng.seed(with_draw([](double u) { return u < 0.05; }));
  Decision d = decide(s, c, Vector::Constant(1, 0.1));
  EXPECT_TRUE(d.selected);
  EXPECT_EQ(d.branch, Branch::kBase);

  s.selection_rng.seed(with_draw([](double u) { return u > 0.4 && u < 0.6; }));
  d = decide(s, c, Vector::Constant(1, std::sqrt(10.0)));
  EXPECT_TRUE(d.selected);
  EXPECT_EQ(d.branch, Branch::kLeverage);
  EXPECT_EQ(d.s_hat, 1.0);

  s.selection_rng.seed(with_draw([](double u) { return u > 0.4 && u < 0.6; }));
  d = decide(s, c, Vector::Constant(1, std::sqrt(2.0)));
  EXPECT_FALSE(d.selected);
  EXPECT_EQ(d.branch, Branch::kRejected);
  EXPECT_EQ(d.s_hat, 0.05);
}

TEST(Decide, RaisingThresholdNeverAddsLeverageSelections) {
  Matrix ys, xs;
  gaussian_pilot(50, 4, 1, 8, ys, xs);
  const auto c = config(SamplerMode::kRelaxed, 0.2, 0.05, 50);
  SamplerState lo = pilot_fit(ys, xs, c, 3);
  SamplerState hi = pilot_fit(ys, xs, c, 3);
  Rng rng(4);
  std::normal_distribution<double> z;
  for (int i = 0; i < 2000; ++i) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x(j) = z(rng);
    lo.r_hat = 5.0;
    hi.r_hat = 6.0;
    const Decision a = decide(lo, c, x);
    const Decision b = decide(hi, c, x);
    ASSERT_EQ(a.uniform_draw, b.uniform_draw);
    if (a.branch == Branch::kRejected) EXPECT_NE(b.branch, Branch::kLeverage);
    EXPECT_EQ(a.selected, a.uniform_draw <= a.s_hat);
  }
}

TEST(Decide, ModeReductionsAreBitwise) {
  Matrix ys, xs;
  gaussian_pilot(40, 3, 1, 8, ys, xs);
  Rng rng(5);
  std::normal_distribution<double> z;
  std::vector<Vector> stream;
  for (int i = 0; i < 3000; ++i) stream.push_back(Vector::NullaryExpr(3, [&](Eigen::Index) { return z(rng); }));

  auto run = [&](SamplerConfig c) {
    SamplerState s = pilot_fit(ys, xs, c, 17);
    std::vector<Decision> out;
    for (const auto& x : stream) {
      update_means(s, Vector::Zero(1), x);
      out.push_back(decide(s, c, x));
      update_threshold(s, c, out.back());
      if (c.leverage_active()) sparse_precision_update(s, x, c);
    }
    return out;
  };
  auto same = [](const std::vector<Decision>& a, const std::vector<Decision>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool lev = (std::isnan(a[i].leverage) && std::isnan(b[i].leverage)) ||
                       a[i].leverage == b[i].leverage;
      if (!lev || a[i].selected != b[i].selected || a[i].threshold != b[i].threshold ||
          a[i].s_hat != b[i].s_hat || a[i].uniform_draw != b[i].uniform_draw ||
          a[i].branch != b[i].branch)
        return false;
    }
    return true;
  };
  EXPECT_TRUE(same(run(config(SamplerMode::kRelaxed, 0.1, 0.1, 40)),
                   run(config(SamplerMode::kBernoulli, 0.1, 0.0, 40))));
  EXPECT_TRUE(same(run(config(SamplerMode::kRelaxed, 0.1, 0.0, 40)),
                   run(config(SamplerMode::kLss, 0.1, 0.0, 40))));
  for (const auto& d : run(config(SamplerMode::kLss, 0.1, 0.0, 40))) {
    EXPECT_NE(d.branch, Branch::kBase);
  }
}

TEST(Precision, ShermanMorrisonMatchesDirectInverse) {
  Matrix ys, xs;
  gaussian_pilot(30, 10, 1, 1, ys, xs);
  auto c = config(SamplerMode::kLss, 0.1, 0.0, 30);
  c.u = 1.0;
  c.debias_precision = false;
  SamplerState s = pilot_fit(ys, xs, c, 5);
  const Matrix centered = xs.rowwise() - xs.colwise().mean();
  Matrix sum = centered.transpose() * centered;
  sum.diagonal().array() += 29.0 * 1e-6 * (sum / 29.0).trace() / 10.0;
  double m = 29.0;
  Rng rng(2);
  std::normal_distribution<double> z;
  for (int i = 0; i < 500; ++i) {
    const Vector x = Vector::NullaryExpr(10, [&](Eigen::Index) { return z(rng); });
    update_means(s, Vector::Zero(1), x);
    ASSERT_TRUE(sparse_precision_update(s, x, c));
    const Vector d = x - s.mu_x_hat;
    sum += d * d.transpose();
    m += 1.0;
  }
  const Matrix direct = m * sum.inverse();
  EXPECT_LT((s.precision - direct).norm() / direct.norm(), 1e-8);
  EXPECT_EQ(s.precision_updates, 500);
}

TEST(Precision, DebiasedScaleAndFullRateConvergence) {
  EXPECT_DOUBLE_EQ(precision_scale(100.0, 20, false), 100.0);
  EXPECT_DOUBLE_EQ(precision_scale(100.0, 20, true), 79.0);
  EXPECT_DOUBLE_EQ(precision_scale(30.0, 20, true), 15.0);

  Matrix ys, xs;
  gaussian_pilot(50, 4, 1, 3, ys, xs);
  for (bool debias : {false, true}) {
    auto c = config(SamplerMode::kLss, 0.1, 0.0, 50);
    c.u = 1.0;
    c.debias_precision = debias;
    SamplerState s = pilot_fit(ys, xs, c, 5);
    Rng rng(9);
    std::normal_distribution<double> z;
    for (int i = 0; i < 10000; ++i) {
      const Vector x = Vector::NullaryExpr(4, [&](Eigen::Index) { return z(rng); });
      update_means(s, Vector::Zero(1), x);
      sparse_precision_update(s, x, c);
    }
    EXPECT_LT((s.precision - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.1);
  }
}

TEST(Precision, ZeroRateAndZeroDeviationLeaveStateUnchanged) {
  Matrix ys, xs;
  gaussian_pilot(50, 4, 1, 3, ys, xs);
  auto c = config(SamplerMode::kLss, 0.1, 0.0, 50);
  c.u = 0.0;
  SamplerState s = pilot_fit(ys, xs, c, 5);
  const Matrix p0 = s.precision;
  for (int i = 0; i < 1000; ++i) sparse_precision_update(s, Vector::Ones(4) * i, c);
  EXPECT_EQ(s.precision, p0);

  c.u = 1.0;
  EXPECT_FALSE(sparse_precision_update(s, s.mu_x_hat, c));
  EXPECT_EQ(s.precision, p0);
}

TEST(Rate, EmptyDecisionsRejected) {
  std::vector<Decision> none;
  EXPECT_THROW(realized_rate(none), ValidationError);
  std::vector<Decision> all(4);
  for (auto& d : all) d.selected = true;
  EXPECT_EQ(realized_rate(all), 1.0);
}

TEST(Rate, IidGaussianExceedanceConvergesToTail) {
  const int p = 20;
  Matrix ys, xs;
  gaussian_pilot(100, p, 1, 4, ys, xs);
  const auto c = config(SamplerMode::kRelaxed, 0.1, 0.05, 100);
  SamplerState s = pilot_fit(ys, xs, c, 6);
  Rng rng(10);
  std::normal_distribution<double> z;
  long leverage_hits = 0;
  const int n = 25000;
  for (int i = 0; i < n; ++i) {
    const Vector x = Vector::NullaryExpr(p, [&](Eigen::Index) { return z(rng); });
    update_means(s, Vector::Zero(1), x);
    const Decision d = decide(s, c, x);
    leverage_hits += d.leverage > d.threshold ? 1 : 0;
    update_threshold(s, c, d);
    sparse_precision_update(s, x, c);
  }
  EXPECT_NEAR(static_cast<double>(leverage_hits) / n, c.tail_target(), 0.01);
}
