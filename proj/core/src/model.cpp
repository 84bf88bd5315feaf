#include "lsstream/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace lsstream {

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

std::string to_string(NoiseFamily family) {
  return family == NoiseFamily::kGaussian ? "gaussian" : "student_t";
}

NoiseFamily parse_noise_family(const std::string& name) {
  if (name == "gaussian" || name == "normal") return NoiseFamily::kGaussian;
  if (name == "student_t" || name == "t" || name == "studentt") {
    return NoiseFamily::kStudentT;
  }
  throw ValidationError("unknown noise family '" + name + "'");
}

void validate_noise(const NoiseSpec& noise) {
  if (noise.family == NoiseFamily::kStudentT && !(noise.df > 2.0)) {
    throw ValidationError("student_t noise needs df > 2 for a finite covariance");
  }
  if (noise.scale.size() > 0) {
    if (!linalg::is_symmetric(noise.scale)) {
      throw SpecError(SpecErrorKind::kNotSymmetric, "noise scale is not symmetric");
    }
    if (!(linalg::min_eigenvalue(noise.scale) > 0.0)) {
      throw SpecError(SpecErrorKind::kNotPositiveDefinite,
                      "noise scale is not positive definite");
    }
  }
}

Matrix noise_covariance(NoiseFamily family, double df, const Matrix& scatter) {
  if (family == NoiseFamily::kGaussian) return scatter;
  return df / (df - 2.0) * scatter;
}

EllipticalSampler::EllipticalSampler(Vector mu, const Matrix& scatter,
                                     NoiseFamily family, double df)
    : mu_(std::move(mu)), family_(family), df_(df) {
  if (scatter.rows() != mu_.size() || scatter.cols() != mu_.size()) {
    throw ValidationError("scatter dimension does not match location");
  }
  if (family == NoiseFamily::kStudentT && !(df > 0.0)) {
    throw ValidationError("student_t sampler needs df > 0");
  }
  try {
    root_ = linalg::symmetric_sqrt(scatter);
  } catch (const SingularMatrixError&) {
    throw SpecError(SpecErrorKind::kNotPositiveDefinite,
                    "scatter matrix is not positive definite");
  }
}

void EllipticalSampler::draw_into(Rng& rng, Eigen::Ref<Vector> out) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(mu_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  if (family_ == NoiseFamily::kStudentT) {
    std::chi_squared_distribution<double> chi2(df_);
    z /= std::sqrt(chi2(rng) / df_);
  }
  out.noalias() = root_ * z;
  out += mu_;
}

Vector EllipticalSampler::draw(Rng& rng) const {
  Vector out(mu_.size());
  draw_into(rng, out);
  return out;
}

Vector sample_elliptical(const Vector& mu, const Matrix& sigma,
                         NoiseFamily family, double df, Rng& rng) {
  thread_local Matrix cached_sigma;
  thread_local Matrix cached_root;
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
    throw ValidationError("scatter dimension does not match location");
  }
  if (cached_sigma.rows() != sigma.rows() || cached_sigma.cols() != sigma.cols() ||
      cached_sigma != sigma) {
    try {
      cached_root = linalg::symmetric_sqrt(sigma);
    } catch (const SingularMatrixError&) {
      throw SpecError(SpecErrorKind::kNotPositiveDefinite,
                      "scatter matrix is not positive definite");
    }
    cached_sigma = sigma;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(mu.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  if (family == NoiseFamily::kStudentT) {
    std::chi_squared_distribution<double> chi2(df);
    z /= std::sqrt(chi2(rng) / df);
  }
  return mu + cached_root * z;
}

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

int LagLayout::max_lag() const {
  int m = 0;
  for (int l : y_lags) m = std::max(m, l);
  for (int l : v_lags) m = std::max(m, l);
  return m;
}

namespace {

Matrix stack_transposed(const std::vector<Matrix>& blocks, int K) {
  Matrix b(K * static_cast<int>(blocks.size()), K);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    b.block(static_cast<Eigen::Index>(i) * K, 0, K, K) = blocks[i].transpose();
  }
  return b;
}

Vector stack_means(const LagLayout& layout, const Vector& mu_y, const Vector& mu_v) {
  Vector mu(layout.dim());
  Eigen::Index pos = 0;
  for (std::size_t i = 0; i < layout.y_lags.size(); ++i, pos += layout.K) {
    mu.segment(pos, layout.K) = mu_y;
  }
  for (std::size_t i = 0; i < layout.v_lags.size(); ++i, pos += layout.K) {
    mu.segment(pos, layout.K) = mu_v;
  }
  return mu;
}

Vector zero_if_empty(const Vector& v, int K) {
  return v.size() == 0 ? Vector::Zero(K) : v;
}

}  // namespace

LagLayout VarxSpec::layout() const {
  LagLayout out{K, {}, {}};
  for (int i = 1; i <= p1; ++i) out.y_lags.push_back(i);
  for (int j = 1; j <= p2; ++j) out.v_lags.push_back(j);
  return out;
}

Matrix VarxSpec::coefficient_stack() const { return to_system(*this).coefficient_stack(); }
Vector VarxSpec::covariate_mean() const { return to_system(*this).covariate_mean(); }

LagLayout SeasonalVarxSpec::layout() const {
  LagLayout out{K, {}, {}};
  for (int i = 1; i <= p1; ++i) out.y_lags.push_back(i);
  for (int j = 1; j <= p2_seasonal; ++j) out.y_lags.push_back(period * j);
  return out;
}

Matrix SeasonalVarxSpec::coefficient_stack() const {
  return to_system(*this).coefficient_stack();
}
Vector SeasonalVarxSpec::covariate_mean() const {
  return to_system(*this).covariate_mean();
}

Matrix LinearSystem::coefficient_stack() const {
  return stack_transposed(blocks, layout.K);
}

Vector LinearSystem::covariate_mean() const {
  return stack_means(layout, zero_if_empty(mu_y, layout.K),
                     zero_if_empty(mu_v, layout.K));
}

LinearSystem to_system(const VarxSpec& spec) {
  LinearSystem sys;
  sys.layout = spec.layout();
  sys.blocks = spec.phi;
  sys.blocks.insert(sys.blocks.end(), spec.psi.begin(), spec.psi.end());
  sys.omega = spec.omega;
  sys.mu_y = zero_if_empty(spec.mu_y, spec.K);
  sys.mu_v = zero_if_empty(spec.mu_v, spec.K);
  return sys;
}

LinearSystem to_system(const SeasonalVarxSpec& spec) {
  LinearSystem sys;
  sys.layout = spec.layout();
  sys.blocks = spec.phi;
  sys.blocks.insert(sys.blocks.end(), spec.theta.begin(), spec.theta.end());
  sys.omega = spec.omega;
  sys.mu_y = zero_if_empty(spec.mu_y, spec.K);
  sys.mu_v = Vector::Zero(spec.K);
  return sys;
}

Matrix companion_matrix(const std::vector<Matrix>& ar_blocks) {
  if (ar_blocks.empty()) return Matrix();
  const Eigen::Index K = ar_blocks.front().rows();
  const Eigen::Index L = static_cast<Eigen::Index>(ar_blocks.size());
  Matrix c = Matrix::Zero(K * L, K * L);
  for (Eigen::Index l = 0; l < L; ++l) c.block(0, l * K, K, K) = ar_blocks[l];
  if (L > 1) c.block(K, 0, K * (L - 1), K * (L - 1)).setIdentity();
  return c;
}

namespace {

std::vector<Matrix> expanded_ar_blocks(const LinearSystem& sys) {
  const int K = sys.layout.K;
  int L = 0;
  for (int l : sys.layout.y_lags) L = std::max(L, l);
  std::vector<Matrix> out(L, Matrix::Zero(K, K));
  for (std::size_t i = 0; i < sys.layout.y_lags.size(); ++i) {
    out[sys.layout.y_lags[i] - 1] += sys.blocks[i];
  }
  return out;
}

void check_square(const Matrix& m, int K, const std::string& name) {
  if (m.rows() != K || m.cols() != K) {
    std::ostringstream msg;
    msg << name << " is " << m.rows() << "x" << m.cols() << ", expected " << K
        << "x" << K;
    throw SpecError(SpecErrorKind::kDimensionMismatch, msg.str());
  }
}

void check_vector(const Vector& v, int K, const std::string& name) {
  if (v.size() != 0 && v.size() != K) {
    throw SpecError(SpecErrorKind::kDimensionMismatch,
                    name + " has length " + std::to_string(v.size()) +
                        ", expected " + std::to_string(K));
  }
}

void check_omega_and_stationarity(const LinearSystem& sys) {
  if (!linalg::is_symmetric(sys.omega)) {
    throw SpecError(SpecErrorKind::kNotSymmetric, "omega is not symmetric");
  }
  if (!(linalg::min_eigenvalue(sys.omega) > 0.0)) {
    throw SpecError(SpecErrorKind::kNotPositiveDefinite,
                    "omega is not positive definite");
  }
  const double radius = companion_radius(sys);
  if (!(radius < 1.0)) {
    std::ostringstream msg;
    msg << "companion spectral radius " << radius << " >= 1 (non-stationary)";
    throw SpecError(SpecErrorKind::kNonStationary, msg.str());
  }
}

}  // namespace

double companion_radius(const LinearSystem& system) {
  return linalg::spectral_radius(companion_matrix(expanded_ar_blocks(system)));
}

const VarxSpec& validate_spec(const VarxSpec& spec) {
  if (spec.K <= 0 || spec.p1 < 0 || spec.p2 < 0 || spec.p1 + spec.p2 == 0) {
    throw SpecError(SpecErrorKind::kDimensionMismatch,
                    "need K > 0 and at least one lag");
  }
  if (static_cast<int>(spec.phi.size()) != spec.p1 ||
      static_cast<int>(spec.psi.size()) != spec.p2) {
    throw SpecError(SpecErrorKind::kDimensionMismatch,
                    "number of coefficient matrices does not match (p1, p2)");
  }
  for (std::size_t i = 0; i < spec.phi.size(); ++i) {
    check_square(spec.phi[i], spec.K, "phi_" + std::to_string(i + 1));
  }
  for (std::size_t j = 0; j < spec.psi.size(); ++j) {
    check_square(spec.psi[j], spec.K, "psi_" + std::to_string(j + 1));
  }
  check_square(spec.omega, spec.K, "omega");
  check_vector(spec.mu_y, spec.K, "mu_y");
  check_vector(spec.mu_v, spec.K, "mu_v");
  check_omega_and_stationarity(to_system(spec));
  return spec;
}

const SeasonalVarxSpec& validate_spec(const SeasonalVarxSpec& spec) {
  if (spec.K <= 0 || spec.p1 < 0 || spec.p2_seasonal < 0 ||
      spec.p1 + spec.p2_seasonal == 0) {
    throw SpecError(SpecErrorKind::kDimensionMismatch,
                    "need K > 0 and at least one lag");
  }
  if (spec.p2_seasonal > 0 && spec.period <= spec.p1) {
    throw SpecError(SpecErrorKind::kDimensionMismatch,
                    "seasonal period must exceed the autoregressive order");
  }
  if (static_cast<int>(spec.phi.size()) != spec.p1 ||
      static_cast<int>(spec.theta.size()) != spec.p2_seasonal) {
    throw SpecError(SpecErrorKind::kDimensionMismatch,
                    "number of coefficient matrices does not match (p1, p2_seasonal)");
  }
  for (std::size_t i = 0; i < spec.phi.size(); ++i) {
    check_square(spec.phi[i], spec.K, "phi_" + std::to_string(i + 1));
  }
  for (std::size_t j = 0; j < spec.theta.size(); ++j) {
    check_square(spec.theta[j], spec.K, "theta_" + std::to_string(j + 1));
  }
  check_square(spec.omega, spec.K, "omega");
  check_vector(spec.mu_y, spec.K, "mu_y");
  check_omega_and_stationarity(to_system(spec));
  return spec;
}

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols, double sd) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
  }
  return m;
}

Matrix random_covariance(Rng& rng, int K) {
  const Matrix a = random_matrix(rng, K, K, 1.0 / std::sqrt(static_cast<double>(K)));
  Matrix omega = a * a.transpose() + 0.1 * Matrix::Identity(K, K);
  linalg::symmetrize(omega);
  return omega;
}

void check_generator_args(int K, double target_radius) {
  if (K <= 0) throw ValidationError("K must be positive");
  if (!(target_radius > 0.0 && target_radius < 1.0)) {
    throw ValidationError("target_radius must lie in (0, 1)");
  }
}

}  // namespace

VarxSpec generate_random_stable_coefficients(int K, int p1, int p2,
                                             double target_radius,
                                             std::uint64_t seed) {
  check_generator_args(K, target_radius);
  if (p1 < 0 || p2 < 0 || p1 + p2 == 0) {
    throw ValidationError("need p1, p2 >= 0 with at least one lag");
  }
  Rng rng(derive_seed(seed, SeedPurpose::kCoefficients));
  VarxSpec spec;
  spec.K = K;
  spec.p1 = p1;
  spec.p2 = p2;
  for (int i = 0; i < p1; ++i) spec.phi.push_back(random_matrix(rng, K, K, 1.0));
  const double sd = 1.0 / std::sqrt(static_cast<double>(K));
  for (int j = 0; j < p2; ++j) spec.psi.push_back(random_matrix(rng, K, K, sd));
  spec.omega = random_covariance(rng, K);
  spec.mu_y = Vector::Zero(K);
  spec.mu_v = Vector::Zero(K);

  if (p1 > 0) {
    const double radius = linalg::spectral_radius(companion_matrix(spec.phi));
    if (radius > 0.0) {
      const double c = target_radius / radius;
      double factor = 1.0;
      for (auto& phi : spec.phi) {
        factor *= c;
        phi *= factor;
      }
    }
  }
  return validate_spec(spec);
}

SeasonalVarxSpec generate_random_stable_seasonal(int K, int p1, int p2_seasonal,
                                                 int period,
                                                 double target_radius,
                                                 std::uint64_t seed) {
  check_generator_args(K, target_radius);
  if (p1 < 0 || p2_seasonal < 0 || p1 + p2_seasonal == 0) {
    throw ValidationError("need p1, p2_seasonal >= 0 with at least one lag");
  }
  Rng rng(derive_seed(seed, SeedPurpose::kCoefficients));
  SeasonalVarxSpec spec;
  spec.K = K;
  spec.p1 = p1;
  spec.p2_seasonal = p2_seasonal;
  spec.period = period;
  const double sd = 1.0 / std::sqrt(static_cast<double>(K));
  for (int i = 0; i < p1; ++i) spec.phi.push_back(random_matrix(rng, K, K, sd));
  for (int j = 0; j < p2_seasonal; ++j) {
    spec.theta.push_back(random_matrix(rng, K, K, sd));
  }
  spec.omega = random_covariance(rng, K);
  spec.mu_y = Vector::Zero(K);

  const LinearSystem base = to_system(spec);
  auto radius_at = [&](double c) {
    LinearSystem scaled = base;
    for (auto& b : scaled.blocks) b *= c;
    return companion_radius(scaled);
  };
  double lo = 0.0;
  double hi = 1.0;
  while (radius_at(hi) < target_radius) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (radius_at(mid) <= target_radius ? lo : hi) = mid;
  }
  for (auto& phi : spec.phi) phi *= lo;
  for (auto& theta : spec.theta) theta *= lo;
  return validate_spec(spec);
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

Covariate embed_covariate(std::span<const StreamPoint> history,
                          const LagLayout& layout) {
  const int max_lag = layout.max_lag();
  if (static_cast<int>(history.size()) < max_lag) {
    throw DataError("history holds " + std::to_string(history.size()) +
                    " points but the embedding needs " + std::to_string(max_lag));
  }
  const int K = layout.K;
  Covariate cov;
  cov.x.resize(layout.dim());
  cov.t = history.empty() ? 0 : history.back().t + 1;
  const std::size_t n = history.size();
  Eigen::Index pos = 0;
  for (int lag : layout.y_lags) {
    const StreamPoint& pt = history[n - lag];
    if (pt.y.size() != K) throw DataError("response vector has wrong length");
    cov.x.segment(pos, K) = pt.y;
    pos += K;
  }
  for (int lag : layout.v_lags) {
    const StreamPoint& pt = history[n - lag];
    if (pt.v.size() != K) throw DataError("exogenous vector missing or wrong length");
    cov.x.segment(pos, K) = pt.v;
    pos += K;
  }
  return cov;
}

Covariate embed_covariate(std::span<const StreamPoint> history,
                          const VarxSpec& spec) {
  return embed_covariate(history, spec.layout());
}

Covariate embed_covariate(std::span<const StreamPoint> history,
                          const SeasonalVarxSpec& spec) {
  return embed_covariate(history, spec.layout());
}

CovariateEmbedder::CovariateEmbedder(LagLayout layout)
    : layout_(std::move(layout)),
      capacity_(static_cast<std::size_t>(layout_.max_lag())) {}

void CovariateEmbedder::push(StreamPoint point) {
  if (!history_.empty() && point.t <= history_.back().t) {
    throw DataError("stream time index must be strictly increasing");
  }
  history_.push_back(std::move(point));
  while (history_.size() > capacity_) history_.pop_front();
}

bool CovariateEmbedder::ready() const { return history_.size() >= capacity_; }

Covariate CovariateEmbedder::next() const {
  const int K = layout_.K;
  const std::size_t n = history_.size();
  if (n < capacity_) {
    throw DataError("embedder holds " + std::to_string(n) +
                    " points but needs " + std::to_string(capacity_));
  }
  Covariate cov;
  cov.x.resize(layout_.dim());
  cov.t = n == 0 ? 0 : history_.back().t + 1;
  Eigen::Index pos = 0;
  for (int lag : layout_.y_lags) {
    cov.x.segment(pos, K) = history_[n - lag].y;
    pos += K;
  }
  for (int lag : layout_.v_lags) {
    const Vector& v = history_[n - lag].v;
    if (v.size() != K) throw DataError("exogenous vector missing or wrong length");
    cov.x.segment(pos, K) = v;
    pos += K;
  }
  return cov;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

int default_burn_in(const LagLayout& layout) { return 10 * layout.max_lag(); }

Simulation simulate_detailed(const LinearSystem& system, const NoiseSpec& noise,
                             long n, int burn_in, std::uint64_t seed) {
  if (n <= 0) throw ValidationError("stream length must be positive");
  const LagLayout& layout = system.layout;
  const int K = layout.K;
  const int max_lag = layout.max_lag();
  if (burn_in < 0) burn_in = default_burn_in(layout);
  if (burn_in < max_lag) {
    throw ValidationError("burn_in must be at least the largest lag (" +
                          std::to_string(max_lag) + ")");
  }
  validate_noise(noise);

  const Matrix b = system.coefficient_stack();
  const Vector mu_x = system.covariate_mean();
  const Vector mu_y = zero_if_empty(system.mu_y, K);
  const Vector mu_v = zero_if_empty(system.mu_v, K);

  const EllipticalSampler innovations(Vector::Zero(K), system.omega, noise.family,
                                      noise.df);
  Rng innovation_rng(derive_seed(seed, SeedPurpose::kInnovations));
  const bool exogenous = layout.has_exogenous();
  const Matrix exog_scale =
      noise.scale.size() > 0 ? noise.scale : Matrix::Identity(K, K);
  const EllipticalSampler exog(mu_v, exog_scale, noise.family, noise.df);
  Rng exog_rng(derive_seed(seed, SeedPurpose::kExogenous));

  CovariateEmbedder embedder(layout);
  long t = -static_cast<long>(burn_in) - max_lag;
  for (int i = 0; i < max_lag; ++i, ++t) {
    embedder.push(StreamPoint{t, mu_y, exogenous ? mu_v : Vector()});
  }

  Simulation out;
  out.points.reserve(static_cast<std::size_t>(n));
  out.covariates.reserve(static_cast<std::size_t>(n));
  out.innovations.reserve(static_cast<std::size_t>(n));
  Vector e(K);
  const long total = static_cast<long>(burn_in) + n;
  for (long step = 0; step < total; ++step, ++t) {
    Covariate x = embedder.next();
    innovations.draw_into(innovation_rng, e);
    Vector y = mu_y + b.transpose() * (x.x - mu_x);
    y += e;
    Vector v = exogenous ? exog.draw(exog_rng) : Vector();
    if (!y.allFinite()) {
      throw DataError("simulation diverged at t=" + std::to_string(t));
    }
    if (step >= burn_in) {
      out.covariates.push_back(x.x);
      out.innovations.push_back(e);
      out.points.push_back(StreamPoint{t, y, v});
    }
    embedder.push(StreamPoint{t, std::move(y), std::move(v)});
  }
  return out;
}

std::vector<StreamPoint> simulate(const VarxSpec& spec, const NoiseSpec& noise,
                                  long n, int burn_in, std::uint64_t seed) {
  validate_spec(spec);
  return simulate_detailed(to_system(spec), noise, n, burn_in, seed).points;
}

std::vector<StreamPoint> simulate(const SeasonalVarxSpec& spec,
                                  const NoiseSpec& noise, long n, int burn_in,
                                  std::uint64_t seed) {
  validate_spec(spec);
  return simulate_detailed(to_system(spec), noise, n, burn_in, seed).points;
}

Matrix stationary_covariate_covariance(const LinearSystem& system,
                                       const Matrix& innovation_cov,
                                       const Matrix& exogenous_cov) {
  const LagLayout& layout = system.layout;
  const int K = layout.K;
  int L = 1;
  for (int l : layout.y_lags) L = std::max(L, l);
  int P = 0;
  for (int l : layout.v_lags) P = std::max(P, l);
  const int n_state = K * (L + P);

  // State s_t = (y_t, ..., y_{t-L+1}, v_t, ..., v_{t-P+1}) in deviations.
  Matrix f = Matrix::Zero(n_state, n_state);
  for (std::size_t i = 0; i < layout.y_lags.size(); ++i) {
    f.block(0, (layout.y_lags[i] - 1) * K, K, K) += system.blocks[i];
  }
  for (std::size_t j = 0; j < layout.v_lags.size(); ++j) {
    const std::size_t idx = layout.y_lags.size() + j;
    f.block(0, (L + layout.v_lags[j] - 1) * K, K, K) += system.blocks[idx];
  }
  if (L > 1) f.block(K, 0, K * (L - 1), K * (L - 1)).setIdentity();
  if (P > 1) f.block((L + 1) * K, L * K, K * (P - 1), K * (P - 1)).setIdentity();

  Matrix q = Matrix::Zero(n_state, n_state);
  q.topLeftCorner(K, K) = innovation_cov;
  if (P > 0) q.block(L * K, L * K, K, K) = exogenous_cov;

  Matrix s = q;
  Matrix a = f;
  for (int it = 0; it < 64; ++it) {
    s += a * s * a.transpose();
    a = (a * a).eval();
    if (a.cwiseAbs().maxCoeff() < 1e-300 || a.norm() < 1e-18) break;
  }
  linalg::symmetrize(s);

  std::vector<Eigen::Index> idx;
  for (int l : layout.y_lags) {
    for (int k = 0; k < K; ++k) idx.push_back((l - 1) * K + k);
  }
  for (int l : layout.v_lags) {
    for (int k = 0; k < K; ++k) idx.push_back((L + l - 1) * K + k);
  }
  const Eigen::Index p = static_cast<Eigen::Index>(idx.size());
  Matrix out(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) out(i, j) = s(idx[i], idx[j]);
  }
  return out;
}

}  // namespace lsstream
