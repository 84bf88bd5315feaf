#include "lsstream/estimator.hpp"

#include "lsstream/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lsstream {

double default_ridge(const Matrix& xs) {
  const double p = static_cast<double>(xs.cols());
  return 1e-6 * xs.squaredNorm() / p;
}

RlsState init_estimator(const Matrix& xs, const Matrix& ys,
                        std::optional<double> ridge) {
  if (xs.rows() != ys.rows()) {
    throw ValidationError("pilot design and response row counts differ");
  }
  if (xs.rows() == 0 || xs.cols() == 0 || ys.cols() == 0) {
    throw ValidationError("empty pilot");
  }
  const double lambda = ridge.value_or(default_ridge(xs));
  if (lambda < 0.0) throw ValidationError("ridge must be non-negative");

  const Eigen::Index n = xs.rows();
  const Eigen::Index p = xs.cols();

  Matrix gram = xs.transpose() * xs;
  gram.diagonal().array() += lambda;

  RlsState state;
  state.ridge = lambda;
  state.a_inv = linalg::spd_inverse(gram, "pilot Gram matrix", 1e-13);
  state.c = xs.transpose() * ys;
  state.b_hat = state.a_inv * state.c;

  const Matrix resid = ys - xs * state.b_hat;
  const double denom = static_cast<double>(std::max<Eigen::Index>(1, n - p));
  state.omega_hat = resid.transpose() * resid / denom;
  linalg::symmetrize(state.omega_hat);
  return state;
}

bool rls_update(RlsState& state, const Vector& x, const Vector& y) {
  if (!state.initialized()) throw ValidationError("estimator is not initialized");
  if (x.size() != state.dim() || y.size() != state.responses()) {
    throw ValidationError("rls_update dimension mismatch");
  }
  const Vector k = state.a_inv * x;
  const double denom = 1.0 + x.dot(k);
  if (!(std::abs(denom) >= 1e-12)) {
    ++state.skipped_updates;
    return false;
  }
  const Vector gain = k / denom;
  // a priori residual with the old coefficients
  const Vector innovation = y - state.b_hat.transpose() * x;
  state.a_inv.noalias() -= gain * k.transpose();
  linalg::symmetrize(state.a_inv);
  state.c.noalias() += x * y.transpose();
  state.b_hat.noalias() += gain * innovation.transpose();
  ++state.n_selected;
  return true;
}

Matrix batch_ls(const Matrix& xs, const Matrix& ys) {
  if (xs.rows() != ys.rows()) throw ValidationError("row counts differ");
  if (xs.rows() == 0) throw ValidationError("no rows");
  const Matrix gram = xs.transpose() * xs;
  return linalg::spd_solve(gram, xs.transpose() * ys, "Gram matrix", 1e-13);
}

void update_omega(RlsState& state, const Vector& residual) {
  if (residual.size() != state.omega_hat.rows()) {
    throw ValidationError("residual dimension mismatch");
  }
  const double n = static_cast<double>(std::max<long>(1, state.n_selected));
  state.omega_hat += (residual * residual.transpose() - state.omega_hat) / n;
  linalg::symmetrize(state.omega_hat);
}

Vector predict(const RlsState& state, const Vector& mu_x, const Vector& mu_y,
               const Vector& x) {
  if (!state.initialized()) throw ValidationError("estimator is not initialized");
  if (x.size() != state.dim() || mu_x.size() != state.dim() ||
      mu_y.size() != state.responses()) {
    throw ValidationError("predict dimension mismatch");
  }
  return mu_y + state.b_hat.transpose() * (x - mu_x);
}

}  // namespace lsstream
