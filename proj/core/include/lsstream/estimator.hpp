#ifndef LSSTREAM_ESTIMATOR_HPP
#define LSSTREAM_ESTIMATOR_HPP

#include "lsstream/linalg.hpp"

#include <optional>

namespace lsstream {

/// Recursive least-squares state over selected, centered rows.
///
/// Invariant: b_hat == a_inv * c up to rounding. b_hat is advanced with the
/// gain vector rather than recomputed, keeping an update at O(p^2 + pK).
struct RlsState {
  Matrix a_inv;      // (ridge I + sum x x')^{-1}
  Matrix c;          // sum x y'
  Matrix b_hat;      // p x K
  Matrix omega_hat;  // K x K residual covariance
  long n_selected = 0;
  long skipped_updates = 0;
  double ridge = 0.0;

  bool initialized() const { return a_inv.size() > 0; }
  Eigen::Index dim() const { return b_hat.rows(); }
  Eigen::Index responses() const { return b_hat.cols(); }
};

/// Default initialization ridge 1e-6 * trace(X'X) / p.
double default_ridge(const Matrix& xs);

/// Initialize from a centered pilot design (n0 x p) and response (n0 x K).
/// Without an explicit ridge the default is used; ridge 0 on a singular
/// Gram matrix throws SingularMatrixError.
RlsState init_estimator(const Matrix& xs, const Matrix& ys,
                        std::optional<double> ridge = std::nullopt);

/// Sherman-Morrison step with centered x (p) and y (K). Returns false (and
/// counts a skip) when 1 + x' a_inv x falls below 1e-12.
bool rls_update(RlsState& state, const Vector& x, const Vector& y);

/// Direct least squares (X'X)^{-1} X'Y by Cholesky; throws
/// SingularMatrixError on a singular Gram matrix.
Matrix batch_ls(const Matrix& xs, const Matrix& ys);

/// Running mean of residual outer products over selected points.
void update_omega(RlsState& state, const Vector& residual);

/// mu_y + b_hat' (x - mu_x).
Vector predict(const RlsState& state, const Vector& mu_x, const Vector& mu_y,
               const Vector& x);

}  // namespace lsstream

#endif  // LSSTREAM_ESTIMATOR_HPP
