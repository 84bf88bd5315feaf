#ifndef LSSTREAM_LINALG_HPP
#define LSSTREAM_LINALG_HPP

#include <Eigen/Dense>

#include <string_view>

namespace lsstream {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Largest absolute eigenvalue of a general square matrix.
double spectral_radius(const Matrix& a);

/// Symmetric square root via eigendecomposition. Eigenvalues below `floor`
/// are raised to `floor`; a clearly negative eigenvalue throws
/// SingularMatrixError.
Matrix symmetric_sqrt(const Matrix& a, double floor = 1e-12);

bool is_symmetric(const Matrix& a, double rel_tol = 1e-10);

/// Smallest eigenvalue of the symmetric part of `a`.
double min_eigenvalue(const Matrix& a);

/// Inverse of a symmetric positive definite matrix. Throws
/// SingularMatrixError (mentioning `what`) when the Cholesky factorization
/// fails or the reciprocal condition estimate drops below `rcond_min`.
Matrix spd_inverse(const Matrix& a, std::string_view what = "matrix",
                   double rcond_min = 1e-14);

/// Solves a*x = b for symmetric positive definite a, same failure rules as
/// spd_inverse.
Matrix spd_solve(const Matrix& a, const Matrix& b,
                 std::string_view what = "matrix", double rcond_min = 1e-14);

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Column-stacking vectorization.
Vector vec(const Matrix& a);

/// ||a - b||_F / ||b||_F.
double relative_frobenius(const Matrix& a, const Matrix& b);

/// In-place (a + a') / 2.
void symmetrize(Matrix& a);

}  // namespace linalg
}  // namespace lsstream

#endif  // LSSTREAM_LINALG_HPP
