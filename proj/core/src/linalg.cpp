#include "lsstream/linalg.hpp"

#include "lsstream/error.hpp"

#include <cmath>
#include <string>

namespace lsstream::linalg {

double spectral_radius(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw SingularMatrixError("eigenvalue computation did not converge");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix symmetric_sqrt(const Matrix& a, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) {
    throw SingularMatrixError("eigendecomposition did not converge");
  }
  Vector values = solver.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.minCoeff() < -1e-10 * scale) {
    throw SingularMatrixError("scatter matrix has a negative eigenvalue");
  }
  values = values.cwiseMax(floor).cwiseSqrt();
  const Matrix& v = solver.eigenvectors();
  return v * values.asDiagonal() * v.transpose();
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

double min_eigenvalue(const Matrix& a) {
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

namespace {

Eigen::LLT<Matrix> checked_llt(const Matrix& a, std::string_view what,
                               double rcond_min) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= rcond_min)) {
    throw SingularMatrixError(std::string(what) +
                              " is singular or not positive definite");
  }
  return llt;
}

}  // namespace

Matrix spd_inverse(const Matrix& a, std::string_view what, double rcond_min) {
  auto llt = checked_llt(a, what, rcond_min);
  Matrix inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  symmetrize(inv);
  return inv;
}

Matrix spd_solve(const Matrix& a, const Matrix& b, std::string_view what,
                 double rcond_min) {
  return checked_llt(a, what, rcond_min).solve(b);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector vec(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

double relative_frobenius(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / b.norm();
}

void symmetrize(Matrix& a) {
  a = 0.5 * (a + a.transpose()).eval();
}

}  // namespace lsstream::linalg
