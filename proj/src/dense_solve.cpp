#include "elastscat/dense_solve.hpp"

#include <lapacke.h>

namespace elastscat {

namespace {

double one_norm(const MatX& a) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) best = std::max(best, a.col(j).cwiseAbs().sum());
  return best;
}

}  // namespace

SymmetricFactor::SymmetricFactor(MatX a) : f_(std::move(a)) {
  const auto n = static_cast<lapack_int>(f_.rows());
  if (f_.cols() != n) throw std::invalid_argument("SymmetricFactor: matrix must be square");
  const double anorm = one_norm(f_);

  // Cholesky touches only the lower triangle, so the upper half stays valid
  // for the fallback restores.
  lapack_int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, f_.data(), n);
  if (info == 0) {
    method_ = Method::cholesky;
    LAPACKE_dpocon(LAPACK_COL_MAJOR, 'L', n, f_.data(), n, anorm, &rcond_);
    return;
  }

  f_.triangularView<Eigen::StrictlyLower>() = f_.triangularView<Eigen::StrictlyUpper>().transpose();
  ipiv_.resize(n);
  info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, f_.data(), n, ipiv_.data());
  if (info == 0) {
    method_ = Method::bunch_kaufman;
    LAPACKE_dsycon(LAPACK_COL_MAJOR, 'L', n, f_.data(), n, ipiv_.data(), anorm, &rcond_);
    return;
  }

  f_.triangularView<Eigen::StrictlyLower>() = f_.triangularView<Eigen::StrictlyUpper>().transpose();
  info = LAPACKE_dgetrf(LAPACK_COL_MAJOR, n, n, f_.data(), n, ipiv_.data());
  if (info != 0) throw NumericalError("dense factorization failed: matrix is singular");
  method_ = Method::lu;
  LAPACKE_dgecon(LAPACK_COL_MAJOR, '1', n, f_.data(), n, anorm, &rcond_);
}

MatX SymmetricFactor::solve(const MatX& rhs) const {
  const auto n = static_cast<lapack_int>(f_.rows());
  const auto nrhs = static_cast<lapack_int>(rhs.cols());
  MatX x = rhs;
  lapack_int info = 0;
  switch (method_) {
    case Method::cholesky:
      info = LAPACKE_dpotrs(LAPACK_COL_MAJOR, 'L', n, nrhs, f_.data(), n, x.data(), n);
      break;
    case Method::bunch_kaufman:
      info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, nrhs, f_.data(), n, ipiv_.data(), x.data(),
                            n);
      break;
    case Method::lu:
      info = LAPACKE_dgetrs(LAPACK_COL_MAJOR, 'N', n, nrhs, f_.data(), n, ipiv_.data(), x.data(),
                            n);
      break;
  }
  if (info != 0) throw NumericalError("dense triangular solve failed");
  return x;
}

const char* SymmetricFactor::method() const {
  switch (method_) {
    case Method::cholesky: return "cholesky";
    case Method::bunch_kaufman: return "bunch-kaufman";
    default: return "lu";
  }
}

FloatCholesky::FloatCholesky(const MatX& a) {
  const auto n = static_cast<lapack_int>(a.rows());
  f_ = a.cast<float>();
  float anorm = 0.0f;
  for (Eigen::Index j = 0; j < n; ++j) anorm = std::max(anorm, f_.col(j).cwiseAbs().sum());
  const lapack_int info = LAPACKE_spotrf(LAPACK_COL_MAJOR, 'L', n, f_.data(), n);
  if (info != 0) throw NumericalError("float cholesky failed: matrix not positive definite");
  float rc = 0.0f;
  LAPACKE_spocon(LAPACK_COL_MAJOR, 'L', n, f_.data(), n, anorm, &rc);
  rcond_ = rc;
}

MatX FloatCholesky::solve(const MatX& rhs) const {
  const auto n = static_cast<lapack_int>(f_.rows());
  Eigen::MatrixXf x = rhs.cast<float>();
  const lapack_int info = LAPACKE_spotrs(LAPACK_COL_MAJOR, 'L', n,
                                         static_cast<lapack_int>(x.cols()), f_.data(), n,
                                         x.data(), n);
  if (info != 0) throw NumericalError("float triangular solve failed");
  return x.cast<double>();
}

ComplexLuFactor::ComplexLuFactor(CMatX a) : f_(std::move(a)) {
  const auto n = static_cast<lapack_int>(f_.rows());
  if (f_.cols() != n) throw std::invalid_argument("ComplexLuFactor: matrix must be square");
  ipiv_.resize(n);
  auto* data = reinterpret_cast<lapack_complex_double*>(f_.data());
  if (LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, data, n, ipiv_.data()) != 0)
    throw NumericalError("complex LU factorization failed: matrix is singular");
}

CMatX ComplexLuFactor::solve(const CMatX& rhs) const {
  const auto n = static_cast<lapack_int>(f_.rows());
  CMatX x = rhs;
  const auto* fd = reinterpret_cast<const lapack_complex_double*>(f_.data());
  auto* xd = reinterpret_cast<lapack_complex_double*>(x.data());
  if (LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n, static_cast<lapack_int>(rhs.cols()), fd, n,
                     ipiv_.data(), xd, n) != 0)
    throw NumericalError("complex LU solve failed");
  return x;
}

ComplexSymmetricFactor::ComplexSymmetricFactor(CMatX a) : f_(std::move(a)) {
  const auto n = static_cast<lapack_int>(f_.rows());
  if (f_.cols() != n) throw std::invalid_argument("ComplexSymmetricFactor: matrix must be square");
  ipiv_.resize(n);
  auto* data = reinterpret_cast<lapack_complex_double*>(f_.data());
  lapack_int info = LAPACKE_zsytrf(LAPACK_COL_MAJOR, 'L', n, data, n, ipiv_.data());
  if (info == 0) {
    method_ = Method::sym;
    return;
  }
  f_.triangularView<Eigen::StrictlyLower>() = f_.triangularView<Eigen::StrictlyUpper>().transpose();
  info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, data, n, ipiv_.data());
  if (info != 0) throw NumericalError("complex dense factorization failed: matrix is singular");
  method_ = Method::lu;
}

CMatX ComplexSymmetricFactor::solve(const CMatX& rhs) const {
  const auto n = static_cast<lapack_int>(f_.rows());
  const auto nrhs = static_cast<lapack_int>(rhs.cols());
  CMatX x = rhs;
  const auto* fd = reinterpret_cast<const lapack_complex_double*>(f_.data());
  auto* xd = reinterpret_cast<lapack_complex_double*>(x.data());
  lapack_int info = 0;
  if (method_ == Method::sym)
    info = LAPACKE_zsytrs(LAPACK_COL_MAJOR, 'L', n, nrhs, fd, n, ipiv_.data(), xd, n);
  else
    info = LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n, nrhs, fd, n, ipiv_.data(), xd, n);
  if (info != 0) throw NumericalError("complex dense triangular solve failed");
  return x;
}

const char* ComplexSymmetricFactor::method() const {
  return method_ == Method::sym ? "sytrf" : "lu";
}

}  // namespace elastscat
