#pragma once

#include <memory>

#include "elastscat/types.hpp"

namespace elastscat {

/// Factorization of a dense real symmetric matrix, trying Cholesky first,
/// then Bunch-Kaufman, then plain LU. The matrix is captured by value and
/// factored in place; rcond is estimated from the factorization.
class SymmetricFactor {
 public:
  explicit SymmetricFactor(MatX a);

  MatX solve(const MatX& rhs) const;
  double rcond() const { return rcond_; }
  const char* method() const;

 private:
  enum class Method { cholesky, bunch_kaufman, lu } method_;
  MatX f_;
  std::vector<int> ipiv_;
  double rcond_ = 0.0;
};

/// Single-precision Cholesky of a double symmetric positive definite matrix,
/// for use as a preconditioner in mixed-precision refinement. Fails (throws
/// NumericalError) when the matrix is not float-Cholesky factorizable.
class FloatCholesky {
 public:
  explicit FloatCholesky(const MatX& a);

  /// Backsolve in float, returned in double.
  MatX solve(const MatX& rhs) const;
  double rcond() const { return rcond_; }

 private:
  Eigen::MatrixXf f_;
  double rcond_ = 0.0;
};

/// Plain complex LU (zgetrf) for general square matrices.
class ComplexLuFactor {
 public:
  explicit ComplexLuFactor(CMatX a);
  CMatX solve(const CMatX& rhs) const;

 private:
  CMatX f_;
  std::vector<int> ipiv_;
};

/// Same ladder for complex symmetric (not Hermitian) matrices: zsytrf, then
/// zgetrf.
class ComplexSymmetricFactor {
 public:
  explicit ComplexSymmetricFactor(CMatX a);

  CMatX solve(const CMatX& rhs) const;
  const char* method() const;

 private:
  enum class Method { sym, lu } method_;
  CMatX f_;
  std::vector<int> ipiv_;
};

}  // namespace elastscat
