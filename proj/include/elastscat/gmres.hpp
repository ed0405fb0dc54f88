#pragma once

#include <functional>
#include <random>

#include "elastscat/types.hpp"

namespace elastscat {

struct GmresOptions {
  double tol = 1e-10;      // relative residual target
  int max_iterations = 0;  // 0 -> ceil(10 sqrt(n)) per the solver contract
  bool throw_on_stall = true;
  uint64_t random_start_seed = 0;  // nonzero: random initial iterate (uniqueness probes)
};

struct GmresResult {
  CVecX x;
  std::vector<double> residual_history;  // recurrence residuals, per iteration
  double final_residual = 0.0;           // true relative residual ||Ax-b||/||b||
  int iterations = 0;
  bool converged = false;
};

/// Restart-free GMRES with modified Gram-Schmidt, for complex matrix-free
/// operators. Starts from x0 = 0. On budget exhaustion throws NumericalError
/// carrying the residual history (or returns the partial result when
/// throw_on_stall is false).
inline GmresResult gmres(const std::function<void(const CVecX&, CVecX&)>& apply, const CVecX& b,
                         GmresOptions opt = {}) {
  if (opt.random_start_seed != 0) {
    // solve the shifted system A d = b - A x0 and return x0 + d
    std::mt19937_64 rng(opt.random_start_seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    CVecX x0(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) x0(i) = cplx(nd(rng), nd(rng));
    x0 *= 0.1 * b.norm() / x0.norm();
    CVecX ax0(b.size());
    apply(x0, ax0);
    GmresOptions inner = opt;
    inner.random_start_seed = 0;
    auto res = gmres(apply, b - ax0, inner);
    res.x += x0;
    apply(res.x, ax0);
    res.final_residual = (ax0 - b).norm() / b.norm();
    return res;
  }
  const auto n = b.size();
  const int budget = opt.max_iterations > 0
                         ? opt.max_iterations
                         : static_cast<int>(std::ceil(10.0 * std::sqrt(static_cast<double>(n))));
  const int m = std::min<int>(budget, static_cast<int>(n));

  GmresResult res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.x = CVecX::Zero(n);
    res.converged = true;
    return res;
  }

  std::vector<CVecX> basis;
  basis.reserve(m + 1);
  basis.push_back(b / bnorm);
  CMatX h = CMatX::Zero(m + 1, m);
  std::vector<cplx> cs(m), sn(m);
  CVecX g = CVecX::Zero(m + 1);
  g(0) = bnorm;

  int k = 0;
  CVecX w(n);
  for (; k < m; ++k) {
    apply(basis[k], w);
    for (int j = 0; j <= k; ++j) {
      h(j, k) = basis[j].dot(w);  // conjugated in the first argument
      w -= h(j, k) * basis[j];
    }
    // one reorthogonalization pass keeps the basis usable at high iteration
    // counts on ill-scaled operators
    for (int j = 0; j <= k; ++j) {
      const cplx corr = basis[j].dot(w);
      h(j, k) += corr;
      w -= corr * basis[j];
    }
    const double wnorm = w.norm();
    h(k + 1, k) = wnorm;

    for (int j = 0; j < k; ++j) {
      const cplx t = cs[j] * h(j, k) + sn[j] * h(j + 1, k);
      h(j + 1, k) = -std::conj(sn[j]) * h(j, k) + std::conj(cs[j]) * h(j + 1, k);
      h(j, k) = t;
    }
    const double denom = std::sqrt(std::norm(h(k, k)) + std::norm(h(k + 1, k)));
    if (denom == 0.0) {
      cs[k] = 1.0;
      sn[k] = 0.0;
    } else {
      cs[k] = std::conj(h(k, k)) / denom;
      sn[k] = std::conj(h(k + 1, k)) / denom;
    }
    h(k, k) = cs[k] * h(k, k) + sn[k] * h(k + 1, k);
    h(k + 1, k) = 0.0;
    g(k + 1) = -std::conj(sn[k]) * g(k);
    g(k) = cs[k] * g(k);

    const double rel = std::abs(g(k + 1)) / bnorm;
    res.residual_history.push_back(rel);

    if (rel < opt.tol || wnorm == 0.0 || k + 1 == m) {
      ++k;
      break;
    }
    basis.push_back(w / wnorm);
  }

  // back substitution on the k x k triangular system
  CVecX y = CVecX::Zero(k);
  for (int i = k - 1; i >= 0; --i) {
    cplx s = g(i);
    for (int j = i + 1; j < k; ++j) s -= h(i, j) * y(j);
    y(i) = s / h(i, i);
  }
  res.x = CVecX::Zero(n);
  for (int i = 0; i < k; ++i) res.x += y(i) * basis[i];
  res.iterations = k;

  apply(res.x, w);
  res.final_residual = (w - b).norm() / bnorm;
  res.converged = res.final_residual <= opt.tol * 10.0;

  if (!res.converged && opt.throw_on_stall)
    throw NumericalError("gmres: iteration budget exhausted before reaching tolerance",
                         res.residual_history);
  return res;
}

}  // namespace elastscat
