#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ceitr/errors.hpp"

// Small dense symmetric solves for the Newton/IRLS fitters.  Matrices are
// row-major p x p vectors; p stays in the single digits here, so simple
// O(p^3) routines are plenty.

namespace ceitr::linalg {

// Cholesky factorization A = L L' in place (lower triangle).  Returns false
// when A is not positive definite.
inline bool cholesky(std::vector<double>& a, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    double d = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    a[j * p + j] = ljj;
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = s / ljj;
    }
  }
  return true;
}

// Solve L L' x = b given the factor from cholesky(); b is overwritten.
inline void cholesky_solve(const std::vector<double>& l, std::size_t p,
                           std::vector<double>& b) {
  for (std::size_t i = 0; i < p; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * p + k] * b[k];
    b[i] = s / l[i * p + i];
  }
  for (std::size_t ii = p; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < p; ++k) s -= l[k * p + ii] * b[k];
    b[ii] = s / l[ii * p + ii];
  }
}

// Solve the symmetric system A x = b, adding a small ridge to the diagonal
// when A is (numerically) singular.  Throws when even heavy ridging fails.
inline std::vector<double> solve_spd(std::vector<double> a, std::size_t p,
                                     std::vector<double> b) {
  double ridge = 0.0;
  double scale = 0.0;
  for (std::size_t j = 0; j < p; ++j) scale = std::max(scale, a[j * p + j]);
  if (scale <= 0.0) scale = 1.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::vector<double> fac = a;
    if (ridge > 0.0) {
      for (std::size_t j = 0; j < p; ++j) fac[j * p + j] += ridge;
    }
    if (cholesky(fac, p)) {
      cholesky_solve(fac, p, b);
      return b;
    }
    ridge = ridge == 0.0 ? 1e-10 * scale : ridge * 100.0;
  }
  throw FitFailure("symmetric solve failed even with ridge regularization");
}

}  // namespace ceitr::linalg
