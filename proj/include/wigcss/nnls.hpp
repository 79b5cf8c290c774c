#pragma once

#include "wigcss/core.hpp"

#include <limits>

namespace wigcss {

struct NnlsResult {
  RVector x;
  double residual = 0;  // ||Ax - b||_2
};

/// Lawson-Hanson active-set solver for min ||Ax - b|| subject to x >= 0.
inline NnlsResult nnls(const RMatrix& A, const RVector& b, int max_iter = 0) {
  const Eigen::Index m = A.cols();
  if (max_iter <= 0) max_iter = static_cast<int>(3 * m + 30);
  RVector x = RVector::Zero(m);
  std::vector<bool> passive(m, false);
  const double tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()) * static_cast<double>(std::max<Eigen::Index>(A.rows(), m));

  auto solve_passive = [&](RVector& s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < m; ++j)
      if (passive[j]) idx.push_back(j);
    RMatrix Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) Ap.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
    RVector sp = Ap.colPivHouseholderQr().solve(b);
    s = RVector::Zero(m);
    for (std::size_t c = 0; c < idx.size(); ++c) s(idx[c]) = sp(static_cast<Eigen::Index>(c));
  };

  RVector w = A.transpose() * (b - A * x);
  for (int outer = 0; outer < max_iter; ++outer) {
    Eigen::Index best = -1;
    double wmax = tol;
    for (Eigen::Index j = 0; j < m; ++j)
      if (!passive[j] && w(j) > wmax) {
        wmax = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[best] = true;
    RVector s;
    for (int inner = 0; inner < max_iter; ++inner) {
      solve_passive(s);
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < m; ++j)
        if (passive[j] && s(j) <= 0) {
          double den = x(j) - s(j);
          alpha = std::min(alpha, den > 0 ? x(j) / den : 0.0);
        }
      if (!std::isfinite(alpha)) break;
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < m; ++j)
        if (passive[j] && x(j) <= tol) {
          passive[j] = false;
          x(j) = 0;
        }
    }
    x = s;
    w = A.transpose() * (b - A * x);
  }
  return {x, (A * x - b).norm()};
}

}  // namespace wigcss
