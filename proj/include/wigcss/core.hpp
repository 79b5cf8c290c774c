#pragma once

#include <Eigen/Dense>

#include <bit>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wigcss {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Largest register handled with dense 2^n matrices.
inline constexpr int kMaxDenseQubits = 10;
/// Default tolerance for stochasticity and Hermiticity checks.
inline constexpr double kTol = 1e-9;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

/// Qubit q (0-based, qubit 0 first) maps to bit n-1-q, so qubit 0 is most significant.
inline constexpr std::uint64_t qubit_bit(int n, int q) { return std::uint64_t{1} << (n - 1 - q); }
inline constexpr bool has_qubit(std::uint64_t mask, int n, int q) { return (mask & qubit_bit(n, q)) != 0; }
inline int popcount(std::uint64_t v) { return std::popcount(v); }
inline int parity(std::uint64_t v) { return std::popcount(v) & 1; }
inline constexpr std::uint64_t low_mask(int n) { return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1; }

inline std::size_t dim_of(int n) { return std::size_t{1} << n; }

/// Number of qubits for a dimension, or -1 if not a power of two.
inline int qubits_of_dim(Eigen::Index d) {
  if (d <= 0 || (d & (d - 1)) != 0) return -1;
  return std::countr_zero(static_cast<std::uint64_t>(d));
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CMatrix kron_power(const CMatrix& a, int n) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (int i = 0; i < n; ++i) out = kron(out, a);
  return out;
}

/// Partial trace over the qubits flagged in `traced` (bit mask in the qubit_bit convention).
inline CMatrix partial_trace(const CMatrix& rho, int n, std::uint64_t traced) {
  int kept = n - popcount(traced);
  std::size_t dk = dim_of(kept);
  CMatrix out = CMatrix::Zero(dk, dk);
  std::vector<int> keep_q, trace_q;
  for (int q = 0; q < n; ++q) (has_qubit(traced, n, q) ? trace_q : keep_q).push_back(q);
  auto compose = [&](std::size_t a, std::size_t t) {
    std::uint64_t idx = 0;
    for (int i = 0; i < kept; ++i)
      if ((a >> (kept - 1 - i)) & 1) idx |= qubit_bit(n, keep_q[i]);
    int nt = static_cast<int>(trace_q.size());
    for (int i = 0; i < nt; ++i)
      if ((t >> (nt - 1 - i)) & 1) idx |= qubit_bit(n, trace_q[i]);
    return idx;
  };
  std::size_t dt = dim_of(n - kept);
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t b = 0; b < dk; ++b) {
      cplx s = 0;
      for (std::size_t t = 0; t < dt; ++t) s += rho(compose(a, t), compose(b, t));
      out(a, b) = s;
    }
  return out;
}

/// Checks for a density matrix: square, power-of-two, Hermitian, unit trace, PSD within tol.
inline int validate_density(const CMatrix& rho, double tol = kTol) {
  require(rho.rows() == rho.cols(), "density matrix must be square");
  int n = qubits_of_dim(rho.rows());
  require(n >= 0, "density matrix dimension must be a power of two");
  require((rho - rho.adjoint()).cwiseAbs().maxCoeff() <= tol, "density matrix is not Hermitian");
  require(std::abs(rho.trace() - cplx(1.0)) <= tol, "density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -tol, "density matrix is not positive semidefinite");
  return n;
}

inline bool is_real_matrix(const CMatrix& m, double tol = kTol) {
  return m.imag().cwiseAbs().maxCoeff() <= tol;
}

inline double trace_norm(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

inline double lambda_max(const CMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace wigcss
