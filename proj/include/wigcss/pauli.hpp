#pragma once

#include "wigcss/core.hpp"

#include <string>

namespace wigcss {

/// i^phase * Z(z) X(x) on n qubits; masks follow the qubit_bit convention.
struct PauliTerm {
  int n = 0;
  std::uint64_t x = 0;
  std::uint64_t z = 0;
  int phase = 0;  // power of i, kept in [0, 4)

  static PauliTerm identity(int n) { return {n, 0, 0, 0}; }
  static PauliTerm x_type(int n, std::uint64_t support, bool negative = false) {
    return {n, support, 0, negative ? 2 : 0};
  }
  static PauliTerm z_type(int n, std::uint64_t support, bool negative = false) {
    return {n, 0, support, negative ? 2 : 0};
  }
  /// The Hermitian Pauli with the given masks (Y = -i ZX on each overlapping qubit).
  static PauliTerm hermitian(int n, std::uint64_t x, std::uint64_t z) {
    return {n, x, z, (4 - popcount(x & z) % 4) % 4};
  }

  cplx coefficient() const {
    static const cplx powers[4] = {1.0, cplx(0, 1), -1.0, cplx(0, -1)};
    return powers[phase & 3];
  }
  bool is_x_type() const { return z == 0; }
  bool is_z_type() const { return x == 0; }
  bool is_hermitian() const { return (phase + popcount(x & z)) % 2 == 0; }
  int weight() const { return popcount(x | z); }

  bool commutes_with(const PauliTerm& o) const { return parity((z & o.x) ^ (o.z & x)) == 0; }

  PauliTerm operator*(const PauliTerm& o) const {
    require(n == o.n, "Pauli product on different register sizes");
    int sign = parity(x & o.z) ? 2 : 0;
    return {n, x ^ o.x, z ^ o.z, (phase + o.phase + sign) & 3};
  }
  PauliTerm negated() const { return {n, x, z, (phase + 2) & 3}; }

  bool operator==(const PauliTerm& o) const {
    return n == o.n && x == o.x && z == o.z && ((phase - o.phase) & 3) == 0;
  }

  /// Dense 2^n matrix; acts as |i> -> coefficient * (-1)^{(i^x)·z} |i^x>.
  CMatrix matrix() const {
    require(n <= kMaxDenseQubits, "dense Pauli matrix limited to 10 qubits");
    std::size_t d = dim_of(n);
    CMatrix m = CMatrix::Zero(d, d);
    cplx c = coefficient();
    for (std::size_t i = 0; i < d; ++i) {
      std::size_t j = i ^ x;
      m(j, i) = parity(j & z) ? -c : c;
    }
    return m;
  }

  /// Label such as "+XZIY"; Hermitian terms only carry a sign.
  std::string label() const {
    std::string s;
    int ph = (phase + popcount(x & z)) & 3;  // phase relative to the Hermitian form
    s += ph == 0 ? "+" : ph == 1 ? "+i" : ph == 2 ? "-" : "-i";
    for (int q = 0; q < n; ++q) {
      bool bx = has_qubit(x, n, q), bz = has_qubit(z, n, q);
      s += bx && bz ? 'Y' : bx ? 'X' : bz ? 'Z' : 'I';
    }
    return s;
  }
};

inline CMatrix pauli_x() { return PauliTerm::hermitian(1, 1, 0).matrix(); }
inline CMatrix pauli_z() { return PauliTerm::hermitian(1, 0, 1).matrix(); }
inline CMatrix pauli_y() { return PauliTerm::hermitian(1, 1, 1).matrix(); }
inline CMatrix hadamard() {
  CMatrix h(2, 2);
  h << 1, 1, 1, -1;
  return h / std::sqrt(2.0);
}

}  // namespace wigcss
