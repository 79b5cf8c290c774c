#pragma once

#include "wigcss/core.hpp"
#include "wigcss/pauli.hpp"

#include <functional>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace wigcss {

/// Point u = (u_x, u_z) of the n-qubit phase space Z_2^n x Z_2^n.
struct PhasePoint {
  int n = 0;
  std::uint64_t x = 0;
  std::uint64_t z = 0;

  /// Canonical index: row-major over (x_bits, z_bits), qubit 0 most significant.
  std::size_t index() const { return (static_cast<std::size_t>(x) << n) | z; }
  static PhasePoint from_index(int n, std::size_t idx) { return {n, idx >> n, idx & low_mask(n)}; }

  PhasePoint operator+(const PhasePoint& o) const { return {n, x ^ o.x, z ^ o.z}; }
  bool operator==(const PhasePoint&) const = default;
};

/// Concatenation u ⊕ v of points on separate registers.
inline PhasePoint concat(const PhasePoint& u, const PhasePoint& v) {
  return {u.n + v.n, (u.x << v.n) | v.x, (u.z << v.n) | v.z};
}

/// [u,v] = u_z·v_x + v_z·u_x mod 2.
inline int symplectic(const PhasePoint& u, const PhasePoint& v) {
  return parity((u.z & v.x) ^ (v.z & u.x));
}

/// D_u = Z(u_z) X(u_x).
inline PauliTerm displacement(const PhasePoint& u) { return {u.n, u.x, u.z, 0}; }

/// Single-qubit phase-point operator A_{(x,z)}: entries δ_{i,x} (-1)^{z (x ⊕ j)}.
inline CMatrix single_phase_point_operator(int x, int z) {
  CMatrix a = CMatrix::Zero(2, 2);
  a(x, 0) = z && x ? -1.0 : 1.0;
  a(x, 1) = z && !x ? -1.0 : 1.0;
  return a;
}

/// A_u as the tensor product of single-qubit factors.
inline CMatrix phase_point_operator(const PhasePoint& u) {
  require(u.n <= kMaxDenseQubits, "dense phase-point operator limited to 10 qubits");
  CMatrix a = CMatrix::Identity(1, 1);
  for (int q = 0; q < u.n; ++q)
    a = kron(a, single_phase_point_operator(has_qubit(u.x, u.n, q), has_qubit(u.z, u.n, q)));
  return a;
}

/// Quasiprobability distribution over P_n in canonical index order.
struct QuasiDist {
  int n_qubits = 0;
  CVector values;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  cplx operator()(const PhasePoint& u) const { return values(u.index()); }
  cplx sum() const { return values.sum(); }
  bool is_real(double tol = kTol) const { return values.imag().cwiseAbs().maxCoeff() <= tol; }
  RVector real() const { return values.real(); }
  RVector imag() const { return values.imag(); }
  double min_real() const { return values.real().minCoeff(); }

  static QuasiDist uniform(int n) {
    std::size_t N = std::size_t{1} << (2 * n);
    return {n, CVector::Constant(N, 1.0 / static_cast<double>(N))};
  }
  static QuasiDist from_real(int n, const RVector& r) { return {n, r.cast<cplx>()}; }
};

namespace detail {

/// In-place unnormalized Walsh-Hadamard butterflies along the column index of a row-major 2^n x 2^n array.
inline void row_walsh_hadamard(cplx* data, int n) {
  std::size_t d = dim_of(n);
  for (std::size_t row = 0; row < d; ++row) {
    cplx* r = data + row * d;
    for (std::size_t h = 1; h < d; h <<= 1)
      for (std::size_t i = 0; i < d; i += h << 1)
        for (std::size_t j = i; j < i + h; ++j) {
          cplx a = r[j], b = r[j + h];
          r[j] = a + b;
          r[j + h] = a - b;
        }
  }
}

/// Multiplies entry (x, z) by (-1)^{x·z}.
inline void apply_xz_sign(cplx* data, int n) {
  std::size_t d = dim_of(n);
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t z = 0; z < d; ++z)
      if (parity(x & z)) data[x * d + z] = -data[x * d + z];
}

}  // namespace detail

/// W(u) = 2^{-n} tr[A_u† M] for an arbitrary 2^n x 2^n matrix M.
/// Each qubit contributes one 4x4 map (i_q, j_q) -> (x_q, z_q); applied as row-wise butterflies and an (x, z) sign.
inline QuasiDist wigner_transform(const CMatrix& m) {
  require(m.rows() == m.cols(), "matrix must be square");
  int n = qubits_of_dim(m.rows());
  require(n >= 0, "matrix dimension must be a power of two");
  std::size_t d = dim_of(n);
  CVector v(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) v(i * d + j) = m(i, j);
  detail::row_walsh_hadamard(v.data(), n);
  detail::apply_xz_sign(v.data(), n);
  v /= static_cast<double>(d);
  return {n, std::move(v)};
}

inline QuasiDist wigner_of_state(const CMatrix& rho, double tol = kTol) {
  validate_density(rho, tol);
  return wigner_transform(rho);
}

/// ρ = Σ_u w(u) A_u.
inline CMatrix state_of_wigner(const QuasiDist& w) {
  int n = w.n_qubits;
  std::size_t d = dim_of(n);
  require(w.size() == d * d, "quasidistribution length must be 4^n");
  CVector v = w.values;
  detail::apply_xz_sign(v.data(), n);
  detail::row_walsh_hadamard(v.data(), n);
  CMatrix rho(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) rho(i, j) = v(i * d + j);
  return rho;
}

/// (W_{Re ρ}, W_{Im ρ}); W_ρ = first + i·second.
inline std::pair<QuasiDist, QuasiDist> split_real_imag(const CMatrix& rho) {
  return {wigner_transform(rho.real().cast<cplx>()), wigner_transform(rho.imag().cast<cplx>())};
}

/// Tensor product in the phase-point sense: (a ⊗ b)(u ⊕ v) = a(u) b(v).
inline QuasiDist tensor(const QuasiDist& a, const QuasiDist& b) {
  int n = a.n_qubits + b.n_qubits;
  QuasiDist out{n, CVector(std::size_t{1} << (2 * n))};
  for (std::size_t i = 0; i < a.size(); ++i) {
    PhasePoint u = PhasePoint::from_index(a.n_qubits, i);
    for (std::size_t j = 0; j < b.size(); ++j)
      out.values(concat(u, PhasePoint::from_index(b.n_qubits, j)).index()) = a.values(i) * b.values(j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Channels

/// A linear map from n_in to n_out qubits, held as Kraus operators or as a map on matrices.
class Channel {
 public:
  using Map = std::function<CMatrix(const CMatrix&)>;

  static Channel from_kraus(int n_in, int n_out, std::vector<CMatrix> kraus) {
    require(!kraus.empty(), "Kraus list is empty");
    for (const auto& k : kraus)
      require(k.rows() == static_cast<Eigen::Index>(dim_of(n_out)) &&
                  k.cols() == static_cast<Eigen::Index>(dim_of(n_in)),
              "Kraus operator dimension mismatch");
    Channel c(n_in, n_out);
    c.kraus_ = std::move(kraus);
    return c;
  }
  static Channel from_map(int n_in, int n_out, Map map) {
    Channel c(n_in, n_out);
    c.map_ = std::move(map);
    return c;
  }
  static Channel unitary(const CMatrix& u) {
    int n = qubits_of_dim(u.rows());
    require(n >= 0 && u.rows() == u.cols(), "unitary must be square with power-of-two dimension");
    return from_kraus(n, n, {u});
  }
  static Channel identity(int n) { return unitary(CMatrix::Identity(dim_of(n), dim_of(n))); }

  int n_in() const { return n_in_; }
  int n_out() const { return n_out_; }
  bool has_kraus() const { return !kraus_.empty(); }

  CMatrix apply(const CMatrix& rho) const {
    require(rho.rows() == static_cast<Eigen::Index>(dim_of(n_in_)) && rho.cols() == rho.rows(),
            "channel input dimension mismatch");
    if (!has_kraus()) return map_(rho);
    CMatrix out = CMatrix::Zero(dim_of(n_out_), dim_of(n_out_));
    for (const auto& k : kraus_) out.noalias() += k * rho * k.adjoint();
    return out;
  }

  /// J(E) = (I ⊗ E)(|φ+><φ+|), input register first.
  CMatrix choi() const {
    require(n_in_ + n_out_ <= kMaxDenseQubits + 2, "Choi state too large for dense evaluation");
    std::size_t di = dim_of(n_in_), dout = dim_of(n_out_), D = di * dout;
    CMatrix j = CMatrix::Zero(D, D);
    if (has_kraus()) {
      CVector v(D);
      for (const auto& k : kraus_) {
        for (std::size_t i = 0; i < di; ++i)
          for (std::size_t a = 0; a < dout; ++a) v(i * dout + a) = k(a, i);
        j.selfadjointView<Eigen::Lower>().rankUpdate(v);
      }
      CMatrix full = j.selfadjointView<Eigen::Lower>();
      j = std::move(full);
    } else {
      CMatrix basis = CMatrix::Zero(di, di);
      for (std::size_t i = 0; i < di; ++i)
        for (std::size_t l = 0; l < di; ++l) {
          basis(i, l) = 1.0;
          j.block(i * dout, l * dout, dout, dout) = map_(basis);
          basis(i, l) = 0.0;
        }
    }
    return j / static_cast<double>(di);
  }

  /// Kraus operators, extracted from the Choi matrix when the channel is map-based.
  std::vector<CMatrix> kraus(double tol = 1e-13) const {
    if (has_kraus()) return kraus_;
    std::size_t di = dim_of(n_in_), dout = dim_of(n_out_);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(choi() * static_cast<double>(di));
    std::vector<CMatrix> out;
    for (Eigen::Index e = 0; e < es.eigenvalues().size(); ++e) {
      double lam = es.eigenvalues()(e);
      if (lam <= tol) continue;
      CMatrix k(dout, di);
      for (std::size_t i = 0; i < di; ++i)
        for (std::size_t a = 0; a < dout; ++a) k(a, i) = std::sqrt(lam) * es.eigenvectors()(i * dout + a, e);
      out.push_back(std::move(k));
    }
    return out;
  }

  /// next ∘ this.
  Channel then(const Channel& next) const {
    require(next.n_in_ == n_out_, "composition dimension mismatch");
    if (has_kraus() && next.has_kraus()) {
      std::vector<CMatrix> ks;
      for (const auto& b : next.kraus_)
        for (const auto& a : kraus_) ks.push_back(b * a);
      return from_kraus(n_in_, next.n_out_, std::move(ks));
    }
    Channel first = *this, second = next;
    return from_map(n_in_, next.n_out_, [first, second](const CMatrix& r) { return second.apply(first.apply(r)); });
  }

  Channel tensor(const Channel& other) const {
    std::vector<CMatrix> ks;
    for (const auto& a : kraus())
      for (const auto& b : other.kraus()) ks.push_back(kron(a, b));
    return from_kraus(n_in_ + other.n_in_, n_out_ + other.n_out_, std::move(ks));
  }

  /// max |tr E(|i><j|) - δ_ij| over basis matrices.
  double trace_preservation_error() const {
    std::size_t di = dim_of(n_in_);
    CMatrix j = choi() * static_cast<double>(di);
    double err = 0;
    std::size_t dout = dim_of(n_out_);
    for (std::size_t i = 0; i < di; ++i)
      for (std::size_t l = 0; l < di; ++l)
        err = std::max(err, std::abs(j.block(i * dout, l * dout, dout, dout).trace() - (i == l ? 1.0 : 0.0)));
    return err;
  }

 private:
  Channel(int n_in, int n_out) : n_in_(n_in), n_out_(n_out) {}
  int n_in_ = 0, n_out_ = 0;
  std::vector<CMatrix> kraus_;
  Map map_;
};

inline CMatrix choi_state(const Channel& e) { return e.choi(); }

/// W_E(v|u) with rows v over P_{n_out} and columns u over P_{n_in}.
struct ChannelMatrix {
  int n_in = 0;
  int n_out = 0;
  CMatrix values;

  cplx operator()(const PhasePoint& v, const PhasePoint& u) const { return values(v.index(), u.index()); }
  QuasiDist apply(const QuasiDist& w) const {
    require(w.n_qubits == n_in, "channel matrix input size mismatch");
    return {n_out, values * w.values};
  }
  ChannelMatrix operator*(const ChannelMatrix& o) const {
    require(n_in == o.n_out, "channel matrix composition mismatch");
    return {o.n_in, n_out, values * o.values};
  }
};

/// W_E(v|u) = 2^{2n} W_{J(E)}(u ⊕ v), via the factorized transform of the Choi state.
inline ChannelMatrix wigner_of_channel_from_choi(const CMatrix& choi, int n_in, int n_out) {
  QuasiDist wj = wigner_transform(choi);
  require(wj.n_qubits == n_in + n_out, "Choi dimension mismatch");
  std::size_t Ni = std::size_t{1} << (2 * n_in), No = std::size_t{1} << (2 * n_out);
  double scale = static_cast<double>(std::size_t{1} << (2 * n_in));
  ChannelMatrix m{n_in, n_out, CMatrix(No, Ni)};
  for (std::size_t ui = 0; ui < Ni; ++ui) {
    PhasePoint u = PhasePoint::from_index(n_in, ui);
    for (std::size_t vi = 0; vi < No; ++vi)
      m.values(vi, ui) = scale * wj.values(concat(u, PhasePoint::from_index(n_out, vi)).index());
  }
  return m;
}

inline ChannelMatrix wigner_of_channel(const Channel& e) {
  return wigner_of_channel_from_choi(e.choi(), e.n_in(), e.n_out());
}

/// Tensor product of channel matrices in the phase-point sense.
inline ChannelMatrix tensor(const ChannelMatrix& a, const ChannelMatrix& b) {
  ChannelMatrix out{a.n_in + b.n_in, a.n_out + b.n_out,
                    CMatrix(std::size_t{1} << (2 * (a.n_out + b.n_out)), std::size_t{1} << (2 * (a.n_in + b.n_in)))};
  for (Eigen::Index v1 = 0; v1 < a.values.rows(); ++v1)
    for (Eigen::Index u1 = 0; u1 < a.values.cols(); ++u1) {
      PhasePoint pv1 = PhasePoint::from_index(a.n_out, v1), pu1 = PhasePoint::from_index(a.n_in, u1);
      for (Eigen::Index v2 = 0; v2 < b.values.rows(); ++v2)
        for (Eigen::Index u2 = 0; u2 < b.values.cols(); ++u2)
          out.values(concat(pv1, PhasePoint::from_index(b.n_out, v2)).index(),
                     concat(pu1, PhasePoint::from_index(b.n_in, u2)).index()) = a.values(v1, u1) * b.values(v2, u2);
    }
  return out;
}

struct StochasticReport {
  bool stochastic = false;
  double min_entry = 0;       // most negative real part
  double max_imag = 0;
  double max_column_error = 0;
};

inline StochasticReport is_stochastic(const ChannelMatrix& m, double tol = kTol) {
  StochasticReport r;
  r.min_entry = m.values.real().minCoeff();
  r.max_imag = m.values.imag().cwiseAbs().maxCoeff();
  for (Eigen::Index c = 0; c < m.values.cols(); ++c)
    r.max_column_error = std::max(r.max_column_error, std::abs(m.values.col(c).sum() - cplx(1.0)));
  r.stochastic = r.min_entry >= -tol && r.max_imag <= tol && r.max_column_error <= tol;
  return r;
}

// ---------------------------------------------------------------------------
// Named states

inline CMatrix projector(const CVector& psi) { return psi * psi.adjoint(); }

inline CVector ket_h() {
  CVector v(2);
  v << std::cos(std::numbers::pi / 8), std::sin(std::numbers::pi / 8);
  return v;
}
inline CVector ket_h_perp() {
  CVector v(2);
  v << -std::sin(std::numbers::pi / 8), std::cos(std::numbers::pi / 8);
  return v;
}
inline CVector ket_a() {
  CVector v(2);
  v << 1.0, std::polar(1.0, std::numbers::pi / 4);
  return v / std::sqrt(2.0);
}
inline CVector ket_a_perp() {
  CVector v(2);
  v << 1.0, -std::polar(1.0, std::numbers::pi / 4);
  return v / std::sqrt(2.0);
}
inline CMatrix maximally_mixed(int n) {
  return CMatrix::Identity(dim_of(n), dim_of(n)) / static_cast<double>(dim_of(n));
}
inline CVector basis_ket(int n, std::size_t i) {
  CVector v = CVector::Zero(dim_of(n));
  v(i) = 1.0;
  return v;
}

enum class Target { H, A };

inline CVector target_ket(Target t) { return t == Target::H ? ket_h() : ket_a(); }
inline CVector target_perp(Target t) { return t == Target::H ? ket_h_perp() : ket_a_perp(); }

/// ρ(ε) = (1-ε)|ψ><ψ| + ε I/2.
inline CMatrix noisy_magic_state(double eps, Target t = Target::H) {
  require(eps >= 0.0 && eps <= 1.0, "eps must lie in [0, 1]");
  return (1.0 - eps) * projector(target_ket(t)) + eps * maximally_mixed(1);
}

/// ρ -> ½(ρ + H ρ H).
inline Channel hadamard_twirl() {
  return Channel::from_kraus(1, 1, {CMatrix::Identity(2, 2) / std::sqrt(2.0), hadamard() / std::sqrt(2.0)});
}

inline double fidelity_with_pure(const CMatrix& rho, const CVector& psi) {
  return (psi.adjoint() * rho * psi)(0, 0).real();
}

/// Random density matrix from a Ginibre draw; real entries when rebit is set.
inline CMatrix random_density(int n, std::mt19937_64& rng, bool rebit = false, int rank = 0) {
  std::size_t d = dim_of(n);
  if (rank <= 0) rank = static_cast<int>(d);
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(d, rank);
  for (std::size_t i = 0; i < d; ++i)
    for (int j = 0; j < rank; ++j) m(i, j) = rebit ? cplx(g(rng), 0.0) : cplx(g(rng), g(rng));
  CMatrix rho = m * m.adjoint();
  return rho / rho.trace().real();
}

/// Uniform point of the rebit Bloch disc: ½(I + x X + z Z).
inline CMatrix random_rebit_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = std::sqrt(u(rng)), t = 2.0 * std::numbers::pi * u(rng);
  CMatrix rho(2, 2);
  rho << 1 + r * std::sin(t), r * std::cos(t), r * std::cos(t), 1 - r * std::sin(t);
  return 0.5 * rho;
}

}  // namespace wigcss
