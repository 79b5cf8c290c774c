#pragma once

#include "wigcss/core.hpp"
#include "wigcss/css.hpp"
#include "wigcss/nnls.hpp"
#include "wigcss/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace wigcss {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
/// Interior floor applied to reference distributions.
inline constexpr double kReferenceFloor = 1e-12;

/// α = 2a/(2b-1) with a >= b >= 1, the point ∞, the limit point 1⁺, or an arbitrary real α > 1.
struct AlphaIndex {
  enum Kind { Rational, Infinity, OnePlus, Real } kind = Rational;
  int a = 1;
  int b = 1;
  double real = 2.0;

  static AlphaIndex rational(int a, int b) {
    require(b >= 1 && a >= b, "alpha needs a >= b >= 1");
    int num = 2 * a, den = 2 * b - 1, g = std::gcd(num, den);
    return {Rational, num / g / 2, (den / g + 1) / 2, 0.0};
  }
  static AlphaIndex infinity() { return {Infinity, 0, 0, kInf}; }
  static AlphaIndex one_plus() { return {OnePlus, 0, 0, 1.0}; }
  static AlphaIndex of(double v) {
    require(v > 1.0, "alpha must exceed 1");
    return {Real, 0, 0, v};
  }

  double value() const {
    switch (kind) {
      case Rational: return 2.0 * a / (2.0 * b - 1.0);
      case Infinity: return kInf;
      case OnePlus: return 1.0;
      case Real: return real;
    }
    return real;
  }
  bool in_permissible_set() const { return kind == Rational || kind == Infinity; }

  std::string label() const {
    switch (kind) {
      case Rational: return std::to_string(2 * a) + "/" + std::to_string(2 * b - 1);
      case Infinity: return "inf";
      case OnePlus: return "1+";
      case Real: {
        std::ostringstream os;
        os.precision(12);
        os << real;
        return os.str();
      }
    }
    return "";
  }
  static AlphaIndex parse(const std::string& s) {
    if (s == "inf") return infinity();
    if (s == "1+") return one_plus();
    auto slash = s.find('/');
    if (slash != std::string::npos) {
      int num = std::stoi(s.substr(0, slash)), den = std::stoi(s.substr(slash + 1));
      require(num % 2 == 0 && den % 2 == 1 && num > den, "alpha fraction must be 2a/(2b-1) with a >= b");
      return rational(num / 2, (den + 1) / 2);
    }
    return of(std::stod(s));
  }
  bool operator==(const AlphaIndex& o) const { return kind == o.kind && label() == o.label(); }
};

/// Sorted, deduplicated 2a/(2b-1) <= cap with a <= a_max, b <= b_max; optional ∞ and 1⁺ entries.
inline std::vector<AlphaIndex> alpha_grid(int a_max, int b_max, double cap, bool with_infinity = false, bool with_one_plus = false) {
  require(a_max >= 1 && b_max >= 1, "alpha grid limits must be positive");
  std::vector<AlphaIndex> out;
  for (int b = 1; b <= b_max; ++b)
    for (int a = b; a <= a_max; ++a) {
      AlphaIndex al = AlphaIndex::rational(a, b);
      if (al.value() > cap + 1e-12) continue;
      bool dup = false;
      for (const auto& o : out) dup |= o.a == al.a && o.b == al.b;
      if (!dup) out.push_back(al);
    }
  std::sort(out.begin(), out.end(), [](const AlphaIndex& x, const AlphaIndex& y) { return x.value() < y.value(); });
  if (with_one_plus) out.insert(out.begin(), AlphaIndex::one_plus());
  if (with_infinity) out.push_back(AlphaIndex::infinity());
  return out;
}

/// Default grid: a <= 12, b <= 6, α <= 40, plus the α→1⁺ limit point.
inline std::vector<AlphaIndex> default_alpha_grid() { return alpha_grid(12, 6, 40.0, false, true); }

// ---------------------------------------------------------------------------
// Classical quantities on real quasidistributions

inline RVector real_values(const QuasiDist& w, double tol = kTol) {
  require(w.is_real(tol), "complex quasidistribution: lift it first");
  return w.real();
}

/// log2 Σ exp2(t_i) over finite entries.
inline double log2_sum_exp2(const std::vector<double>& t) {
  double m = -kInf;
  for (double v : t) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double v : t) s += std::exp2(v - m);
  return m + std::log2(s);
}

inline double mana(const RVector& w) { return std::log2(w.cwiseAbs().sum()); }
inline double mana(const QuasiDist& w) { return mana(real_values(w)); }

/// log2 Σ |w_i|^α for finite α > 1 (α given as a double).
inline double log2_power_sum(const RVector& w, double alpha) {
  std::vector<double> t;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) != 0.0) t.push_back(alpha * std::log2(std::abs(w(i))));
  return log2_sum_exp2(t);
}

inline double renyi_entropy(const RVector& w, const AlphaIndex& al) {
  switch (al.kind) {
    case AlphaIndex::Infinity: return -std::log2(w.cwiseAbs().maxCoeff());
    case AlphaIndex::OnePlus: {
      if (mana(w) > 1e-14) return -kInf;
      double h = 0;
      for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w(i) > 0) h -= w(i) * std::log2(w(i));
      return h;
    }
    default: {
      double a = al.value();
      return log2_power_sum(w, a) / (1.0 - a);
    }
  }
}
inline double renyi_entropy_quasi(const QuasiDist& w, const AlphaIndex& al) { return renyi_entropy(real_values(w), al); }

/// Reference with entries below the interior floor raised to it; negative entries are rejected.
inline RVector floor_reference(const RVector& r, double floor = kReferenceFloor, double tol = kTol) {
  require(r.minCoeff() >= -tol, "reference distribution has a negative entry");
  return r.cwiseMax(floor);
}

/// log2 Q_α(w||r) = log2 Σ |w_i|^α r_i^{1-α}; r must be strictly positive.
inline double log2_general_mean(const RVector& w, const RVector& r, double alpha) {
  require(w.size() == r.size(), "distribution sizes differ");
  require(r.minCoeff() > 0, "reference distribution has a zero or negative entry");
  std::vector<double> t;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) != 0.0) t.push_back(alpha * std::log2(std::abs(w(i))) + (1.0 - alpha) * std::log2(r(i)));
  return log2_sum_exp2(t);
}

inline double general_mean_q(const RVector& w, const RVector& r, const AlphaIndex& al) {
  require(al.kind == AlphaIndex::Rational || al.kind == AlphaIndex::Real, "Q_α needs a finite α");
  return std::exp2(log2_general_mean(w, r, al.value()));
}

inline double renyi_divergence(const RVector& w, const RVector& r, const AlphaIndex& al) {
  require(w.size() == r.size(), "distribution sizes differ");
  require(r.minCoeff() > 0, "reference distribution has a zero or negative entry");
  switch (al.kind) {
    case AlphaIndex::Infinity: return std::log2((w.cwiseAbs().array() / r.array()).maxCoeff());
    case AlphaIndex::OnePlus: {
      if (mana(w) > 1e-14) return kInf;
      double d = 0;
      for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w(i) > 0) d += w(i) * std::log2(w(i) / r(i));
      return d;
    }
    default: {
      double a = al.value();
      return log2_general_mean(w, r, a) / (a - 1.0);
    }
  }
}
inline double renyi_divergence_quasi(const QuasiDist& w, const QuasiDist& r, const AlphaIndex& al) {
  return renyi_divergence(real_values(w), floor_reference(real_values(r)), al);
}

/// μ(w) = Re w ⊕ Im w.
inline RVector lift_complex(const QuasiDist& w) {
  RVector out(2 * w.size());
  out << w.real(), w.imag();
  return out;
}
/// ν(r) = ½(r ⊕ r).
inline RVector lift_reference(const RVector& r) {
  RVector out(2 * r.size());
  out << r, r;
  return 0.5 * out;
}

/// α/(α-1) log2(1 + δ d^{5/2}).
inline double wigner_l1_continuity(double delta, double d, const AlphaIndex& al) {
  require(delta >= 0, "trace distance must be nonnegative");
  double base = std::log2(1.0 + delta * std::pow(d, 2.5));
  switch (al.kind) {
    case AlphaIndex::Infinity: return base;
    case AlphaIndex::OnePlus: return delta == 0 ? 0.0 : kInf;
    default: {
      double a = al.value();
      return a / (a - 1.0) * base;
    }
  }
}

// ---------------------------------------------------------------------------
// Quantum quantities

inline RVector eigenvalues_psd(const CMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseMax(0.0);
}

/// Rényi entropy of the spectrum, H̃_α(ρ).
inline double sandwiched_entropy(const CMatrix& rho, const AlphaIndex& al) {
  RVector l = eigenvalues_psd(rho);
  if (al.kind == AlphaIndex::Infinity) return -std::log2(l.maxCoeff());
  require(al.kind != AlphaIndex::OnePlus, "sandwiched quantities need α > 1");
  double a = al.value();
  return log2_power_sum(l, a) / (1.0 - a);
}

/// D̃_α(ρ||τ) = (α-1)^{-1} log2 tr[(τ^{(1-α)/2α} ρ τ^{(1-α)/2α})^α]; D̃_∞ = log2 λ_max(τ^{-1/2} ρ τ^{-1/2}).
inline double sandwiched_divergence(const CMatrix& rho, const CMatrix& tau, const AlphaIndex& al) {
  require(rho.rows() == tau.rows(), "state dimensions differ");
  require(al.kind != AlphaIndex::OnePlus, "sandwiched quantities need α > 1");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(tau);
  require(es.eigenvalues().minCoeff() > 1e-14, "reference state is singular");
  double a = al.value();
  double s = al.kind == AlphaIndex::Infinity ? -0.5 : (1.0 - a) / (2.0 * a);
  CMatrix t = es.eigenvectors() * es.eigenvalues().array().pow(s).matrix().cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  CMatrix m = t * rho * t;
  RVector l = eigenvalues_psd(0.5 * (m + m.adjoint()));
  if (al.kind == AlphaIndex::Infinity) return std::log2(l.maxCoeff());
  return log2_power_sum(l, a) / (a - 1.0);
}

// ---------------------------------------------------------------------------
// Λ_α monotone

struct LambdaResult {
  double value = 0;
  RVector weights;        // over the enumerated pure CSS states
  RVector reference;      // W of the optimal CSS mixture
};

struct LambdaOptions {
  int starts = 8;
  int max_iter = 4000;
  double weight_floor = 1e-12;
  std::uint64_t seed = 7;
};

namespace detail {

/// Euclidean projection onto {λ >= floor, Σλ = 1}.
inline RVector project_simplex(const RVector& v, double floor) {
  const Eigen::Index m = v.size();
  double mass = 1.0 - floor * static_cast<double>(m);
  RVector y = v.array() - floor;
  std::vector<double> s(y.data(), y.data() + m);
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0, theta = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    cum += s[i];
    double t = (cum - mass) / static_cast<double>(i + 1);
    if (s[i] - t > 0) theta = t;
  }
  return (y.array() - theta).cwiseMax(0.0) + floor;
}

}  // namespace detail

/// Λ_α(ρ) = min over CSS mixtures τ of D_α(W_ρ||W_τ), for rebit ρ on 1 or 2 qubits.
inline LambdaResult lambda_monotone(const CMatrix& rho, const AlphaIndex& al, const LambdaOptions& opt = {}) {
  int n = validate_density(rho);
  require(n >= 1 && n <= 2, "Λ_α supports 1 or 2 qubits");
  require(is_real_matrix(rho), "Λ_α needs a rebit state");
  require(al.kind != AlphaIndex::OnePlus, "Λ_α needs α > 1");
  RVector w = wigner_transform(rho).real();
  auto verts = enumerate_css_states(n);
  const Eigen::Index m = static_cast<Eigen::Index>(verts.size());
  RMatrix M(w.size(), m);
  for (Eigen::Index j = 0; j < m; ++j) M.col(j) = wigner_transform(verts[j]).real();
  LambdaResult best;
  best.value = kInf;

  if (al.kind == AlphaIndex::Infinity) {
    // min t s.t. M λ >= |w|/t on the simplex; feasibility by NNLS with slack columns.
    RVector aw = w.cwiseAbs();
    auto feasible = [&](double t, RVector* lam) {
      RMatrix A(w.size() + 1, m + w.size());
      A.setZero();
      A.topLeftCorner(w.size(), m) = M;
      A.topRightCorner(w.size(), w.size()) = -RMatrix::Identity(w.size(), w.size());
      A.bottomLeftCorner(1, m).setOnes();
      RVector b(w.size() + 1);
      b << aw / t, 1.0;
      auto r = nnls(A, b);
      if (lam) *lam = r.x.head(m);
      return r.residual <= 1e-10;
    };
    double lo = std::log2(aw.maxCoeff()), hi = std::log2(aw.maxCoeff() / kReferenceFloor);
    // t = 2^x; feasible for large x
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
      double mid = 0.5 * (lo + hi);
      (feasible(std::exp2(mid), nullptr) ? hi : lo) = mid;
    }
    feasible(std::exp2(hi), &best.weights);
    best.weights = best.weights.cwiseMax(0.0);
    best.weights /= best.weights.sum();
    best.reference = (M * best.weights).cwiseMax(kReferenceFloor);
    best.value = renyi_divergence(w, best.reference, al);
    return best;
  }

  const double a = al.value();
  auto objective = [&](const RVector& lam, RVector* grad) {
    RVector r = (M * lam).cwiseMax(kReferenceFloor);
    std::vector<double> t(w.size());
    for (Eigen::Index u = 0; u < w.size(); ++u)
      t[u] = w(u) == 0.0 ? -kInf : a * std::log2(std::abs(w(u))) + (1.0 - a) * std::log2(r(u));
    double lf = log2_sum_exp2(t);
    if (grad) {
      RVector g = RVector::Zero(m);
      for (Eigen::Index u = 0; u < w.size(); ++u) {
        if (!std::isfinite(t[u])) continue;
        double omega = std::exp2(t[u] - lf);
        g += ((1.0 - a) * omega / r(u)) * M.row(u).transpose();
      }
      *grad = g / std::log(2.0);
    }
    return lf;  // log2 Q, minimized
  };

  std::mt19937_64 rng(opt.seed);
  std::gamma_distribution<double> gam(1.0, 1.0);
  for (int s = 0; s < opt.starts; ++s) {
    RVector lam(m);
    if (s == 0) lam.setConstant(1.0 / static_cast<double>(m));
    else {
      for (Eigen::Index j = 0; j < m; ++j) lam(j) = gam(rng);
      lam /= lam.sum();
    }
    lam = detail::project_simplex(lam, opt.weight_floor);
    RVector g;
    double f = objective(lam, &g), step = 1.0;
    for (int it = 0; it < opt.max_iter; ++it) {
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        RVector cand = detail::project_simplex(lam - step * g, opt.weight_floor);
        RVector dir = cand - lam;
        double fc = objective(cand, nullptr);
        if (fc <= f + 1e-4 * g.dot(dir)) {
          moved = dir.norm() > 1e-15;
          lam = cand;
          f = fc;
          step *= 2.0;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      objective(lam, &g);
    }
    double val = f / (a - 1.0);
    if (val < best.value) {
      best.value = val;
      best.weights = lam;
    }
  }
  best.reference = (M * best.weights).cwiseMax(kReferenceFloor);
  return best;
}

}  // namespace wigcss
