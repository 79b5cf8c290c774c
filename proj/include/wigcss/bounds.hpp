#pragma once

#include "wigcss/entropics.hpp"

#include <optional>

namespace wigcss {

/// Parameters of a k-output distillation query.
struct DistillationSpec {
  int k = 1;
  double eps = 0.0;
  std::optional<CMatrix> input;   // single-qubit input; defaults to ρ(ε)
  Target target = Target::H;
  double delta = 1e-9;
  double p = 0.9;
  int d = 2;
  std::optional<CMatrix> output;  // explicit ρ′; worst case allowed by δ when absent

  CMatrix input_state() const { return input ? *input : noisy_magic_state(eps, target); }
  CVector target_ket_k() const {
    CVector t = CVector::Ones(1);
    for (int i = 0; i < k; ++i) {
      CMatrix next = kron(t, target_ket(target));
      t = next.col(0);
    }
    return t;
  }
  void validate(bool allow_certain = false) const {
    require(k >= 1, "k must be at least 1");
    require(eps >= 0.0 && eps <= 1.0, "eps must lie in [0, 1]");
    require(p > 0.0 && (p < 1.0 || (allow_certain && p == 1.0)), "p must lie in the open interval (0, 1)");
    require(delta >= 0.0, "delta must be nonnegative");
    require(d >= 2, "d must be at least 2");
    CMatrix rho = input_state();
    require(validate_density(rho) == 1, "input must be a single-qubit state");
    if (output) require(validate_density(*output) == k, "explicit output must act on k qubits");
  }
};

/// The two closed-form ingredients of ΔD at one α: ΔD(n) = n·slope + k - (α-1)^{-1} log2[...].
struct DeltaTerms {
  AlphaIndex alpha;
  int k = 1;
  double p = 0.5;
  double slope = 0;  // majorization: 1 - H_α(W_ρ); DPI: -H̃_α(ρ); 1⁺: mana(W_ρ)
  double d_out = 0;  // D_α of the accepted output against μ_k (for 1⁺: the output mana)
};

namespace detail {

/// log2(2^x - 1) for x > 0.
inline double log2_pow2_minus_one(double x) {
  if (x > 50) return x + std::log1p(-std::exp2(-x)) / std::log(2.0);
  return std::log2(std::expm1(x * std::log(2.0)));
}

}  // namespace detail

/// Majorization-pipeline terms (rebit inputs only).
inline DeltaTerms majorization_terms(const DistillationSpec& s, const AlphaIndex& al) {
  CMatrix rho = s.input_state();
  require(is_real_matrix(rho), "majorization bounds need a rebit input; complex inputs go through lift_complex");
  RVector w = wigner_transform(rho).real();
  DeltaTerms t{al, s.k, s.p, 0, 0};
  double dim = std::pow(static_cast<double>(s.d), s.k);
  if (al.kind == AlphaIndex::OnePlus) {
    t.slope = mana(w);
    if (s.output) {
      require(is_real_matrix(*s.output), "explicit output must be a rebit state");
      t.d_out = mana(wigner_transform(*s.output).real());
    } else {
      RVector wp = wigner_transform(projector(target_ket(s.target))).real();
      t.d_out = std::max(0.0, s.k * mana(wp) - std::log2(1.0 + s.delta * std::pow(dim, 2.5)));
    }
    return t;
  }
  t.slope = 1.0 - renyi_entropy(w, al);
  if (s.output) {
    require(is_real_matrix(*s.output), "explicit output must be a rebit state");
    t.d_out = 2.0 * s.k - renyi_entropy(wigner_transform(*s.output).real(), al);
  } else {
    RVector wp = wigner_transform(projector(target_ket(s.target))).real();
    t.d_out = s.k * (2.0 - renyi_entropy(wp, al)) - wigner_l1_continuity(s.delta, dim, al);
  }
  return t;
}

/// DPI-pipeline terms using sandwiched quantities.
inline DeltaTerms dpi_terms(const DistillationSpec& s, const AlphaIndex& al) {
  require(al.kind != AlphaIndex::OnePlus, "DPI bounds need α > 1");
  DeltaTerms t{al, s.k, s.p, 0, 0};
  t.slope = -sandwiched_entropy(s.input_state(), al);
  if (s.output) {
    t.d_out = s.k - sandwiched_entropy(*s.output, al);
  } else {
    double lg = std::log2(std::max(1e-300, 1.0 - s.delta / 2.0));
    double c = al.kind == AlphaIndex::Infinity ? 1.0 : al.value() / (al.value() - 1.0);
    t.d_out = s.k + c * lg;
  }
  return t;
}

/// ΔD at real n > k from precomputed terms.
inline double delta_d(const DeltaTerms& t, double n) {
  require(n > t.k, "ΔD needs n > k");
  if (t.alpha.kind == AlphaIndex::OnePlus) return n * t.slope - std::log2(t.p * std::exp2(t.d_out) + 1.0 - t.p);
  double L = detail::log2_pow2_minus_one(n - t.k);
  if (t.alpha.kind == AlphaIndex::Infinity)
    return n * t.slope + t.k - std::max(std::log2(t.p) + t.d_out, std::log2(1.0 - t.p) - L);
  double a = t.alpha.value();
  double c1 = a * std::log2(t.p) + (a - 1.0) * t.d_out;
  double c2 = a * std::log2(1.0 - t.p) + (1.0 - a) * L;
  return n * t.slope + t.k - log2_sum_exp2({c1, c2}) / (a - 1.0);
}

inline double delta_d(const DistillationSpec& s, double n, const AlphaIndex& al) { return delta_d(majorization_terms(s, al), n); }

/// ΔD from explicit block distributions: n D(W_ρ||W_{I/2}) - D(W_{ρ_p}||W_{τ_{n,k}}) with failure state σ.
inline double delta_d_primal(const DistillationSpec& s, double n, const AlphaIndex& al, const CMatrix& sigma) {
  require(s.output.has_value(), "the primal form needs an explicit output");
  require(n > s.k, "ΔD needs n > k");
  const int k = s.k;
  RVector w = wigner_transform(s.input_state()).real();
  RVector u = RVector::Constant(4, 0.25);
  double q = std::exp2(k - n);
  CMatrix rho_p = flagged_output(s.p, *s.output, sigma);
  CMatrix tau = flagged_output(q, maximally_mixed(k), sigma);
  RVector wp = wigner_transform(rho_p).real();
  RVector wt = floor_reference(wigner_transform(tau).real());
  return n * renyi_divergence(w, u, al) - renyi_divergence(wp, wt, al);
}

/// Direct sandwiched-divergence form of the DPI ΔD̃ on explicit block states.
inline double delta_d_dpi_direct(const DistillationSpec& s, double n, const AlphaIndex& al, const CMatrix& sigma) {
  require(s.output.has_value(), "the direct form needs an explicit output");
  double q = std::exp2(s.k - n);
  CMatrix rho_p = flagged_output(s.p, *s.output, sigma);
  CMatrix tau = flagged_output(q, maximally_mixed(s.k), sigma);
  CMatrix rho = s.input_state();
  return n * sandwiched_divergence(rho, maximally_mixed(1), al) - sandwiched_divergence(rho_p, tau, al);
}

// ---------------------------------------------------------------------------
// Roots

struct AlphaBound {
  AlphaIndex alpha;
  double n_lower = kInf;
  double n_upper = -kInf;
  bool feasible = false;
};

struct BoundResult {
  std::vector<AlphaBound> rows;
  double n_lower = kInf;
  double n_upper = -kInf;
  bool feasible = false;

  /// Smallest admissible integer n.
  double integer_lower() const { return feasible ? std::ceil(n_lower - 1e-9) : kInf; }
  /// Largest admissible integer n (may be +∞).
  double integer_upper() const { return feasible ? std::floor(n_upper + 1e-9) : -kInf; }
};

inline constexpr double kDefaultNCap = 1e6;

/// Feasible interval {n : ΔD(n) >= 0} of the concave ΔD on (k, n_cap], continuing past n_cap when needed.
inline AlphaBound root_bounds(const DeltaTerms& t, double n_cap = kDefaultNCap) {
  AlphaBound out{t.alpha};
  auto f = [&](double n) { return delta_d(t, n); };
  const double lo0 = t.k + 1e-12 * std::max(1.0, double(t.k));
  require(n_cap > lo0, "n_cap must exceed k");

  if (t.alpha.kind == AlphaIndex::OnePlus) {
    // Linear in n: n·M_in - c.
    double c = std::log2(t.p * std::exp2(t.d_out) + 1.0 - t.p);
    if (t.slope <= 1e-15) {
      if (c > 0) return out;
      out.n_lower = t.k;
      out.n_upper = kInf;
      out.feasible = true;
      return out;
    }
    out.n_lower = std::max<double>(t.k, c / t.slope);
    out.n_upper = kInf;
    out.feasible = true;
    return out;
  }

  // Golden-section search for the maximizer on [lo0, n_cap].
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo0, b = n_cap;
  double x1 = b - g * (b - a), x2 = a + g * (b - a), f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 400 && b - a > 1e-10 * std::max(1.0, std::abs(a)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  double nhat = 0.5 * (a + b), fhat = f(nhat);
  for (double cand : {lo0, n_cap})
    if (f(cand) > fhat) {
      nhat = cand;
      fhat = f(cand);
    }
  if (fhat < 0) return out;

  auto bisect = [&](double neg, double pos) {
    // f(neg) < 0 <= f(pos); returns the endpoint on the feasible side
    for (int it = 0; it < 300; ++it) {
      if (std::abs(pos - neg) <= std::max(1e-10, 1e-15 * std::abs(pos))) break;
      double mid = 0.5 * (neg + pos);
      (f(mid) >= 0 ? pos : neg) = mid;
    }
    return pos;
  };

  out.feasible = true;
  out.n_lower = f(lo0) >= 0 ? double(t.k) : bisect(lo0, nhat);
  if (f(n_cap) >= 0) {
    if (t.slope > 0) {
      out.n_upper = kInf;
    } else {
      double hi = n_cap;
      while (f(hi) >= 0 && hi < 1e15) hi *= 2.0;
      out.n_upper = f(hi) >= 0 ? kInf : bisect(hi, hi / 2.0);
    }
  } else {
    out.n_upper = bisect(n_cap, nhat);
  }
  return out;
}

inline BoundResult aggregate(std::vector<AlphaBound> rows) {
  require(!rows.empty(), "empty α grid");
  BoundResult r;
  r.rows = std::move(rows);
  r.feasible = true;
  double lo = -kInf, hi = kInf;
  for (const auto& b : r.rows) {
    r.feasible &= b.feasible;
    lo = std::max(lo, b.n_lower);
    hi = std::min(hi, b.n_upper);
  }
  if (r.feasible && lo <= hi) {
    r.n_lower = lo;
    r.n_upper = hi;
  } else {
    r.feasible = false;
  }
  return r;
}

/// Majorization bounds over an α grid.
inline BoundResult aggregate_bounds(const DistillationSpec& s, const std::vector<AlphaIndex>& grid, double n_cap = kDefaultNCap) {
  s.validate();
  std::vector<AlphaBound> rows;
  for (const auto& al : grid) rows.push_back(root_bounds(majorization_terms(s, al), n_cap));
  return aggregate(std::move(rows));
}

inline AlphaBound root_bounds(const DistillationSpec& s, const AlphaIndex& al, double n_cap = kDefaultNCap) {
  s.validate();
  return root_bounds(majorization_terms(s, al), n_cap);
}

/// DPI comparison bounds; 1⁺ entries of the grid are skipped.
inline BoundResult dpi_bounds(const DistillationSpec& s, const std::vector<AlphaIndex>& grid, double n_cap = kDefaultNCap) {
  s.validate();
  std::vector<AlphaBound> rows;
  for (const auto& al : grid)
    if (al.kind != AlphaIndex::OnePlus) rows.push_back(root_bounds(dpi_terms(s, al), n_cap));
  return aggregate(std::move(rows));
}

// ---------------------------------------------------------------------------
// Closed forms

struct AnalyticBound {
  std::optional<double> lower;
  std::optional<double> upper;
  bool degenerate = false;
};

/// Closed-form bound from entropies in bits: h_rho = H_α(W_ρ), h_psi = H_α(W_ψ).
inline AnalyticBound analytic_bounds_from_entropies(double h_rho, double h_psi, int k, double p, double delta, int d, const AlphaIndex& al) {
  require(al.kind != AlphaIndex::OnePlus, "analytic bounds need α > 1");
  double logd = std::log2(static_cast<double>(d));
  double c = al.kind == AlphaIndex::Infinity ? -1.0 : al.value() / (1.0 - al.value());
  double num = k * (logd - h_psi) - c * std::log2(p / (1.0 + delta * std::pow(static_cast<double>(d), 2.5)));
  double den = logd - h_rho;
  AnalyticBound b;
  if (std::abs(den) < 1e-14) b.degenerate = true;
  else if (den > 0) b.lower = num / den;
  else b.upper = num / den;
  return b;
}

inline AnalyticBound analytic_bounds(const DistillationSpec& s, const AlphaIndex& al) {
  s.validate();
  CMatrix rho = s.input_state();
  require(is_real_matrix(rho), "analytic bounds need a real-represented input");
  double h_rho = renyi_entropy(wigner_transform(rho).real(), al);
  double h_psi = renyi_entropy(wigner_transform(projector(target_ket(s.target))).real(), al);
  return analytic_bounds_from_entropies(h_rho, h_psi, s.k, s.p, s.delta, s.d, al);
}

/// n* = 2 log_{f(ε)}[(1+6δ)/p], f(ε) = 1/(1-ε+ε²/2).
inline double n_star(double eps, double delta, double p) {
  require(eps >= 0 && eps <= 1, "eps must lie in [0, 1]");
  double lf = -std::log(1.0 - eps + eps * eps / 2.0);
  if (lf <= 0) return kInf;
  return 2.0 * std::log((1.0 + 6.0 * delta) / p) / lf;
}

/// log2(p 2^{M(ρ′)} + 1 - p)/M(ρ); +∞ when the input has no mana.
inline double mana_limit_bound(const DistillationSpec& s) {
  s.validate(true);
  DeltaTerms t = majorization_terms(s, AlphaIndex::one_plus());
  if (t.slope <= 1e-15) return kInf;
  return std::log2(t.p * std::exp2(t.d_out) + 1.0 - t.p) / t.slope;
}

/// d^k λ_max(ρ)^n.
inline double acceptance_ceiling(const CMatrix& rho, double n, int k, int d = 2) {
  return std::pow(static_cast<double>(d), k) * std::pow(lambda_max(rho), n);
}

/// Supremum of p for which an explicit (n, ρ′) passes ΔD_α >= 0 at every grid α.
inline double acceptance_upper_bound_p(const CMatrix& rho, const CMatrix& rho_out, int n, const std::vector<AlphaIndex>& grid) {
  DistillationSpec s;
  s.k = qubits_of_dim(rho_out.rows());
  s.input = rho;
  s.output = rho_out;
  require(n > s.k, "n must exceed k");
  auto ok = [&](double p) {
    s.p = p;
    for (const auto& al : grid)
      if (delta_d(majorization_terms(s, al), n) < 0) return false;
    return true;
  };
  const int steps = 400;
  double prev = 1e-12;
  if (!ok(prev)) return 0.0;
  for (int i = 1; i <= steps; ++i) {
    double p = std::min(1.0 - 1e-12, static_cast<double>(i) / steps);
    if (!ok(p)) {
      double lo = prev, hi = p;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
      }
      return lo;
    }
    prev = p;
  }
  return 1.0;
}

enum class BoundMethod { Majorization, Dpi };

/// ρ′(F) = F|ψ><ψ| + (1-F)|ψ⊥><ψ⊥|.
inline CMatrix fidelity_pencil(double F, Target t) {
  return F * projector(target_ket(t)) + (1.0 - F) * projector(target_perp(t));
}

/// Largest F in [½, 1] such that some n in (1, n_cap] satisfies every grid constraint.
inline double fmax_upper(const CMatrix& rho, double p, BoundMethod method, const std::vector<AlphaIndex>& grid, double n_cap = kDefaultNCap,
                         Target t = Target::H) {
  DistillationSpec s;
  s.k = 1;
  s.input = rho;
  s.p = p;
  s.target = t;
  auto feasible = [&](double F) {
    s.output = fidelity_pencil(F, t);
    return (method == BoundMethod::Majorization ? aggregate_bounds(s, grid, n_cap) : dpi_bounds(s, grid, n_cap)).feasible;
  };
  if (feasible(1.0)) return 1.0;
  if (!feasible(0.5)) return 0.5;
  double lo = 0.5, hi = 1.0;
  for (int it = 0; it < 50; ++it) {
    double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace wigcss
