#pragma once

#include "wigcss/core.hpp"
#include "wigcss/nnls.hpp"
#include "wigcss/pauli.hpp"
#include "wigcss/phase_space.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <variant>

namespace wigcss {

// ---------------------------------------------------------------------------
// Codes

struct Generator {
  char type = 'Z';  // 'X' or 'Z'
  std::uint64_t support = 0;
  bool negative = false;

  bool operator==(const Generator&) const = default;
};

struct CssCode {
  int n = 0;
  int k = 0;
  std::string name;
  std::vector<Generator> generators;  // file order

  std::vector<std::uint64_t> rows(char type) const {
    std::vector<std::uint64_t> out;
    for (const auto& g : generators)
      if (g.type == type) out.push_back(g.support);
    return out;
  }
  PauliTerm term(std::size_t i) const {
    const auto& g = generators.at(i);
    return g.type == 'X' ? PauliTerm::x_type(n, g.support, g.negative) : PauliTerm::z_type(n, g.support, g.negative);
  }
  std::vector<PauliTerm> terms() const {
    std::vector<PauliTerm> out;
    for (std::size_t i = 0; i < generators.size(); ++i) out.push_back(term(i));
    return out;
  }
  bool operator==(const CssCode&) const = default;
};

inline int gf2_rank(std::vector<std::uint64_t> rows) {
  int rank = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] == 0) continue;
    ++rank;
    std::uint64_t pivot = rows[i] & (~rows[i] + 1);
    for (std::size_t j = i + 1; j < rows.size(); ++j)
      if (rows[j] & pivot) rows[j] ^= rows[i];
  }
  return rank;
}

inline std::string bitstring(std::uint64_t mask, int n) {
  std::string s(n, '0');
  for (int q = 0; q < n; ++q)
    if (has_qubit(mask, n, q)) s[q] = '1';
  return s;
}

/// Violations of the CssCode invariants; empty when valid.
inline std::vector<std::string> validate_code(const CssCode& c) {
  std::vector<std::string> v;
  if (c.n <= 0 || c.n > 63) v.push_back("n must lie in [1, 63]");
  if (c.k < 0 || c.k >= c.n) v.push_back("k must lie in [0, n)");
  if (static_cast<int>(c.generators.size()) != c.n - c.k)
    v.push_back("expected " + std::to_string(c.n - c.k) + " generators, found " + std::to_string(c.generators.size()));
  for (std::size_t i = 0; i < c.generators.size(); ++i) {
    const auto& g = c.generators[i];
    if (g.type != 'X' && g.type != 'Z') v.push_back("generator " + std::to_string(i) + " has unknown type");
    if (g.support == 0) v.push_back("generator " + std::to_string(i) + " has empty support");
    if (c.n < 64 && (g.support & ~low_mask(c.n))) v.push_back("generator " + std::to_string(i) + " exceeds n qubits");
  }
  for (std::size_t i = 0; i < c.generators.size(); ++i)
    for (std::size_t j = i + 1; j < c.generators.size(); ++j) {
      const auto &a = c.generators[i], &b = c.generators[j];
      if (a.type != b.type && parity(a.support & b.support))
        v.push_back("generators " + std::to_string(i) + " and " + std::to_string(j) + " anticommute (odd overlap)");
    }
  for (char t : {'X', 'Z'}) {
    auto r = c.rows(t);
    if (gf2_rank(r) != static_cast<int>(r.size()))
      v.push_back(std::string(1, t) + "-type generators are linearly dependent");
  }
  return v;
}

inline void require_valid(const CssCode& c) {
  auto v = validate_code(c);
  if (!v.empty()) throw Error("invalid code '" + c.name + "': " + v.front());
}

/// Parses the text format: `[[n,k]] name` then lines `X 0110100 +`.
inline CssCode parse_code(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  CssCode c;
  bool header = false;
  auto fail = [&](const std::string& msg) { throw Error("line " + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!header) {
      int n = 0, k = 0, consumed = 0;
      if (std::sscanf(line.c_str(), "[[%d,%d]]%n", &n, &k, &consumed) != 2 || consumed == 0)
        fail("expected header '[[n,k]] name'");
      std::string rest = line.substr(consumed);
      auto b = rest.find_first_not_of(" \t");
      c.n = n;
      c.k = k;
      c.name = b == std::string::npos ? "" : rest.substr(b);
      if (n <= 0 || n > 63) fail("n must lie in [1, 63]");
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string type, bits, sign, extra;
    if (!(ls >> type >> bits >> sign) || (ls >> extra)) fail("expected '<X|Z> <bits> <+|->'");
    if (type != "X" && type != "Z") fail("generator type must be X or Z");
    if (static_cast<int>(bits.size()) != c.n) fail("support must have exactly " + std::to_string(c.n) + " bits");
    if (sign != "+" && sign != "-") fail("sign must be + or -");
    Generator g{type[0], 0, sign == "-"};
    for (int q = 0; q < c.n; ++q) {
      if (bits[q] == '1') g.support |= qubit_bit(c.n, q);
      else if (bits[q] != '0') fail("support must contain only 0 and 1");
    }
    c.generators.push_back(g);
  }
  if (!header) throw Error("line " + std::to_string(lineno) + ": missing header");
  return c;
}

inline std::string format_code(const CssCode& c) {
  std::string s = "[[" + std::to_string(c.n) + "," + std::to_string(c.k) + "]]";
  if (!c.name.empty()) s += " " + c.name;
  s += "\n";
  for (const auto& g : c.generators) s += std::string(1, g.type) + " " + bitstring(g.support, c.n) + (g.negative ? " -\n" : " +\n");
  return s;
}

inline std::string default_data_dir() {
  if (const char* env = std::getenv("WIGCSS_DATA_DIR")) return env;
#ifdef WIGCSS_DATA_DIR
  return WIGCSS_DATA_DIR;
#else
  return "data";
#endif
}

/// Loads a code by bundled name (steane, golay, rm15) or by file path; validates it.
inline CssCode load_code(const std::string& name_or_path) {
  std::filesystem::path p = name_or_path;
  if (!std::filesystem::exists(p)) p = std::filesystem::path(default_data_dir()) / (name_or_path + ".code");
  std::ifstream f(p);
  require(f.good(), "cannot open code '" + name_or_path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  CssCode c;
  try {
    c = parse_code(ss.str());
  } catch (const Error& e) {
    throw Error(p.string() + ": " + e.what());
  }
  require_valid(c);
  return c;
}

// ---------------------------------------------------------------------------
// Gates

struct Gate {
  enum Kind { CNOT, X, Z, H, S } kind = X;
  int a = 0;  // control, or the single target
  int b = -1; // CNOT target

  static Gate cnot(int c, int t) { return {CNOT, c, t}; }
  static Gate x(int q) { return {X, q, -1}; }
  static Gate z(int q) { return {Z, q, -1}; }
  static Gate h(int q) { return {H, q, -1}; }
  static Gate s(int q) { return {S, q, -1}; }
  bool in_css_group() const { return kind == CNOT || kind == X || kind == Z; }
  bool operator==(const Gate&) const = default;
};

/// G P G†.
inline PauliTerm conjugate(PauliTerm p, const Gate& g) {
  int n = p.n;
  std::uint64_t ba = qubit_bit(n, g.a);
  switch (g.kind) {
    case Gate::CNOT: {
      std::uint64_t bt = qubit_bit(n, g.b);
      if (p.x & ba) p.x ^= bt;
      if (p.z & bt) p.z ^= ba;
      break;
    }
    case Gate::X:
      if (p.z & ba) p.phase = (p.phase + 2) & 3;
      break;
    case Gate::Z:
      if (p.x & ba) p.phase = (p.phase + 2) & 3;
      break;
    case Gate::H: {
      bool bx = p.x & ba, bz = p.z & ba;
      if (bx && bz) p.phase = (p.phase + 2) & 3;
      p.x = (p.x & ~ba) | (bz ? ba : 0);
      p.z = (p.z & ~ba) | (bx ? ba : 0);
      break;
    }
    case Gate::S:
      if (p.x & ba) {
        p.z ^= ba;
        p.phase = (p.phase + 3) & 3;
      }
      break;
  }
  return p;
}

/// Applies a gate to every column of a 2^n-row matrix.
inline void apply_gate(CMatrix& m, int n, const Gate& g) {
  std::size_t d = dim_of(n);
  std::uint64_t ba = qubit_bit(n, g.a);
  switch (g.kind) {
    case Gate::CNOT: {
      std::uint64_t bt = qubit_bit(n, g.b);
      for (std::size_t i = 0; i < d; ++i)
        if ((i & ba) && !(i & bt)) m.row(i).swap(m.row(i | bt));
      break;
    }
    case Gate::X:
      for (std::size_t i = 0; i < d; ++i)
        if (!(i & ba)) m.row(i).swap(m.row(i | ba));
      break;
    case Gate::Z:
      for (std::size_t i = 0; i < d; ++i)
        if (i & ba) m.row(i) *= -1.0;
      break;
    case Gate::H: {
      const double r = 1.0 / std::sqrt(2.0);
      for (std::size_t i = 0; i < d; ++i)
        if (!(i & ba)) {
          Eigen::RowVectorXcd u = m.row(i), v = m.row(i | ba);
          m.row(i) = r * (u + v);
          m.row(i | ba) = r * (u - v);
        }
      break;
    }
    case Gate::S:
      for (std::size_t i = 0; i < d; ++i)
        if (i & ba) m.row(i) *= cplx(0, 1);
      break;
  }
}

/// Unitary of a gate sequence applied in order (first gate acts first).
inline CMatrix circuit_unitary(int n, const std::vector<Gate>& gates) {
  require(n <= kMaxDenseQubits, "dense circuit unitary limited to 10 qubits");
  CMatrix u = CMatrix::Identity(dim_of(n), dim_of(n));
  for (const auto& g : gates) apply_gate(u, n, g);
  return u;
}

// ---------------------------------------------------------------------------
// Encoder synthesis

struct LogicalFrame {
  std::vector<PauliTerm> x_logicals;
  std::vector<PauliTerm> z_logicals;

  /// U σ U† for the Hermitian k-qubit Pauli σ with masks (x, z) on the logical register.
  PauliTerm logical(std::uint64_t x, std::uint64_t z) const {
    int k = static_cast<int>(x_logicals.size());
    PauliTerm out = PauliTerm::identity(x_logicals.empty() ? 0 : x_logicals[0].n);
    for (int j = 0; j < k; ++j)
      if (has_qubit(z, k, j)) out = out * z_logicals[j];
    for (int j = 0; j < k; ++j)
      if (has_qubit(x, k, j)) out = out * x_logicals[j];
    out.phase = (out.phase + 4 - popcount(x & z) % 4) & 3;
    return out;
  }
};

struct Encoder {
  int n = 0;
  int k = 0;
  std::vector<Gate> gates;  // U, applied in order to |s> ⊗ ancillas
  LogicalFrame frame;
  std::vector<char> ancilla;  // per generator i, the type of the single-qubit target on qubit k+i

  std::vector<Gate> decoder() const { return {gates.rbegin(), gates.rend()}; }
};

/// Finds U over {CNOT, X, Z} with U† S_i U = Z_{k+i} or X_{k+i} (by generator type, sign +).
inline Encoder synth_encoder(const CssCode& code) {
  require_valid(code);
  const int n = code.n, k = code.k;
  std::vector<PauliTerm> g = code.terms();
  std::vector<Gate> cons;
  auto apply = [&](const Gate& gt) {
    cons.push_back(gt);
    for (auto& p : g) p = conjugate(p, gt);
  };
  auto swap_q = [&](int a, int b) {
    if (a == b) return;
    apply(Gate::cnot(a, b));
    apply(Gate::cnot(b, a));
    apply(Gate::cnot(a, b));
  };
  std::vector<std::size_t> zi, xi;
  for (std::size_t i = 0; i < code.generators.size(); ++i)
    (code.generators[i].type == 'Z' ? zi : xi).push_back(i);

  std::vector<int> pos(g.size(), -1);
  std::vector<bool> used(n, false);
  // pivot on the generator's own target qubit when free, so simple codes need no swaps
  auto pivot = [&](std::size_t gi, std::uint64_t support) {
    int want = k + static_cast<int>(gi);
    if (has_qubit(support, n, want) && !used[want]) return want;
    for (int q = 0; q < n; ++q)
      if (has_qubit(support, n, q) && !used[q]) return q;
    throw Error("generators are dependent");
  };
  for (std::size_t gi : zi) {
    int q = pivot(gi, g[gi].z);
    for (int t = 0; t < n; ++t)
      if (t != q && has_qubit(g[gi].z, n, t)) apply(Gate::cnot(t, q));
    used[q] = true;
    pos[gi] = q;
  }
  for (std::size_t gi : xi) {
    int q = pivot(gi, g[gi].x);
    for (int t = 0; t < n; ++t)
      if (t != q && has_qubit(g[gi].x, n, t)) apply(Gate::cnot(q, t));
    used[q] = true;
    pos[gi] = q;
  }
  for (std::size_t gi = 0; gi < g.size(); ++gi)
    if (g[gi].phase == 2) apply(code.generators[gi].type == 'Z' ? Gate::x(pos[gi]) : Gate::z(pos[gi]));

  std::vector<int> occupant(n, -1);
  for (std::size_t gi = 0; gi < g.size(); ++gi) occupant[pos[gi]] = static_cast<int>(gi);
  for (std::size_t gi = 0; gi < g.size(); ++gi) {
    int want = k + static_cast<int>(gi), have = pos[gi];
    if (want == have) continue;
    int other = occupant[want];
    swap_q(have, want);
    occupant[want] = static_cast<int>(gi);
    pos[gi] = want;
    occupant[have] = other;
    if (other >= 0) pos[other] = have;
  }

  Encoder enc;
  enc.n = n;
  enc.k = k;
  for (std::size_t gi = 0; gi < g.size(); ++gi) {
    char t = code.generators[gi].type;
    std::uint64_t b = qubit_bit(n, k + static_cast<int>(gi));
    PauliTerm want = t == 'Z' ? PauliTerm::z_type(n, b) : PauliTerm::x_type(n, b);
    require(g[gi] == want, "encoder synthesis failed to isolate generator " + std::to_string(gi));
    enc.ancilla.push_back(t);
  }
  enc.gates.assign(cons.rbegin(), cons.rend());
  for (int j = 0; j < k; ++j) {
    PauliTerm xl = PauliTerm::x_type(n, qubit_bit(n, j)), zl = PauliTerm::z_type(n, qubit_bit(n, j));
    for (const auto& gt : enc.gates) {
      xl = conjugate(xl, gt);
      zl = conjugate(zl, gt);
    }
    enc.frame.x_logicals.push_back(xl);
    enc.frame.z_logicals.push_back(zl);
  }
  return enc;
}

/// Conjugates every generator through U† (symbolically) and reports whether each lands on its target.
inline bool verify_encoder_symbolic(const CssCode& code, const Encoder& enc) {
  auto dec = enc.decoder();
  for (std::size_t gi = 0; gi < code.generators.size(); ++gi) {
    PauliTerm p = code.term(gi);
    for (const auto& gt : dec) p = conjugate(p, gt);
    std::uint64_t b = qubit_bit(code.n, code.k + static_cast<int>(gi));
    PauliTerm want = code.generators[gi].type == 'Z' ? PauliTerm::z_type(code.n, b) : PauliTerm::x_type(code.n, b);
    if (!(p == want)) return false;
  }
  return true;
}

inline CMatrix codespace_projector(const CssCode& code) {
  require(code.n <= kMaxDenseQubits, "dense projector limited to 10 qubits; use stabilizer sums");
  std::size_t d = dim_of(code.n);
  CMatrix p = CMatrix::Identity(d, d);
  CMatrix id = CMatrix::Identity(d, d);
  for (const auto& t : code.terms()) p = p * (0.5 * (id + t.matrix()));
  return p;
}

/// U(|logical> ⊗ ancillas) with ancillas |0> (Z-type) or |+> (X-type).
inline CVector encode_state(const Encoder& enc, const CVector& logical) {
  require(logical.size() == static_cast<Eigen::Index>(dim_of(enc.k)), "logical state dimension mismatch");
  CMatrix v = logical;
  CVector zero(2), plus(2);
  zero << 1, 0;
  plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  for (char t : enc.ancilla) v = kron(v, t == 'Z' ? zero : plus);
  for (const auto& g : enc.gates) apply_gate(v, enc.n, g);
  return v.col(0);
}

// ---------------------------------------------------------------------------
// CSS states

/// Span of the given rows as a bitset over F_2^n (n <= 6).
inline std::uint64_t span_set(const std::vector<std::uint64_t>& rows) {
  std::uint64_t set = 1;  // contains 0
  for (auto r : rows) {
    std::uint64_t add = 0;
    for (int v = 0; v < 64; ++v)
      if (set >> v & 1) add |= std::uint64_t{1} << (v ^ static_cast<int>(r));
    set |= add;
  }
  return set;
}

/// State from commuting, independent Hermitian stabilizer generators (n of them).
inline CMatrix stabilizer_state(const std::vector<PauliTerm>& gens, int n) {
  std::size_t d = dim_of(n);
  CMatrix id = CMatrix::Identity(d, d), p = id;
  for (const auto& g : gens) p = p * (0.5 * (id + g.matrix()));
  return p;
}

/// All pure n-qubit CSS states (n <= 3), as density matrices.
inline std::vector<CMatrix> enumerate_css_states(int n) {
  require(n >= 1 && n <= 3, "CSS state enumeration supports 1 to 3 qubits");
  const int N = 1 << n;
  std::set<std::uint64_t> seen;
  std::vector<CMatrix> out;
  for (std::uint64_t subset = 0; subset < (std::uint64_t{1} << (N - 1)); ++subset) {
    std::vector<std::uint64_t> cand;
    for (int v = 1; v < N; ++v)
      if (subset >> (v - 1) & 1) cand.push_back(static_cast<std::uint64_t>(v));
    if (static_cast<int>(cand.size()) > n || gf2_rank(cand) != static_cast<int>(cand.size())) continue;
    std::uint64_t zspan = span_set(cand);
    if (!seen.insert(zspan).second) continue;
    std::vector<std::uint64_t> zb = cand, xb;
    for (int v = 1; v < N; ++v) {
      bool orth = true;
      for (auto z : zb) orth &= parity(z & static_cast<std::uint64_t>(v)) == 0;
      if (!orth) continue;
      auto trial = xb;
      trial.push_back(static_cast<std::uint64_t>(v));
      if (gf2_rank(trial) == static_cast<int>(trial.size())) xb = trial;
    }
    for (std::uint64_t signs = 0; signs < (std::uint64_t{1} << n); ++signs) {
      std::vector<PauliTerm> gens;
      int i = 0;
      for (auto z : zb) gens.push_back(PauliTerm::z_type(n, z, signs >> i++ & 1));
      for (auto x : xb) gens.push_back(PauliTerm::x_type(n, x, signs >> i++ & 1));
      out.push_back(stabilizer_state(gens, n));
    }
  }
  return out;
}

struct StabilizerState {
  CMatrix rho;
  bool css = false;
};

/// All pure n-qubit stabilizer states (n <= 2), flagged CSS when the group is generated by X-type and Z-type elements.
inline std::vector<StabilizerState> enumerate_stabilizer_states(int n) {
  require(n >= 1 && n <= 2, "stabilizer state enumeration supports 1 or 2 qubits");
  const int N = 1 << (2 * n);
  std::set<std::vector<int>> seen;
  std::vector<StabilizerState> out;
  auto pauli_of = [&](int v) { return PauliTerm::hermitian(n, static_cast<std::uint64_t>(v) >> n, static_cast<std::uint64_t>(v) & low_mask(n)); };
  std::vector<int> pick(n, 1);
  std::function<void(int, int)> rec = [&](int depth, int start) {
    if (depth == n) {
      std::vector<std::uint64_t> rows;
      for (int v : pick) rows.push_back(static_cast<std::uint64_t>(v));
      if (gf2_rank(rows) != n) return;
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          if (!pauli_of(pick[a]).commutes_with(pauli_of(pick[b]))) return;
      std::uint64_t span = span_set(rows);
      std::vector<int> elems;
      for (int v = 0; v < N; ++v)
        if (span >> v & 1) elems.push_back(v);
      if (!seen.insert(elems).second) return;
      int xtype = 0, ztype = 0;
      for (int v : elems) {
        if ((v & static_cast<int>(low_mask(n))) == 0) ++xtype;
        if ((v >> n) == 0) ++ztype;
      }
      bool css = xtype * ztype == (1 << n);
      for (int signs = 0; signs < (1 << n); ++signs) {
        std::vector<PauliTerm> gens;
        for (int i = 0; i < n; ++i) {
          PauliTerm p = pauli_of(pick[i]);
          gens.push_back(signs >> i & 1 ? p.negated() : p);
        }
        out.push_back({stabilizer_state(gens, n), css});
      }
      return;
    }
    for (int v = start; v < N; ++v) {
      pick[depth] = v;
      rec(depth + 1, v + 1);
    }
  };
  rec(0, 1);
  return out;
}

/// Real vectorization of a Hermitian matrix (diagonal, then Re/Im of the strict upper triangle).
inline RVector hermitian_coordinates(const CMatrix& m) {
  Eigen::Index d = m.rows();
  RVector v(d * d);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < d; ++i) v(c++) = m(i, i).real();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      v(c++) = m(i, j).real();
      v(c++) = m(i, j).imag();
    }
  return v;
}

/// Distance-to-hull residual of ρ against the pure CSS states (0 iff ρ is CSS).
inline double css_hull_residual(const CMatrix& rho) {
  int n = qubits_of_dim(rho.rows());
  require(n >= 1 && n <= 3, "is_css_state supports 1 to 3 qubits");
  auto verts = enumerate_css_states(n);
  Eigen::Index d2 = rho.rows() * rho.rows();
  RMatrix A(d2 + 1, static_cast<Eigen::Index>(verts.size()));
  for (std::size_t i = 0; i < verts.size(); ++i) {
    A.col(static_cast<Eigen::Index>(i)).head(d2) = hermitian_coordinates(verts[i]);
    A(d2, static_cast<Eigen::Index>(i)) = 1.0;
  }
  RVector b(d2 + 1);
  b.head(d2) = hermitian_coordinates(rho);
  b(d2) = 1.0;
  return nnls(A, b).residual;
}

inline bool is_css_state(const CMatrix& rho, double tol = 1e-7) { return css_hull_residual(rho) <= tol; }

// ---------------------------------------------------------------------------
// Code projection

/// E(ρ) = K(ρ)⊗|0><0| + tr[P̄ρ] σ⊗|1><1|, K(ρ) = tr_{k+1..n}[U†PρPU]; output register (logical, flag).
inline Channel tp_code_projection(const CssCode& code, const Encoder& enc, const CMatrix& sigma) {
  const int n = code.n, k = code.k;
  require(n + k + 1 <= kMaxDenseQubits + 2, "code too large for a dense projection channel");
  require(sigma.rows() == static_cast<Eigen::Index>(dim_of(k)), "failure state must act on k qubits");
  validate_density(sigma);
  if (k >= 1 && k <= 3) require(is_css_state(sigma), "failure state is not CSS");
  std::size_t d = dim_of(n), dk = dim_of(k), da = dim_of(n - k);
  CMatrix proj = codespace_projector(code);
  CMatrix vp = proj;
  for (const auto& g : enc.decoder()) apply_gate(vp, n, g);
  std::vector<CMatrix> ks;
  for (std::size_t s = 0; s < da; ++s) {
    CMatrix kr = CMatrix::Zero(2 * dk, d);
    for (std::size_t a = 0; a < dk; ++a) kr.row(a << 1) = vp.row((a << (n - k)) | s);
    ks.push_back(std::move(kr));
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sigma);
  CMatrix pbar = CMatrix::Identity(d, d) - proj;
  for (Eigen::Index t = 0; t < es.eigenvalues().size(); ++t) {
    double lam = es.eigenvalues()(t);
    if (lam <= 1e-14) continue;
    for (std::size_t i = 0; i < d; ++i) {
      if (pbar.row(i).cwiseAbs().maxCoeff() < 1e-15) continue;
      CMatrix kr = CMatrix::Zero(2 * dk, d);
      for (std::size_t a = 0; a < dk; ++a) kr.row((a << 1) | 1) = std::sqrt(lam) * es.eigenvectors()(a, t) * pbar.row(i);
      ks.push_back(std::move(kr));
    }
  }
  return Channel::from_kraus(n, k + 1, std::move(ks));
}

/// p ρ′⊗|0><0| + (1-p) σ⊗|1><1|.
inline CMatrix flagged_output(double p, const CMatrix& rho_out, const CMatrix& sigma) {
  require(rho_out.rows() == sigma.rows(), "failure state must act on the k output qubits");
  CMatrix f0 = CMatrix::Zero(2, 2), f1 = CMatrix::Zero(2, 2);
  f0(0, 0) = 1;
  f1(1, 1) = 1;
  return p * kron(rho_out, f0) + (1 - p) * kron(sigma, f1);
}

struct ProtocolOutcome {
  double p = 0;
  CMatrix output;          // decoded k-qubit state ρ′
  double fidelity = 0;     // <ψ^{⊗k}|ρ′|ψ^{⊗k}>
  double trace_error = 0;  // ||ρ′ - ψ^{⊗k}||_1
};

inline void attach_target(ProtocolOutcome& o, const CVector& psi) {
  int k = qubits_of_dim(o.output.rows());
  CMatrix t = kron_power(projector(psi), k);
  CVector tk = CVector::Ones(1);
  for (int i = 0; i < k; ++i) {
    CMatrix next = kron(tk, psi);
    tk = next.col(0);
  }
  o.fidelity = fidelity_with_pure(o.output, tk);
  o.trace_error = trace_norm(o.output - t);
}

/// Stabilizer-sum simulation: p = 2^{-(n-k)} Σ_S tr[S ρ^{⊗n}], ρ′ from tr[L P ρ^{⊗n}]/p.
inline ProtocolOutcome simulate_projection(const CssCode& code, const CMatrix& rho, const LogicalFrame& frame) {
  require_valid(code);
  require(rho.rows() == 2 && rho.cols() == 2, "input must be a single-qubit state");
  validate_density(rho);
  const int n = code.n, k = code.k;
  require(k >= 1 && k <= 2, "output reconstruction supports k = 1 or 2");
  require(static_cast<int>(frame.x_logicals.size()) == k, "logical frame does not match code");

  // t[z][x] = tr[Z^z X^x ρ]
  cplx t01 = (pauli_x() * rho).trace(), t10 = (pauli_z() * rho).trace(), t11 = (pauli_z() * pauli_x() * rho).trace();
  std::vector<cplx> p01(n + 1), p10(n + 1), p11(n + 1);
  p01[0] = p10[0] = p11[0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    p01[i] = p01[i - 1] * t01;
    p10[i] = p10[i - 1] * t10;
    p11[i] = p11[i - 1] * t11;
  }
  auto trace_of = [&](std::uint64_t x, std::uint64_t z) {
    return p01[popcount(x & ~z)] * p10[popcount(z & ~x)] * p11[popcount(x & z)];
  };

  std::vector<Generator> xg, zg;
  for (const auto& g : code.generators) (g.type == 'X' ? xg : zg).push_back(g);
  const int nl = 1 << (2 * k);
  std::vector<PauliTerm> logicals;
  for (int v = 0; v < nl; ++v) logicals.push_back(frame.logical(static_cast<std::uint64_t>(v) >> k, static_cast<std::uint64_t>(v) & low_mask(k)));
  std::vector<cplx> sums(nl, 0.0);

  // Gray-code walks over X-type and Z-type subsets.
  std::uint64_t a = 0;
  int sa = 0;
  for (std::uint64_t ia = 0; ia < (std::uint64_t{1} << xg.size()); ++ia) {
    if (ia) {
      int bit = std::countr_zero(ia);
      a ^= xg[bit].support;
      sa ^= xg[bit].negative;
    }
    std::uint64_t b = 0;
    int sb = 0;
    for (std::uint64_t ib = 0; ib < (std::uint64_t{1} << zg.size()); ++ib) {
      if (ib) {
        int bit = std::countr_zero(ib);
        b ^= zg[bit].support;
        sb ^= zg[bit].negative;
      }
      // S = ± X(a) Z(b) = ± (-1)^{a·b} Z(b) X(a)
      int s = sa ^ sb ^ parity(a & b);
      for (int l = 0; l < nl; ++l) {
        const PauliTerm& L = logicals[l];
        int sl = s ^ parity(L.x & b);
        cplx v = trace_of(L.x ^ a, L.z ^ b);
        sums[l] += sl ? -v : v;
      }
    }
  }
  const double norm = std::ldexp(1.0, -(n - k));
  ProtocolOutcome o;
  o.p = (sums[0] * logicals[0].coefficient()).real() * norm;
  require(o.p > 0, "acceptance probability is zero");
  std::size_t dk = dim_of(k);
  o.output = CMatrix::Zero(dk, dk);
  for (int l = 0; l < nl; ++l) {
    std::uint64_t x = static_cast<std::uint64_t>(l) >> k, z = static_cast<std::uint64_t>(l) & low_mask(k);
    cplx expect = logicals[l].coefficient() * sums[l] * norm / o.p;
    o.output += expect * PauliTerm::hermitian(k, x, z).matrix();
  }
  o.output /= static_cast<double>(dk);
  return o;
}

inline ProtocolOutcome simulate_projection(const CssCode& code, const CMatrix& rho, const LogicalFrame& frame, const CVector& target) {
  auto o = simulate_projection(code, rho, frame);
  attach_target(o, target);
  return o;
}

/// Dense reference: ρ′ = tr_{k+1..n}[U† P ρ^{⊗n} P U]/p.
inline ProtocolOutcome simulate_projection_dense(const CssCode& code, const Encoder& enc, const CMatrix& rho) {
  require(code.n <= kMaxDenseQubits, "dense simulation limited to 10 qubits");
  const int n = code.n, k = code.k;
  CMatrix proj = codespace_projector(code);
  CMatrix m = proj * kron_power(rho, n) * proj;
  ProtocolOutcome o;
  o.p = m.trace().real();
  for (const auto& g : enc.decoder()) apply_gate(m, n, g);
  CMatrix mt = m.adjoint();
  for (const auto& g : enc.decoder()) apply_gate(mt, n, g);
  m = mt.adjoint();
  o.output = partial_trace(m, n, low_mask(n - k)) / o.p;
  return o;
}

// ---------------------------------------------------------------------------
// CSS circuits

struct CssCircuit;

struct PrepareStep {
  CssCode state;  // k = 0 stabilizer description of a pure CSS state on fresh qubits (appended last)
};
struct GateStep {
  Gate gate;
};
struct MeasureStep {
  PauliTerm observable;
  std::vector<CssCircuit> branches;  // optional continuations for outcome +1 and -1
};
struct ProjectStep {
  PauliTerm observable;
  int outcome = +1;
};
struct DiscardStep {
  std::vector<int> qubits;
};
struct MixStep {
  std::vector<double> weights;
  std::vector<CssCircuit> branches;
};

using CircuitStep = std::variant<PrepareStep, GateStep, MeasureStep, ProjectStep, DiscardStep, MixStep>;

struct CssCircuit {
  int n_in = 0;
  std::vector<CircuitStep> steps;
};

inline CssCode basis_state_code(char label) {
  switch (label) {
    case '0': return {1, 0, "|0>", {{'Z', 1, false}}};
    case '1': return {1, 0, "|1>", {{'Z', 1, true}}};
    case '+': return {1, 0, "|+>", {{'X', 1, false}}};
    case '-': return {1, 0, "|->", {{'X', 1, true}}};
  }
  throw Error(std::string("unknown basis state label ") + label);
}

inline CVector css_state_vector(const CssCode& state) {
  require(state.k == 0, "a CSS state description needs k = 0");
  require_valid(state);
  CMatrix rho = stabilizer_state(state.terms(), state.n);
  Eigen::Index best = 0;
  rho.colwise().norm().maxCoeff(&best);
  CVector v = rho.col(best);
  return v / v.norm();
}

namespace detail {

inline std::vector<CMatrix> compress_kraus(const std::vector<CMatrix>& ks) {
  if (ks.empty()) return ks;
  Eigen::Index rows = ks[0].rows(), cols = ks[0].cols();
  if (static_cast<Eigen::Index>(ks.size()) <= rows * cols) return ks;
  Eigen::Index D = rows * cols;
  CMatrix j = CMatrix::Zero(D, D);
  for (const auto& k : ks) {
    Eigen::Map<const CVector> v(k.data(), D);
    j.noalias() += v * v.adjoint();
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(j);
  std::vector<CMatrix> out;
  for (Eigen::Index e = 0; e < D; ++e) {
    double lam = es.eigenvalues()(e);
    if (lam <= 1e-14) continue;
    CVector v = std::sqrt(lam) * es.eigenvectors().col(e);
    out.push_back(Eigen::Map<CMatrix>(v.data(), rows, cols));
  }
  return out;
}

inline CMatrix pauli_projector(const PauliTerm& obs, int sign) {
  std::size_t d = dim_of(obs.n);
  return 0.5 * (CMatrix::Identity(d, d) + static_cast<double>(sign) * obs.matrix());
}

inline void check_observable(const PauliTerm& obs, int live) {
  require(obs.n == live, "observable acts on " + std::to_string(obs.n) + " qubits, register has " + std::to_string(live));
  require(obs.is_hermitian() && obs.weight() > 0, "observable must be a nontrivial Hermitian Pauli");
  require(obs.is_x_type() || obs.is_z_type(), "non-CSS observable " + obs.label() + " in a projection step");
}

inline void run_steps(const std::vector<CircuitStep>& steps, std::vector<CMatrix>& ks, int& live, bool allow_non_css);

inline void run_circuit(const CssCircuit& c, std::vector<CMatrix>& ks, int& live, bool allow_non_css) {
  require(c.n_in == live, "sub-circuit input size does not match the live register");
  run_steps(c.steps, ks, live, allow_non_css);
}

inline void run_steps(const std::vector<CircuitStep>& steps, std::vector<CMatrix>& ks, int& live, bool allow_non_css) {
  for (const auto& step : steps) {
    if (auto* s = std::get_if<PrepareStep>(&step)) {
      require(live + s->state.n <= kMaxDenseQubits, "live register exceeds 10 qubits");
      CMatrix psi = css_state_vector(s->state);
      for (auto& k : ks) k = kron(k, psi);
      live += s->state.n;
    } else if (auto* s = std::get_if<GateStep>(&step)) {
      const Gate& g = s->gate;
      require(allow_non_css || g.in_css_group(), "gate outside the CSS-preserving group");
      require(g.a >= 0 && g.a < live && (g.kind != Gate::CNOT || (g.b >= 0 && g.b < live && g.b != g.a)),
              "gate qubit index out of range");
      for (auto& k : ks) apply_gate(k, live, g);
    } else if (auto* s = std::get_if<MeasureStep>(&step)) {
      check_observable(s->observable, live);
      require(s->branches.empty() || s->branches.size() == 2, "measurement needs zero or two branches");
      std::vector<CMatrix> out;
      int out_live = -1;
      for (int b = 0; b < 2; ++b) {
        CMatrix proj = pauli_projector(s->observable, b == 0 ? +1 : -1);
        std::vector<CMatrix> branch;
        for (const auto& k : ks) branch.push_back(proj * k);
        int bl = live;
        if (!s->branches.empty()) run_circuit(s->branches[b], branch, bl, allow_non_css);
        require(out_live < 0 || out_live == bl, "measurement branches end on different register sizes");
        out_live = bl;
        out.insert(out.end(), branch.begin(), branch.end());
      }
      ks = std::move(out);
      live = out_live;
    } else if (auto* s = std::get_if<ProjectStep>(&step)) {
      check_observable(s->observable, live);
      require(s->outcome == 1 || s->outcome == -1, "projection outcome must be +1 or -1");
      CMatrix proj = pauli_projector(s->observable, s->outcome);
      for (auto& k : ks) k = proj * k;
    } else if (auto* s = std::get_if<DiscardStep>(&step)) {
      std::uint64_t mask = 0;
      for (int q : s->qubits) {
        require(q >= 0 && q < live, "discarded qubit out of range");
        mask |= qubit_bit(live, q);
      }
      int nd = popcount(mask), kept = live - nd;
      require(kept >= 0, "cannot discard more qubits than are live");
      std::vector<int> keep_q, drop_q;
      for (int q = 0; q < live; ++q) (has_qubit(mask, live, q) ? drop_q : keep_q).push_back(q);
      std::vector<CMatrix> out;
      for (const auto& k : ks)
        for (std::size_t t = 0; t < dim_of(nd); ++t) {
          CMatrix r(dim_of(kept), k.cols());
          for (std::size_t a = 0; a < dim_of(kept); ++a) {
            std::uint64_t idx = 0;
            for (int i = 0; i < kept; ++i)
              if ((a >> (kept - 1 - i)) & 1) idx |= qubit_bit(live, keep_q[i]);
            for (int i = 0; i < nd; ++i)
              if ((t >> (nd - 1 - i)) & 1) idx |= qubit_bit(live, drop_q[i]);
            r.row(a) = k.row(idx);
          }
          out.push_back(std::move(r));
        }
      ks = std::move(out);
      live = kept;
    } else if (auto* s = std::get_if<MixStep>(&step)) {
      require(!s->branches.empty() && s->weights.size() == s->branches.size(), "mixture needs one weight per branch");
      double total = 0;
      for (double w : s->weights) {
        require(w >= 0, "mixture weights must be nonnegative");
        total += w;
      }
      require(std::abs(total - 1.0) <= kTol, "mixture weights must sum to 1");
      std::vector<CMatrix> out;
      int out_live = -1;
      for (std::size_t b = 0; b < s->branches.size(); ++b) {
        if (s->weights[b] == 0) continue;
        std::vector<CMatrix> branch;
        for (const auto& k : ks) branch.push_back(std::sqrt(s->weights[b]) * k);
        int bl = live;
        run_circuit(s->branches[b], branch, bl, allow_non_css);
        require(out_live < 0 || out_live == bl, "mixture branches end on different register sizes");
        out_live = bl;
        out.insert(out.end(), branch.begin(), branch.end());
      }
      ks = std::move(out);
      live = out_live;
    }
    ks = compress_kraus(ks);
  }
}

}  // namespace detail

/// Composes the circuit into a single channel; rejects non-CSS gates and observables unless allowed.
inline Channel circuit_to_channel(const CssCircuit& c, bool allow_non_css = false) {
  require(c.n_in >= 1 && c.n_in <= kMaxDenseQubits, "circuit input size must lie in [1, 10]");
  std::vector<CMatrix> ks{CMatrix::Identity(dim_of(c.n_in), dim_of(c.n_in))};
  int live = c.n_in;
  detail::run_steps(c.steps, ks, live, allow_non_css);
  require(live >= 1, "circuit discards every qubit");
  return Channel::from_kraus(c.n_in, live, std::move(ks));
}

/// Random trace-preserving CSS circuit on n_in qubits (live register kept within [1, max_live]).
inline CssCircuit random_css_circuit(int n_in, std::mt19937_64& rng, int n_steps = 8, int max_live = 4) {
  std::uniform_int_distribution<int> coin(0, 99);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto random_gate = [&](int live) {
    int kind = uni(0, live > 1 ? 2 : 1);
    if (kind == 2) {
      int c = uni(0, live - 1), t = uni(0, live - 2);
      if (t >= c) ++t;
      return Gate::cnot(c, t);
    }
    int q = uni(0, live - 1);
    return kind == 0 ? Gate::x(q) : Gate::z(q);
  };
  auto random_observable = [&](int live) {
    std::uint64_t s = 0;
    while (s == 0) s = static_cast<std::uint64_t>(uni(0, (1 << live) - 1));
    bool neg = coin(rng) < 50;
    return coin(rng) < 50 ? PauliTerm::x_type(live, s, neg) : PauliTerm::z_type(live, s, neg);
  };
  auto gate_block = [&](int live, int len) {
    CssCircuit b{live, {}};
    for (int i = 0; i < len; ++i) b.steps.push_back(GateStep{random_gate(live)});
    return b;
  };
  CssCircuit c{n_in, {}};
  int live = n_in;
  for (int s = 0; s < n_steps; ++s) {
    int r = coin(rng);
    if (r < 40) {
      c.steps.push_back(GateStep{random_gate(live)});
    } else if (r < 55) {
      MeasureStep m{random_observable(live), {}};
      if (coin(rng) < 60) {
        m.branches.push_back(gate_block(live, uni(0, 2)));
        m.branches.push_back(gate_block(live, uni(0, 2)));
      }
      c.steps.push_back(std::move(m));
    } else if (r < 70 && live < max_live) {
      const char labels[] = {'0', '1', '+', '-'};
      c.steps.push_back(PrepareStep{basis_state_code(labels[uni(0, 3)])});
      ++live;
    } else if (r < 85 && live > 1) {
      c.steps.push_back(DiscardStep{{uni(0, live - 1)}});
      --live;
    } else {
      double w = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      c.steps.push_back(MixStep{{w, 1.0 - w}, {gate_block(live, uni(1, 3)), gate_block(live, uni(1, 3))}});
    }
  }
  return c;
}

}  // namespace wigcss
