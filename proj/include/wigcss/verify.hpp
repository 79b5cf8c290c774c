#pragma once

#include "wigcss/bounds.hpp"
#include "wigcss/css.hpp"

#include <chrono>
#include <functional>

namespace wigcss {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

namespace detail {

inline CheckResult run_check(const std::string& suite, const std::string& name, const std::function<std::string(bool&)>& body) {
  CheckResult r{suite, name};
  auto t0 = std::chrono::steady_clock::now();
  try {
    r.detail = body(r.passed);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace detail

inline std::vector<CheckResult> verify_phase_space(std::uint64_t seed) {
  const std::string S = "phase-space";
  std::vector<CheckResult> out;
  out.push_back(detail::run_check(S, "single-qubit phase-point operators", [](bool& ok) {
    CMatrix iy = cplx(0, 1) * pauli_y(), id = CMatrix::Identity(2, 2), X = pauli_x(), Z = pauli_z();
    CMatrix ref[4] = {0.5 * (id + X + Z + iy), 0.5 * (id - X + Z - iy), 0.5 * (id + X - Z - iy), 0.5 * (id - X - Z + iy)};
    double err = 0;
    for (int x = 0; x < 2; ++x)
      for (int z = 0; z < 2; ++z) err = std::max(err, (single_phase_point_operator(x, z) - ref[2 * x + z]).cwiseAbs().maxCoeff());
    ok = err <= 1e-12;
    return "max deviation " + detail::sci(err);
  }));
  out.push_back(detail::run_check(S, "phase-point algebra (n <= 2)", [](bool& ok) {
    double err = 0;
    for (int n = 1; n <= 2; ++n) {
      std::size_t N = std::size_t{1} << (2 * n), d = dim_of(n);
      CMatrix sum = CMatrix::Zero(d, d);
      for (std::size_t i = 0; i < N; ++i) {
        PhasePoint u = PhasePoint::from_index(n, i);
        CMatrix a = phase_point_operator(u);
        sum += a;
        err = std::max(err, std::abs(a.trace() - 1.0));
        for (std::size_t j = 0; j < N; ++j) {
          PhasePoint v = PhasePoint::from_index(n, j);
          double expect = i == j ? static_cast<double>(d) : 0.0;
          err = std::max(err, std::abs((a.adjoint() * phase_point_operator(v)).trace() - expect));
          CMatrix D = displacement(v).matrix();
          err = std::max(err, (D * a * D.adjoint() - phase_point_operator(u + v)).cwiseAbs().maxCoeff());
        }
      }
      err = std::max(err, (sum - static_cast<double>(d) * CMatrix::Identity(d, d)).cwiseAbs().maxCoeff());
    }
    ok = err <= 1e-12;
    return "max deviation " + detail::sci(err);
  }));
  out.push_back(detail::run_check(S, "Wigner round trip", [seed](bool& ok) {
    std::mt19937_64 rng(seed);
    double err = 0;
    for (int n = 1; n <= 3; ++n) {
      CMatrix rho = random_density(n, rng);
      QuasiDist w = wigner_of_state(rho);
      err = std::max({err, (state_of_wigner(w) - rho).cwiseAbs().maxCoeff(), std::abs(w.sum() - 1.0)});
    }
    ok = err <= 1e-12;
    return "max deviation " + detail::sci(err);
  }));
  out.push_back(detail::run_check(S, "rebit Hudson property", [](bool& ok) {
    int bad = 0, total = 0;
    for (int n = 1; n <= 2; ++n)
      for (const auto& s : enumerate_stabilizer_states(n)) {
        ++total;
        QuasiDist w = wigner_transform(s.rho);
        bool nonneg = w.is_real(1e-12) && w.min_real() >= -1e-12;
        bad += nonneg != s.css;
      }
    ok = bad == 0;
    return std::to_string(total) + " stabilizer states, " + std::to_string(bad) + " mismatches";
  }));
  out.push_back(detail::run_check(S, "CSS circuits are stochastic", [seed](bool& ok) {
    std::mt19937_64 rng(seed + 1);
    double worst = 0;
    for (int i = 0; i < 10; ++i) {
      auto rep = is_stochastic(wigner_of_channel(circuit_to_channel(random_css_circuit(2 + i % 2, rng))));
      worst = std::min(worst, rep.min_entry);
    }
    double hmin = is_stochastic(wigner_of_channel(Channel::unitary(hadamard()))).min_entry;
    ok = worst >= -1e-9 && hmin < -1e-3;
    return "min entry " + detail::sci(worst) + ", Hadamard min entry " + detail::sci(hmin);
  }));
  return out;
}

inline std::vector<CheckResult> verify_css(std::uint64_t seed) {
  const std::string S = "css";
  std::vector<CheckResult> out;
  for (const char* name : {"steane", "rm15", "golay"})
    out.push_back(detail::run_check(S, std::string("encoder for ") + name, [name](bool& ok) {
      CssCode c = load_code(name);
      Encoder e = synth_encoder(c);
      ok = verify_encoder_symbolic(c, e);
      return "[[" + std::to_string(c.n) + "," + std::to_string(c.k) + "]], " + std::to_string(e.gates.size()) + " gates";
    }));
  out.push_back(detail::run_check(S, "Steane stabilizer sum vs dense", [seed](bool& ok) {
    std::mt19937_64 rng(seed);
    CssCode c = load_code("steane");
    Encoder e = synth_encoder(c);
    double err = 0;
    for (int i = 0; i < 3; ++i) {
      CMatrix rho = random_density(1, rng);
      auto a = simulate_projection(c, rho, e.frame);
      auto b = simulate_projection_dense(c, e, rho);
      err = std::max({err, std::abs(a.p - b.p), (a.output - b.output).cwiseAbs().maxCoeff()});
    }
    ok = err <= 1e-10;
    return "max deviation " + detail::sci(err);
  }));
  out.push_back(detail::run_check(S, "[[2,1]] projection is stochastic", [](bool& ok) {
    CssCode c = parse_code("[[2,1]] pair\nZ 11 +\n");
    Encoder e = synth_encoder(c);
    auto rep = is_stochastic(wigner_of_channel(tp_code_projection(c, e, projector(basis_ket(1, 0)))));
    ok = rep.stochastic;
    return "min entry " + detail::sci(rep.min_entry);
  }));
  out.push_back(detail::run_check(S, "Golay fixed point at eps = 0", [](bool& ok) {
    CssCode c = load_code("golay");
    Encoder e = synth_encoder(c);
    auto o = simulate_projection(c, noisy_magic_state(0.0), e.frame, ket_h());
    ok = std::abs(o.fidelity - 1.0) <= 1e-9;
    return "fidelity " + detail::sci(o.fidelity) + ", p " + detail::sci(o.p);
  }));
  return out;
}

inline std::vector<CheckResult> verify_entropics(std::uint64_t seed) {
  const std::string S = "entropics";
  std::vector<CheckResult> out;
  out.push_back(detail::run_check(S, "H_2 closed form", [](bool& ok) {
    double err = 0;
    for (int i = 0; i <= 100; ++i) {
      double e = i / 100.0;
      double h = renyi_entropy(wigner_transform(noisy_magic_state(e)).real(), AlphaIndex::rational(1, 1));
      err = std::max(err, std::abs(h - (1.0 - std::log2(1.0 - e + e * e / 2.0))));
    }
    ok = err <= 1e-12;
    return "max deviation " + detail::sci(err);
  }));
  out.push_back(detail::run_check(S, "data processing under stochastic maps", [seed](bool& ok) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto grid = alpha_grid(6, 3, 40.0, true);
    int violations = 0;
    for (int t = 0; t < 100; ++t) {
      RVector w = wigner_transform(random_density(1, rng, true)).real();
      RVector r(4);
      for (int i = 0; i < 4; ++i) r(i) = 0.05 + u(rng);
      r /= r.sum();
      RMatrix A(4, 4);
      for (int c = 0; c < 4; ++c) {
        for (int i = 0; i < 4; ++i) A(i, c) = u(rng);
        A.col(c) /= A.col(c).sum();
      }
      for (const auto& al : grid)
        violations += renyi_divergence(A * w, A * r, al) > renyi_divergence(w, r, al) + 1e-10;
    }
    ok = violations == 0;
    return std::to_string(violations) + " violations";
  }));
  out.push_back(detail::run_check(S, "mana of |H>", [](bool& ok) {
    double m = mana(wigner_transform(projector(ket_h())).real());
    ok = std::abs(m - std::log2((1 + std::sqrt(2.0)) / 2)) <= 1e-12;
    return "mana " + detail::sci(m);
  }));
  out.push_back(detail::run_check(S, "Lambda vanishes on CSS hull", [](bool& ok) {
    double v = lambda_monotone(maximally_mixed(1), AlphaIndex::rational(1, 1)).value;
    ok = std::abs(v) <= 1e-6;
    return "Lambda_2(I/2) " + detail::sci(v);
  }));
  return out;
}

inline std::vector<CheckResult> verify_bounds(std::uint64_t seed) {
  const std::string S = "bounds";
  std::vector<CheckResult> out;
  out.push_back(detail::run_check(S, "closed form vs primal, sigma independence", [seed](bool& ok) {
    std::mt19937_64 rng(seed);
    double err = 0;
    CMatrix sigmas[3] = {projector(basis_ket(1, 0)), 0.5 * (CMatrix::Ones(2, 2)), maximally_mixed(1)};
    for (int t = 0; t < 10; ++t) {
      DistillationSpec s;
      s.input = random_rebit_state(rng);
      s.output = random_rebit_state(rng);
      s.p = 0.1 + 0.8 * std::uniform_real_distribution<double>(0, 1)(rng);
      for (auto al : {AlphaIndex::rational(1, 1), AlphaIndex::rational(2, 2), AlphaIndex::rational(3, 1)})
        for (double n : {1.5, 3.0, 7.0}) {
          double c = delta_d(s, n, al);
          for (const auto& sg : sigmas) err = std::max(err, std::abs(delta_d_primal(s, n, al, sg) - c));
        }
    }
    ok = err <= 1e-10;
    return "max deviation " + detail::sci(err);
  }));
  out.push_back(detail::run_check(S, "Steane self-consistency", [seed](bool& ok) {
    std::mt19937_64 rng(seed + 5);
    CssCode c = load_code("steane");
    Encoder e = synth_encoder(c);
    auto grid = default_alpha_grid();
    double worst = kInf;
    bool ceiling_ok = true;
    for (int t = 0; t < 20; ++t) {
      CMatrix rho = random_rebit_state(rng);
      auto o = simulate_projection(c, rho, e.frame);
      DistillationSpec s;
      s.input = rho;
      s.output = o.output;
      s.p = o.p;
      for (const auto& al : grid) worst = std::min(worst, delta_d(s, c.n, al));
      for (const auto& al : alpha_grid(12, 6, 40.0, true, false)) worst = std::min(worst, delta_d(dpi_terms(s, al), c.n));
      ceiling_ok &= o.p <= acceptance_ceiling(rho, c.n, c.k) + 1e-12;
    }
    ok = worst >= -1e-9 && ceiling_ok;
    return "min Delta D " + detail::sci(worst) + (ceiling_ok ? ", ceiling respected" : ", ceiling violated");
  }));
  out.push_back(detail::run_check(S, "cut-off input error at p = 0.9", [](bool& ok) {
    DistillationSpec s;
    s.p = 0.9;
    s.delta = 1e-9;
    auto grid = default_alpha_grid();
    auto feasible = [&](double e) {
      s.eps = e;
      return aggregate_bounds(s, grid).feasible;
    };
    double lo = 0.0, hi = 0.3;
    for (int i = 0; i < 40; ++i) {
      double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
    ok = std::abs(lo - 0.12) <= 0.02;
    return "eps* " + detail::sci(lo);
  }));
  out.push_back(detail::run_check(S, "mana bound below majorization lower bound", [](bool& ok) {
    DistillationSpec s;
    s.p = 0.9;
    ok = true;
    double gap = kInf;
    for (double e : {0.0, 0.02, 0.05, 0.08, 0.1, 0.12}) {
      s.eps = e;
      auto r = aggregate_bounds(s, default_alpha_grid());
      if (!r.feasible) continue;
      gap = std::min(gap, r.n_lower - mana_limit_bound(s));
    }
    ok = gap >= -1e-9;
    return "min gap " + detail::sci(gap);
  }));
  return out;
}

inline const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"phase-space", "css", "entropics", "bounds", "all"};
  return names;
}

inline std::vector<CheckResult> run_verify(const std::string& suite, std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto add = [&](std::vector<CheckResult> v) { out.insert(out.end(), v.begin(), v.end()); };
  if (suite == "phase-space" || suite == "all") add(verify_phase_space(seed));
  if (suite == "css" || suite == "all") add(verify_css(seed));
  if (suite == "entropics" || suite == "all") add(verify_entropics(seed));
  if (suite == "bounds" || suite == "all") add(verify_bounds(seed));
  require(!out.empty(), "unknown verify suite '" + suite + "'");
  return out;
}

}  // namespace wigcss
