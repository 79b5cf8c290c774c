#include "wigcss/io.hpp"
#include "wigcss/verify.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

using namespace wigcss;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerifyFailed = 3;

struct Options {
  double eps = 0.05;
  double delta = 1e-9;
  double p = 0.9;
  int k = 1;
  int d = 2;
  std::string target = "H";
  int alpha_max_a = 12;
  int alpha_max_b = 6;
  double alpha_cap = 40.0;
  double ncap = kDefaultNCap;
  std::string method = "maj";
  std::string code;
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 20240601;
  int jobs = 1;
  std::string eps_grid;
  std::string p_grid;
  std::string alpha_grid;
  std::string figure;
  std::string suite;
};

Target parse_target(const std::string& t) {
  if (t == "H") return Target::H;
  if (t == "A") return Target::A;
  throw Error("target must be H or A");
}

/// "a:b:n" (linspace) or "x1,x2,...".
std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    double a = 0, b = 0;
    int n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(s);
    require(static_cast<bool>(is >> a >> c1 >> b >> c2 >> n) && c1 == ':' && c2 == ':' && n >= 1, "grid must be 'start:stop:count' or a comma list");
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  } else {
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ','))
      if (!tok.empty()) out.push_back(std::stod(tok));
  }
  require(!out.empty(), "empty grid");
  return out;
}

/// Runs fn(i) for i in [0, n) on a pool of `jobs` threads; results keep index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int jobs, F fn) {
  std::vector<T> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  int nt = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return out;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty() || o.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  require(f.good(), "cannot write '" + o.out + "'");
  f << text;
}

void emit_table(const Options& o, const CsvTable& t) { emit(o, o.format == "json" ? t.to_json().dump(2) + "\n" : t.str()); }

std::vector<AlphaIndex> grid_of(const Options& o, bool with_one_plus = true) {
  return alpha_grid(o.alpha_max_a, o.alpha_max_b, o.alpha_cap, false, with_one_plus);
}

DistillationSpec spec_of(const Options& o) {
  DistillationSpec s;
  s.k = o.k;
  s.eps = o.eps;
  s.delta = o.delta;
  s.p = o.p;
  s.d = o.d;
  s.target = parse_target(o.target);
  s.validate();
  return s;
}

void warn_not_magic(const Options& o) {
  if (o.target == "H" && o.eps >= 1.0 - 1.0 / std::sqrt(2.0) - 1e-15)
    std::cerr << "warning: input is not magic (eps >= 1 - 1/sqrt(2)); the mana bound is +inf and no distillation is possible\n";
}

// ---------------------------------------------------------------------------

int cmd_bounds(const Options& o) {
  DistillationSpec s = spec_of(o);
  warn_not_magic(o);
  require(o.method == "maj" || o.method == "dpi", "method must be maj or dpi");
  if (o.method == "maj") require(s.target == Target::H, "majorization bounds need a rebit target; use --method dpi for target A");
  BoundResult r = o.method == "maj" ? aggregate_bounds(s, grid_of(o), o.ncap) : dpi_bounds(s, grid_of(o, false), o.ncap);
  if (o.format == "json") {
    json j = to_json(r);
    j["method"] = o.method;
    j["spec"] = {{"eps", o.eps}, {"delta", o.delta}, {"p", o.p}, {"k", o.k}, {"d", o.d}, {"target", o.target}};
    if (o.method == "maj") {
      j["mana_limit_bound"] = number_or_sentinel(mana_limit_bound(s));
      auto an = analytic_bounds(s, AlphaIndex::rational(1, 1));
      j["analytic_alpha2"] = {{"lower", an.lower ? json(*an.lower) : json(nullptr)}, {"upper", an.upper ? json(*an.upper) : json(nullptr)}};
      if (o.k == 1) j["n_star"] = number_or_sentinel(n_star(o.eps, o.delta, o.p));
    }
    emit(o, j.dump(2) + "\n");
  } else {
    CsvTable t;
    t.comments = {"bounds (" + o.method + "): feasible n satisfy Delta D_alpha(n) >= 0; n_lower/n_upper are the roots per alpha",
                  "eps=" + fmt_num(o.eps) + " delta=" + fmt_num(o.delta) + " p=" + fmt_num(o.p) + " k=" + std::to_string(o.k) + " target=" + o.target,
                  "aggregate: feasible=" + std::string(r.feasible ? "1" : "0") + " n_lower=" + fmt_num(r.n_lower) + " n_upper=" + fmt_num(r.n_upper) +
                      " integer range [" + fmt_num(r.integer_lower()) + ", " + fmt_num(r.integer_upper()) + "]"};
    if (o.method == "maj") t.comments.push_back("mana limit bound: " + fmt_num(mana_limit_bound(s)));
    t.columns = {"alpha", "n_lower", "n_upper", "feasible"};
    for (const auto& row : r.rows) t.add({row.alpha.label(), fmt_num(row.n_lower), fmt_num(row.n_upper), row.feasible ? "1" : "0"});
    emit_table(o, t);
  }
  return r.feasible ? kExitOk : kExitInfeasible;
}

// ---------------------------------------------------------------------------

CsvTable figure_fig1(const Options& o) {
  auto eps = parse_grid(o.eps_grid.empty() ? "0.005:0.2:40" : o.eps_grid);
  auto ps = parse_grid(o.p_grid.empty() ? "0.1,0.9" : o.p_grid);
  auto grid = grid_of(o);
  CsvTable t;
  t.comments = {"fig1: upper bounds on code length for |H> distillation, delta=" + fmt_num(o.delta),
                "n_upper_maj: min over grid alpha of sup{n : Delta D_alpha(n) >= 0} (inf = unbounded, -inf = infeasible)",
                "n_upper_analytic2: closed-form alpha=2 bound 2 log2((1+2^{5/2} delta)/p) / log2 f(eps), f(eps) = 1/(1-eps+eps^2/2)",
                "n_star: 2 log_{f(eps)}((1+6 delta)/p)"};
  t.columns = {"p", "eps", "n_upper_maj", "n_upper_analytic2", "n_star"};
  std::vector<std::pair<double, double>> pts;
  for (double p : ps)
    for (double e : eps) pts.push_back({p, e});
  auto rows = parallel_map<std::vector<std::string>>(pts.size(), o.jobs, [&](std::size_t i) {
    DistillationSpec s;
    s.p = pts[i].first;
    s.eps = pts[i].second;
    s.delta = o.delta;
    auto r = aggregate_bounds(s, grid, o.ncap);
    auto an = analytic_bounds(s, AlphaIndex::rational(1, 1));
    return std::vector<std::string>{fmt_num(s.p), fmt_num(s.eps), fmt_num(r.feasible ? r.n_upper : -kInf), an.upper ? fmt_num(*an.upper) : "nan",
                                    fmt_num(n_star(s.eps, s.delta, s.p))};
  });
  for (auto& r : rows) t.add(std::move(r));
  return t;
}

CsvTable figure_fig3(const Options& o) {
  auto eps = parse_grid(o.eps_grid.empty() ? "0.0:0.2:41" : o.eps_grid);
  auto grid = grid_of(o);
  CsvTable t;
  t.comments = {"fig3: lower bounds on code length for |H> distillation, p=" + fmt_num(o.p) + " delta=" + fmt_num(o.delta),
                "n_lower_maj: max over grid alpha of inf{n : Delta D_alpha(n) >= 0}",
                "n_lower_mana: log2(p 2^{M(rho')} + 1 - p) / M(rho), M = mana (the alpha -> 1+ limit)"};
  t.columns = {"eps", "n_lower_maj", "n_upper_maj", "n_lower_mana"};
  auto rows = parallel_map<std::vector<std::string>>(eps.size(), o.jobs, [&](std::size_t i) {
    DistillationSpec s;
    s.p = o.p;
    s.eps = eps[i];
    s.delta = o.delta;
    auto r = aggregate_bounds(s, grid, o.ncap);
    return std::vector<std::string>{fmt_num(s.eps), fmt_num(r.n_lower), fmt_num(r.n_upper), fmt_num(mana_limit_bound(s))};
  });
  for (auto& r : rows) t.add(std::move(r));
  return t;
}

CsvTable figure_fig4(const Options& o) {
  auto eps = parse_grid(o.eps_grid.empty() ? "0.0:0.4:41" : o.eps_grid);
  auto alphas = parse_grid(o.alpha_grid.empty() ? "1.05:4.0:60" : o.alpha_grid);
  CsvTable t;
  t.comments = {"fig4: Renyi entropy H_alpha(W_rho(eps)) = (1-alpha)^{-1} log2 sum |w|^alpha of the noisy |H> state",
                "above_one: 1 where H_alpha > 1 (a finite upper bound on n exists)",
                "scaled: (1-alpha) H_alpha, which tends to the mana as alpha -> 1+; magic: 1 where mana > 0 (eps < 1 - 1/sqrt(2))"};
  t.columns = {"alpha", "eps", "h_alpha", "above_one", "scaled", "mana", "magic"};
  for (double a : alphas)
    for (double e : eps) {
      RVector w = wigner_transform(noisy_magic_state(e)).real();
      double h = renyi_entropy(w, AlphaIndex::of(a)), m = mana(w);
      t.add({fmt_num(a), fmt_num(e), fmt_num(h), h > 1 ? "1" : "0", fmt_num((1 - a) * h), fmt_num(m), m > 1e-12 ? "1" : "0"});
    }
  return t;
}

CsvTable figure_fig5a(const Options& o) {
  auto eps = parse_grid(o.eps_grid.empty() ? "0.0:0.3:31" : o.eps_grid);
  std::vector<std::string> codes;
  if (o.code.empty()) codes = {"steane", "golay"};
  else {
    std::istringstream is(o.code);
    for (std::string c; std::getline(is, c, ',');) codes.push_back(c);
  }
  auto grid = grid_of(o);
  CsvTable t;
  t.comments = {"fig5a: simulated code projection on rho(eps)^{(x)n} (stabilizer-sum evaluation) against acceptance ceilings",
                "p_ceiling_maj: largest p with Delta D_alpha(n) >= 0 for every grid alpha given the simulated output",
                "p_ceiling_lambda: d^k lambda_max(rho)^n"};
  t.columns = {"code", "n", "eps", "p_sim", "fidelity", "p_ceiling_maj", "p_ceiling_lambda"};
  for (const auto& name : codes) {
    CssCode c = load_code(name);
    Encoder e = synth_encoder(c);
    auto rows = parallel_map<std::vector<std::string>>(eps.size(), o.jobs, [&](std::size_t i) {
      CMatrix rho = noisy_magic_state(eps[i]);
      auto out = simulate_projection(c, rho, e.frame, ket_h());
      double pm = acceptance_upper_bound_p(rho, out.output, c.n, grid);
      return std::vector<std::string>{name, std::to_string(c.n), fmt_num(eps[i]), fmt_num(out.p), fmt_num(out.fidelity), fmt_num(pm),
                                      fmt_num(acceptance_ceiling(rho, c.n, c.k))};
    });
    for (auto& r : rows) t.add(std::move(r));
  }
  return t;
}

CsvTable figure_fig6a(const Options& o) {
  auto eps = parse_grid(o.eps_grid.empty() ? "0.001:0.1:12" : o.eps_grid);
  auto ps = parse_grid(o.p_grid.empty() ? "0.01:0.99:12" : o.p_grid);
  auto grid = grid_of(o);
  CsvTable t;
  t.comments = {"fig6a: upper bounds from majorization and from the sandwiched-Renyi data-processing inequality, delta=" + fmt_num(o.delta),
                "delta_n_upper = n_upper_dpi - n_upper_maj (nan when either bound is infeasible or unbounded)"};
  t.columns = {"eps", "p", "n_upper_maj", "n_upper_dpi", "delta_n_upper"};
  std::vector<std::pair<double, double>> pts;
  for (double e : eps)
    for (double p : ps) pts.push_back({e, p});
  auto rows = parallel_map<std::vector<std::string>>(pts.size(), o.jobs, [&](std::size_t i) {
    DistillationSpec s;
    s.eps = pts[i].first;
    s.p = pts[i].second;
    s.delta = o.delta;
    auto m = aggregate_bounds(s, grid, o.ncap);
    auto q = dpi_bounds(s, grid, o.ncap);
    double mu = m.feasible ? m.n_upper : -kInf, qu = q.feasible ? q.n_upper : -kInf;
    std::string dn = std::isfinite(mu) && std::isfinite(qu) ? fmt_num(qu - mu) : "nan";
    return std::vector<std::string>{fmt_num(s.eps), fmt_num(s.p), fmt_num(mu), fmt_num(qu), dn};
  });
  for (auto& r : rows) t.add(std::move(r));
  return t;
}

CsvTable figure_fig6b(const Options& o) {
  auto ps = parse_grid(o.p_grid.empty() ? "0.02:0.98:49" : o.p_grid);
  auto grid = grid_of(o);
  CMatrix rho = 0.75 * projector(ket_h()) + 0.125 * CMatrix::Identity(2, 2);
  CsvTable t;
  t.comments = {"fig6b: maximal output fidelity F for rho = 3/4 |H><H| + 1/8 I over 1-output code projections",
                "outputs rho'(F) = F|H><H| + (1-F)|H_perp><H_perp|; F feasible when some n satisfies every grid constraint"};
  t.columns = {"p", "fmax_maj", "fmax_dpi"};
  auto rows = parallel_map<std::vector<std::string>>(ps.size(), o.jobs, [&](std::size_t i) {
    return std::vector<std::string>{fmt_num(ps[i]), fmt_num(fmax_upper(rho, ps[i], BoundMethod::Majorization, grid, o.ncap)),
                                    fmt_num(fmax_upper(rho, ps[i], BoundMethod::Dpi, grid, o.ncap))};
  });
  for (auto& r : rows) t.add(std::move(r));
  return t;
}

int cmd_figure(const Options& o) {
  CsvTable t;
  if (o.figure == "fig1") t = figure_fig1(o);
  else if (o.figure == "fig3") t = figure_fig3(o);
  else if (o.figure == "fig4") t = figure_fig4(o);
  else if (o.figure == "fig5a") t = figure_fig5a(o);
  else if (o.figure == "fig6a") t = figure_fig6a(o);
  else if (o.figure == "fig6b") t = figure_fig6b(o);
  else throw Error("unknown figure '" + o.figure + "' (expected fig1, fig3, fig4, fig5a, fig6a or fig6b)");
  emit_table(o, t);
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o) {
  require(o.eps >= 0 && o.eps <= 1, "eps must lie in [0, 1]");
  Target tg = parse_target(o.target);
  CssCode c = load_code(o.code.empty() ? "steane" : o.code);
  Encoder e = synth_encoder(c);
  CMatrix rho = noisy_magic_state(o.eps, tg);
  require(c.k >= 1 && c.k <= 2, "simulation supports codes with k = 1 or 2");
  CVector psi = target_ket(tg);
  auto out = simulate_projection(c, rho, e.frame, psi);

  DistillationSpec s;
  s.k = c.k;
  s.input = rho;
  s.output = out.output;
  s.p = std::min(out.p, 1.0 - 1e-15);
  s.target = tg;
  double min_maj = kInf, min_dpi = kInf;
  if (tg == Target::H)
    for (const auto& al : grid_of(o)) min_maj = std::min(min_maj, delta_d(s, c.n, al));
  for (const auto& al : grid_of(o, false)) min_dpi = std::min(min_dpi, delta_d(dpi_terms(s, al), c.n));
  double ceiling = acceptance_ceiling(rho, c.n, c.k);
  bool consistent = (tg != Target::H || min_maj >= -1e-9) && min_dpi >= -1e-9 && out.p <= ceiling + 1e-12;

  if (o.format == "json") {
    json j = {{"code", c.name}, {"n", c.n}, {"k", c.k}, {"eps", o.eps}, {"target", o.target}, {"p", out.p}, {"fidelity", out.fidelity},
              {"trace_error", out.trace_error}, {"output", matrix_to_json(out.output)}, {"min_delta_d_maj", number_or_sentinel(min_maj)},
              {"min_delta_d_dpi", number_or_sentinel(min_dpi)}, {"p_ceiling", ceiling}, {"bounds_satisfied", consistent}};
    emit(o, j.dump(2) + "\n");
  } else {
    CsvTable t;
    t.comments = {"simulate: code projection of rho(eps)^{(x)n} onto the trivial syndrome, then decoding",
                  "min_delta_d_*: smallest Delta D over the alpha grid at the simulated (n, p, rho'); p_ceiling = d^k lambda_max(rho)^n"};
    t.columns = {"code", "n", "k", "eps", "p", "fidelity", "trace_error", "min_delta_d_maj", "min_delta_d_dpi", "p_ceiling", "bounds_satisfied"};
    t.add({c.name, std::to_string(c.n), std::to_string(c.k), fmt_num(o.eps), fmt_num(out.p), fmt_num(out.fidelity), fmt_num(out.trace_error),
           tg == Target::H ? fmt_num(min_maj) : "nan", fmt_num(min_dpi), fmt_num(ceiling), consistent ? "1" : "0"});
    emit_table(o, t);
  }
  return kExitOk;
}

int cmd_verify(const Options& o) {
  const auto& names = verify_suite_names();
  require(std::find(names.begin(), names.end(), o.suite) != names.end(), "unknown verify suite '" + o.suite + "'");
  auto results = run_verify(o.suite, o.seed);
  int failed = 0;
  for (const auto& r : results) {
    failed += !r.passed;
    std::printf("%s [%s] %s: %s (%.2fs)\n", r.passed ? "PASS" : "FAIL", r.suite.c_str(), r.name.c_str(), r.detail.c_str(), r.seconds);
  }
  std::printf("%zu checks, %d failed\n", results.size(), failed);
  return failed ? kExitVerifyFailed : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Wigner-representation bounds for CSS code-projection magic state distillation"};
  app.set_config("--config", "", "flat key=value file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--eps", o.eps, "input depolarizing error of rho(eps)")->capture_default_str();
  app.add_option("--delta", o.delta, "output trace-distance error")->capture_default_str();
  app.add_option("--p", o.p, "acceptance probability in (0, 1)")->capture_default_str();
  app.add_option("--k", o.k, "number of output qubits")->capture_default_str();
  app.add_option("--d", o.d, "local dimension in the continuity constant")->capture_default_str();
  app.add_option("--target", o.target, "magic target state")->check(CLI::IsMember({"H", "A"}))->capture_default_str();
  app.add_option("--alpha-max-a", o.alpha_max_a, "alpha grid: largest a in 2a/(2b-1)")->capture_default_str();
  app.add_option("--alpha-max-b", o.alpha_max_b, "alpha grid: largest b in 2a/(2b-1)")->capture_default_str();
  app.add_option("--alpha-cap", o.alpha_cap, "alpha grid: largest alpha")->capture_default_str();
  app.add_option("--ncap", o.ncap, "search cap on the code length")->capture_default_str();
  app.add_option("--method", o.method, "bound pipeline: maj (majorization) or dpi (sandwiched Renyi)")->check(CLI::IsMember({"maj", "dpi"}))->capture_default_str();
  app.add_option("--code", o.code, "bundled code name (steane, rm15, golay) or code file; fig5a takes a comma list (default steane,golay)");
  app.add_option("--out", o.out, "output file (stdout when empty)");
  app.add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--seed", o.seed, "random seed for verification suites")->capture_default_str();
  app.add_option("--jobs", o.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--eps-grid", o.eps_grid, "figure sweep over eps: start:stop:count or comma list");
  app.add_option("--p-grid", o.p_grid, "figure sweep over p: start:stop:count or comma list");
  app.add_option("--alpha-grid", o.alpha_grid, "fig4 sweep over real alpha > 1: start:stop:count or comma list");

  auto* bounds = app.add_subcommand("bounds", "code-length bounds for one specification\n  CSV columns: alpha,n_lower,n_upper,feasible");
  auto* figure = app.add_subcommand("figure", "figure data\n"
                                              "  fig1: p,eps,n_upper_maj,n_upper_analytic2,n_star\n"
                                              "  fig3: eps,n_lower_maj,n_upper_maj,n_lower_mana\n"
                                              "  fig4: alpha,eps,h_alpha,above_one,scaled,mana,magic\n"
                                              "  fig5a: code,n,eps,p_sim,fidelity,p_ceiling_maj,p_ceiling_lambda\n"
                                              "  fig6a: eps,p,n_upper_maj,n_upper_dpi,delta_n_upper\n"
                                              "  fig6b: p,fmax_maj,fmax_dpi");
  figure->add_option("name", o.figure, "fig1, fig3, fig4, fig5a, fig6a or fig6b")->required();
  auto* simulate = app.add_subcommand("simulate", "simulate a code projection\n  CSV columns: code,n,k,eps,p,fidelity,trace_error,min_delta_d_maj,"
                                                  "min_delta_d_dpi,p_ceiling,bounds_satisfied");
  auto* verify = app.add_subcommand("verify", "run a verification suite (phase-space, css, entropics, bounds, all)");
  verify->add_option("suite", o.suite, "suite name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*bounds) return cmd_bounds(o);
    if (*figure) return cmd_figure(o);
    if (*simulate) return cmd_simulate(o);
    if (*verify) return cmd_verify(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
