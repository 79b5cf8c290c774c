#include "wigcss/bounds.hpp"

#include <gtest/gtest.h>

using namespace wigcss;

namespace {

std::vector<AlphaIndex> finite_alphas() {
  return {AlphaIndex::rational(1, 1), AlphaIndex::rational(2, 2), AlphaIndex::rational(3, 1), AlphaIndex::rational(5, 3),
          AlphaIndex::rational(4, 4), AlphaIndex::infinity()};
}

DistillationSpec eps_spec(double eps, double p, double delta = 1e-9) {
  DistillationSpec s;
  s.eps = eps;
  s.p = p;
  s.delta = delta;
  return s;
}

DistillationSpec explicit_spec(std::mt19937_64& rng, int k = 1) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  DistillationSpec s;
  s.k = k;
  s.input = random_rebit_state(rng);
  s.output = random_density(k, rng, true);
  s.p = u(rng);
  return s;
}

}  // namespace

TEST(DeltaD, ClosedFormMatchesPrimal) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 40; ++t) {
    DistillationSpec s = explicit_spec(rng, 1 + t % 2);
    for (const auto& al : finite_alphas())
      for (double n : {s.k + 0.5, 3.0, 7.0, 12.5})
        EXPECT_NEAR(delta_d(s, n, al), delta_d_primal(s, n, al, maximally_mixed(s.k)), 1e-10) << al.label() << " n=" << n;
  }
}

TEST(DeltaD, IndependentOfFailureState) {
  std::mt19937_64 rng(32);
  std::vector<CMatrix> sigmas = {maximally_mixed(1), projector(basis_ket(1, 0)), 0.5 * CMatrix::Ones(2, 2)};
  for (int t = 0; t < 20; ++t) {
    DistillationSpec s = explicit_spec(rng);
    for (const auto& al : finite_alphas())
      for (double n : {2.0, 7.0}) {
        double ref = delta_d_primal(s, n, al, sigmas[0]);
        for (const auto& sg : sigmas) EXPECT_NEAR(delta_d_primal(s, n, al, sg), ref, 1e-12);
      }
  }
}

TEST(DeltaD, DpiClosedFormMatchesDirect50) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.05, 0.95), nn(1.2, 15.0);
  for (int t = 0; t < 50; ++t) {
    DistillationSpec s;
    s.input = random_density(1, rng);
    s.output = random_density(1, rng);
    s.p = u(rng);
    double n = nn(rng);
    for (const auto& al : finite_alphas())
      EXPECT_NEAR(delta_d(dpi_terms(s, al), n), delta_d_dpi_direct(s, n, al, maximally_mixed(1)), 1e-9) << "instance " << t;
  }
}

TEST(DeltaD, Concave) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(0.0, 0.4), pp(0.05, 0.95);
  for (int t = 0; t < 30; ++t) {
    DistillationSpec s = eps_spec(u(rng), pp(rng));
    for (const auto& al : finite_alphas()) {
      auto terms = majorization_terms(s, al);
      for (double n = 1.05; n < 200; n *= 1.1) {
        double h = 0.01 * n;
        if (n - h <= 1) continue;
        double second = delta_d(terms, n + h) - 2 * delta_d(terms, n) + delta_d(terms, n - h);
        EXPECT_LE(second, 1e-8) << "n=" << n;
      }
    }
  }
}

TEST(DeltaD, DivergesNegativeAtK) {
  DistillationSpec s = eps_spec(0.05, 0.9);
  for (const auto& al : finite_alphas()) {
    auto terms = majorization_terms(s, al);
    // asymptotically each factor 1000 closer to k costs log2(1000) bits
    double a = delta_d(terms, 1 + 1e-6), b = delta_d(terms, 1 + 1e-9), c = delta_d(terms, 1 + 1e-12);
    EXPECT_GT(a, b);
    EXPECT_GT(b, c);
    EXPECT_GT(a - c, 10.0) << al.label();
    EXPECT_LE(b - c, std::log2(1000.0) + 1e-6) << al.label();
    EXPECT_LT(c, 0.0);
  }
  EXPECT_THROW(delta_d(s, 1.0, AlphaIndex::rational(1, 1)), Error);
}

TEST(DeltaD, AsymptoteSignFollowsSlope) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.0, 0.6), pp(0.05, 0.95);
  for (int t = 0; t < 50; ++t) {
    DistillationSpec s = eps_spec(u(rng), pp(rng));
    for (const auto& al : finite_alphas()) {
      auto terms = majorization_terms(s, al);
      if (std::abs(terms.slope) < 1e-6) continue;
      EXPECT_EQ(delta_d(terms, 1e10) > 0, terms.slope > 0) << "eps " << s.eps << " alpha " << al.label();
    }
  }
}

TEST(DeltaD, ReferenceProcessIsSelfConsistent) {
  // input I/2 projected by the [[2,1]] code gives exactly p = 1/2 and output I/2
  DistillationSpec s;
  s.input = maximally_mixed(1);
  s.output = maximally_mixed(1);
  s.p = 0.5;
  for (const auto& al : finite_alphas()) EXPECT_NEAR(delta_d(s, 2.0, al), 0.0, 1e-12) << al.label();
  CssCode c = parse_code("[[2,1]] pair\nZ 11 +\n");
  std::mt19937_64 rng(36);
  for (int t = 0; t < 10; ++t) {
    CMatrix rho = random_rebit_state(rng);
    auto o = simulate_projection(c, rho, synth_encoder(c).frame);
    DistillationSpec q;
    q.input = rho;
    q.output = o.output;
    q.p = o.p;
    for (const auto& al : finite_alphas()) EXPECT_GE(delta_d(q, 2.0, al), -1e-9);
  }
}

TEST(RootBounds, MatchesBruteForceScan) {
  DistillationSpec s = eps_spec(0.05, 0.9);
  AlphaIndex two = AlphaIndex::rational(1, 1);
  auto terms = majorization_terms(s, two);
  double first = kInf, last = -kInf;
  for (int i = 101; i <= 50000; ++i) {
    double n = i / 100.0;
    if (delta_d(terms, n) >= 0) {
      first = std::min(first, n);
      last = std::max(last, n);
    }
  }
  ASSERT_TRUE(std::isfinite(first));
  ASSERT_LT(last, 500.0);
  auto b = root_bounds(s, two);
  ASSERT_TRUE(b.feasible);
  EXPECT_LE(b.n_lower, b.n_upper);
  EXPECT_GE(b.n_lower, first - 0.01);
  EXPECT_LE(b.n_lower, first);
  EXPECT_GE(b.n_upper, last);
  EXPECT_LE(b.n_upper, last + 0.01);
  EXPECT_NEAR(delta_d(terms, b.n_lower), 0.0, 1e-6);
  EXPECT_NEAR(delta_d(terms, b.n_upper), 0.0, 1e-6);
}

TEST(RootBounds, InfeasibleSentinel) {
  DistillationSpec s = eps_spec(0.3, 0.9);
  auto b = root_bounds(s, AlphaIndex::rational(1, 1));
  EXPECT_FALSE(b.feasible);
  EXPECT_EQ(b.n_lower, kInf);
  EXPECT_EQ(b.n_upper, -kInf);
  auto agg = aggregate_bounds(s, default_alpha_grid());
  EXPECT_FALSE(agg.feasible);
  EXPECT_EQ(agg.integer_lower(), kInf);
}

TEST(RootBounds, UpperFiniteWhenEntropyExceedsOne) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 0.3), pp(0.05, 0.95);
  for (int t = 0; t < 40; ++t) {
    DistillationSpec s = eps_spec(u(rng), pp(rng));
    for (const auto& al : finite_alphas()) {
      auto terms = majorization_terms(s, al);
      auto b = root_bounds(terms);
      if (!b.feasible) continue;
      if (terms.slope < -1e-9) EXPECT_TRUE(std::isfinite(b.n_upper)) << al.label();
      if (terms.slope > 1e-9) EXPECT_EQ(b.n_upper, kInf);
      EXPECT_GE(b.n_lower, 1.0);
    }
  }
}

TEST(Aggregate, SingleAlphaGridReducesToRoots) {
  DistillationSpec s = eps_spec(0.05, 0.9);
  auto one = root_bounds(s, AlphaIndex::rational(1, 1));
  auto agg = aggregate_bounds(s, {AlphaIndex::rational(1, 1)});
  EXPECT_EQ(agg.n_lower, one.n_lower);
  EXPECT_EQ(agg.n_upper, one.n_upper);
  EXPECT_THROW(aggregate({}), Error);
}

TEST(Aggregate, EnlargingTheGridTightens) {
  for (double eps : {0.0, 0.02, 0.05, 0.1}) {
    DistillationSpec s = eps_spec(eps, 0.9);
    auto small = aggregate_bounds(s, alpha_grid(3, 2, 40));
    auto big = aggregate_bounds(s, default_alpha_grid());
    if (!small.feasible) {
      EXPECT_FALSE(big.feasible);
      continue;
    }
    if (!big.feasible) continue;
    EXPECT_GE(big.n_lower, small.n_lower);
    EXPECT_LE(big.n_upper, small.n_upper);
  }
}

TEST(Aggregate, IntegerReporting) {
  BoundResult r = aggregate({{AlphaIndex::rational(1, 1), 1.2, 7.9, true}, {AlphaIndex::rational(2, 1), 3.0 + 1e-12, 9.0, true}});
  EXPECT_EQ(r.integer_lower(), 3.0);
  EXPECT_EQ(r.integer_upper(), 7.0);
}

TEST(Analytic, RelaxesNumericBounds) {
  std::mt19937_64 rng(38);
  std::uniform_real_distribution<double> u(0.0, 0.5), pp(0.01, 0.99), dd(0.0, 1e-3);
  std::uniform_int_distribution<int> pick(0, 5);
  int compared = 0;
  for (int t = 0; t < 100; ++t) {
    DistillationSpec s = eps_spec(u(rng), pp(rng), dd(rng));
    AlphaIndex al = finite_alphas()[static_cast<std::size_t>(pick(rng))];
    auto num = root_bounds(s, al);
    auto an = analytic_bounds(s, al);
    if (!num.feasible || an.degenerate) continue;
    ++compared;
    if (an.upper) EXPECT_GE(*an.upper, num.n_upper - 1e-6) << "spec " << t;
    if (an.lower) EXPECT_LE(*an.lower, num.n_lower + 1e-6) << "spec " << t;
  }
  EXPECT_GT(compared, 30);
}

TEST(Analytic, CertainPerfectDistillationImpossible) {
  AlphaIndex two = AlphaIndex::rational(1, 1);
  double h_psi = renyi_entropy(wigner_transform(projector(ket_h())).real(), two);
  for (double eps : {0.01, 0.1, 0.3}) {
    double h_rho = renyi_entropy(wigner_transform(noisy_magic_state(eps)).real(), two);
    auto b = analytic_bounds_from_entropies(h_rho, h_psi, 1, 1.0, 0.0, 2, two);
    ASSERT_TRUE(b.upper.has_value());
    EXPECT_NEAR(*b.upper, 0.0, 1e-12);
  }
}

TEST(Analytic, CollisionFormAndNStarOrdering) {
  std::mt19937_64 rng(39);
  std::uniform_real_distribution<double> u(0.01, 0.9), pp(0.01, 0.99), dd(0.0, 0.1);
  for (int t = 0; t < 50; ++t) {
    DistillationSpec s = eps_spec(u(rng), pp(rng), dd(rng));
    auto b = analytic_bounds(s, AlphaIndex::rational(1, 1));
    ASSERT_TRUE(b.upper.has_value());
    double f = 1.0 / (1.0 - s.eps + s.eps * s.eps / 2.0);
    EXPECT_NEAR(*b.upper, 2.0 * std::log2((1 + std::pow(2.0, 2.5) * s.delta) / s.p) / std::log2(f), 1e-9 * std::max(1.0, *b.upper));
    EXPECT_GE(n_star(s.eps, s.delta, s.p), *b.upper - 1e-9);
  }
}

TEST(NStar, Examples) {
  EXPECT_NEAR(n_star(0.1, 1e-9, 0.5), 2 * std::log(2 * (1 + 6e-9)) / std::log(1 / 0.905), 1e-12);
  EXPECT_NEAR(n_star(0.1, 1e-9, 0.5), 13.888, 1e-3);
  EXPECT_EQ(n_star(0.3, 0.0, 1.0), 0.0);
  EXPECT_EQ(n_star(0.0, 1e-9, 0.5), kInf);
}

TEST(ManaLimit, Examples) {
  DistillationSpec s;
  s.input = noisy_magic_state(0.0);
  s.output = projector(ket_h());
  s.p = 1.0;
  EXPECT_NEAR(mana_limit_bound(s), 1.0, 1e-14);
  s.p = 1e-12;
  EXPECT_NEAR(mana_limit_bound(s), 0.0, 1e-10);
  DistillationSpec flat = eps_spec(0.5, 0.9);
  EXPECT_EQ(mana_limit_bound(flat), kInf);
}

TEST(ManaLimit, BelowMajorizationLowerBound) {
  for (int i = 0; i <= 28; ++i) {
    DistillationSpec s = eps_spec(i / 100.0, 0.9);
    double m = mana_limit_bound(s);
    auto agg = aggregate_bounds(s, default_alpha_grid());
    if (!agg.feasible) continue;
    EXPECT_LE(m, agg.n_lower + 1e-12) << "eps " << s.eps;
  }
}

TEST(ManaLimit, FiniteAlphaRootsConverge) {
  DistillationSpec s = eps_spec(0.05, 0.9);
  double m = mana_limit_bound(s);
  double far = root_bounds(s, AlphaIndex::of(1.01)).n_lower;
  double near = root_bounds(s, AlphaIndex::of(1.0001)).n_lower;
  EXPECT_LT(std::abs(near - m), std::abs(far - m));
  EXPECT_NEAR(near, m, 1e-3);
}

TEST(Dpi, DiagonalInputsMatchClassicalPipeline) {
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int t = 0; t < 10; ++t) {
    DistillationSpec s;
    CMatrix in = CMatrix::Zero(2, 2), out = CMatrix::Zero(2, 2);
    double a = u(rng), b = u(rng);
    in(0, 0) = a;
    in(1, 1) = 1 - a;
    out(0, 0) = b;
    out(1, 1) = 1 - b;
    s.input = in;
    s.output = out;
    s.p = u(rng);
    for (const auto& al : finite_alphas()) {
      auto m = majorization_terms(s, al), d = dpi_terms(s, al);
      EXPECT_NEAR(m.slope, d.slope, 1e-12);
      EXPECT_NEAR(m.d_out, d.d_out, 1e-12);
    }
  }
}

TEST(Dpi, LowPGapIsLarge) {
  DistillationSpec s = eps_spec(0.001, 0.01);
  auto grid = default_alpha_grid();
  auto maj = aggregate_bounds(s, grid);
  auto dpi = dpi_bounds(s, grid);
  ASSERT_TRUE(maj.feasible);
  ASSERT_TRUE(dpi.feasible);
  EXPECT_GE(dpi.n_upper - maj.n_upper, 1e3);
}

TEST(Ceiling, Examples) {
  for (int n = 2; n < 30; ++n) EXPECT_NEAR(acceptance_ceiling(maximally_mixed(1), n, 1), std::exp2(1 - n), 1e-15);
  CMatrix rho = noisy_magic_state(0.1);
  for (int n = 2; n < 30; ++n) EXPECT_LT(acceptance_ceiling(rho, n + 1, 1), acceptance_ceiling(rho, n, 1));
}

TEST(Ceiling, SteaneSimulationRespectsIt) {
  CssCode c = load_code("steane");
  Encoder e = synth_encoder(c);
  std::mt19937_64 rng(41);
  for (int t = 0; t < 20; ++t) {
    CMatrix rho = random_rebit_state(rng);
    auto o = simulate_projection(c, rho, e.frame);
    EXPECT_LE(o.p, acceptance_ceiling(rho, c.n, c.k) + 1e-12);
  }
}

TEST(Fmax, VacuousAtSmallP) {
  CMatrix rho = 0.75 * projector(ket_h()) + 0.125 * CMatrix::Identity(2, 2);
  auto grid = alpha_grid(4, 2, 10);
  EXPECT_EQ(fmax_upper(rho, 1e-9, BoundMethod::Majorization, grid), 1.0);
  EXPECT_EQ(fmax_upper(rho, 1e-9, BoundMethod::Dpi, grid), 1.0);
}

TEST(Fmax, MajorizationIsTighterThanDpi) {
  CMatrix rho = 0.75 * projector(ket_h()) + 0.125 * CMatrix::Identity(2, 2);
  auto grid = alpha_grid(4, 2, 10);
  for (double p : {0.5, 0.7, 0.9}) {
    double m = fmax_upper(rho, p, BoundMethod::Majorization, grid), d = fmax_upper(rho, p, BoundMethod::Dpi, grid);
    EXPECT_LE(m, d + 1e-9) << "p " << p;
    EXPECT_GE(m, 0.5);
  }
}

TEST(Spec, ValidationErrors) {
  DistillationSpec s = eps_spec(0.1, 1.0);
  EXPECT_THROW(s.validate(), Error);
  s.p = 0.5;
  s.delta = -1;
  EXPECT_THROW(s.validate(), Error);
  s.delta = 0;
  s.output = random_density(2, *std::make_unique<std::mt19937_64>(1));
  EXPECT_THROW(s.validate(), Error);
}
