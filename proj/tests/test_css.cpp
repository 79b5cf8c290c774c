#include "wigcss/css.hpp"

#include <gtest/gtest.h>

using namespace wigcss;

namespace {

CssCode pair_code() { return parse_code("[[2,1]] pair\nZ 11 +\n"); }
CssCode four_two_code() { return parse_code("[[4,2]] four\nX 1111 +\nZ 1111 +\n"); }

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// Oracle: stabilizer-group sum P = 2^{-(n-k)} Σ_S S from dense generator products.
CMatrix oracle_projector(const CssCode& c) {
  std::size_t d = dim_of(c.n);
  CMatrix p = CMatrix::Identity(d, d);
  for (const auto& t : c.terms()) p = p * (0.5 * (CMatrix::Identity(d, d) + t.matrix()));
  return p;
}

}  // namespace

TEST(CodeIO, BundledCodesLoadAndValidate) {
  for (auto [name, n] : std::vector<std::pair<std::string, int>>{{"steane", 7}, {"rm15", 15}, {"golay", 23}}) {
    CssCode c = load_code(name);
    EXPECT_EQ(c.n, n);
    EXPECT_EQ(c.k, 1);
    EXPECT_EQ(static_cast<int>(c.generators.size()), n - 1);
    EXPECT_TRUE(validate_code(c).empty());
  }
}

TEST(CodeIO, RoundTripIsBitExact) {
  for (const char* name : {"steane", "rm15", "golay"}) {
    CssCode c = load_code(name);
    std::string text = format_code(c);
    EXPECT_EQ(parse_code(text), c);
    EXPECT_EQ(format_code(parse_code(text)), text);
  }
}

TEST(CodeIO, ParseErrorsNameTheLine) {
  try {
    parse_code("[[3,1]] bad\nX 110 +\nZ 1x1 +\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_code("X 11 +\n"), Error);
  EXPECT_THROW(parse_code("[[2,1]]\nY 11 +\n"), Error);
  EXPECT_THROW(parse_code("[[2,1]]\nZ 111 +\n"), Error);
  EXPECT_THROW(parse_code("[[2,1]]\nZ 11 *\n"), Error);
}

TEST(CodeIO, MissingFileIsReported) { EXPECT_THROW(load_code("no-such-code"), Error); }

TEST(ValidateCode, Violations) {
  EXPECT_TRUE(validate_code(pair_code()).empty());
  auto v = validate_code(parse_code("[[3,1]] odd\nX 110 +\nZ 100 +\n"));
  ASSERT_FALSE(v.empty());
  EXPECT_NE(v.front().find("generators 0 and 1"), std::string::npos);
  EXPECT_FALSE(validate_code(parse_code("[[3,1]] dep\nZ 110 +\nZ 110 +\n")).empty());
  EXPECT_FALSE(validate_code(parse_code("[[3,0]] count\nZ 110 +\n")).empty());
}

TEST(Projector, Examples) {
  CMatrix p = codespace_projector(pair_code());
  CMatrix expect = CMatrix::Zero(4, 4);
  expect(0, 0) = expect(3, 3) = 1;
  EXPECT_LT(max_abs(p - expect), 1e-15);
  for (const char* name : {"steane"}) {
    CssCode c = load_code(name);
    CMatrix pc = codespace_projector(c);
    EXPECT_LT(max_abs(pc - oracle_projector(c)), 1e-12);
    EXPECT_NEAR(pc.trace().real(), 2.0, 1e-12);
    EXPECT_NEAR((pc * maximally_mixed(c.n)).trace().real(), std::exp2(c.k - c.n), 1e-15);
  }
}

TEST(Encoder, PairCodeUsesOneCnot) {
  CssCode c = pair_code();
  Encoder e = synth_encoder(c);
  int cnots = 0;
  for (const auto& g : e.gates) cnots += g.kind == Gate::CNOT;
  EXPECT_EQ(cnots, 1);
  EXPECT_TRUE(verify_encoder_symbolic(c, e));
}

TEST(Encoder, DenseConjugationForSmallCodes) {
  for (const CssCode& c : {pair_code(), four_two_code(), load_code("steane")}) {
    Encoder e = synth_encoder(c);
    EXPECT_TRUE(verify_encoder_symbolic(c, e));
    CMatrix U = circuit_unitary(c.n, e.gates);
    EXPECT_LT(max_abs(U.adjoint() * U - CMatrix::Identity(U.rows(), U.cols())), 1e-12);
    for (std::size_t i = 0; i < c.generators.size(); ++i) {
      const auto& g = c.generators[i];
      int target = c.k + static_cast<int>(i);
      PauliTerm single = g.type == 'Z' ? PauliTerm::z_type(c.n, qubit_bit(c.n, target)) : PauliTerm::x_type(c.n, qubit_bit(c.n, target));
      EXPECT_LT(max_abs(U.adjoint() * c.term(i).matrix() * U - single.matrix()), 1e-12) << c.name << " generator " << i;
    }
    // logical frame: commutes with stabilizers, pairwise anticommutation on each logical qubit
    for (int j = 0; j < c.k; ++j) {
      for (const auto& s : c.terms()) {
        EXPECT_TRUE(e.frame.x_logicals[j].commutes_with(s));
        EXPECT_TRUE(e.frame.z_logicals[j].commutes_with(s));
      }
      for (int l = 0; l < c.k; ++l) {
        EXPECT_EQ(e.frame.x_logicals[j].commutes_with(e.frame.z_logicals[l]), j != l);
      }
    }
  }
}

TEST(Encoder, EncodedStatesLieInCodespace) {
  for (const CssCode& c : {pair_code(), four_two_code(), load_code("steane")}) {
    Encoder e = synth_encoder(c);
    CMatrix P = codespace_projector(c);
    CVector zero = CVector::Zero(dim_of(c.k));
    zero(0) = 1;
    CVector enc = encode_state(e, zero);
    EXPECT_LT((P * enc - enc).norm(), 1e-12);
    EXPECT_NEAR(enc.norm(), 1.0, 1e-12);
  }
}

TEST(Encoder, LargeCodesVerifySymbolically) {
  for (const char* name : {"rm15", "golay"}) {
    CssCode c = load_code(name);
    EXPECT_TRUE(verify_encoder_symbolic(c, synth_encoder(c)));
  }
}

TEST(CssStates, Enumeration) {
  EXPECT_EQ(enumerate_css_states(1).size(), 4u);
  EXPECT_EQ(enumerate_css_states(2).size(), 20u);   // 5 subspaces of F_2^2, 4 sign patterns
  EXPECT_EQ(enumerate_css_states(3).size(), 128u);  // 16 subspaces of F_2^3, 8 sign patterns
  auto all = enumerate_stabilizer_states(2);
  EXPECT_EQ(all.size(), 60u);
  int css = 0;
  for (const auto& s : all) css += s.css;
  EXPECT_EQ(css, 20);
}

TEST(CssStates, Membership) {
  EXPECT_TRUE(is_css_state(0.5 * CMatrix::Ones(2, 2)));
  EXPECT_TRUE(is_css_state(maximally_mixed(1)));
  EXPECT_TRUE(is_css_state(maximally_mixed(2)));
  EXPECT_FALSE(is_css_state(projector(ket_h())));
  CVector phi = CVector::Zero(4);
  phi(0) = phi(3) = 1 / std::sqrt(2.0);
  CMatrix ih = kron(CMatrix::Identity(2, 2), hadamard());
  EXPECT_TRUE(is_css_state(projector(phi)));
  EXPECT_FALSE(is_css_state(projector(ih * phi)));
}

TEST(Circuits, SingleCnotMatchesUnitary) {
  CssCircuit c{2, {GateStep{Gate::cnot(0, 1)}}};
  Channel e = circuit_to_channel(c);
  CMatrix cnot = circuit_unitary(2, {Gate::cnot(0, 1)});
  std::mt19937_64 rng(3);
  CMatrix rho = random_density(2, rng);
  EXPECT_LT(max_abs(e.apply(rho) - cnot * rho * cnot.adjoint()), 1e-14);
}

TEST(Circuits, MeasureThenDiscard) {
  CssCircuit c{2, {MeasureStep{PauliTerm::z_type(2, qubit_bit(2, 0)), {}}, DiscardStep{{0}}}};
  Channel e = circuit_to_channel(c);
  EXPECT_EQ(e.n_out(), 1);
  EXPECT_TRUE(is_stochastic(wigner_of_channel(e)).stochastic);
  std::mt19937_64 rng(4);
  CMatrix rho = random_density(2, rng);
  EXPECT_LT(max_abs(e.apply(rho) - partial_trace(rho, 2, qubit_bit(2, 0))), 1e-14);
}

TEST(Circuits, RandomCircuitsAreStochasticWithCssChoi) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    Channel e = circuit_to_channel(random_css_circuit(2 + t % 2, rng));
    EXPECT_LT(e.trace_preservation_error(), 1e-10);
    auto rep = is_stochastic(wigner_of_channel(e));
    EXPECT_TRUE(rep.stochastic) << "circuit " << t << " min entry " << rep.min_entry;
    QuasiDist wj = wigner_of_state(choi_state(e));
    EXPECT_TRUE(wj.is_real() && wj.min_real() >= -1e-10);
  }
}

TEST(Circuits, RejectsNonCssSteps) {
  CssCircuit h{1, {GateStep{Gate::h(0)}}};
  EXPECT_THROW(circuit_to_channel(h), Error);
  EXPECT_FALSE(is_stochastic(wigner_of_channel(circuit_to_channel(h, true))).stochastic);
  CssCircuit y{1, {ProjectStep{PauliTerm::hermitian(1, 1, 1), 1}}};
  try {
    circuit_to_channel(y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("non-CSS observable"), std::string::npos);
  }
}

TEST(Projection, PairCodeReference) {
  CssCode c = pair_code();
  Encoder e = synth_encoder(c);
  CMatrix sigma = maximally_mixed(1);
  Channel E = tp_code_projection(c, e, sigma);
  CMatrix out = E.apply(maximally_mixed(2));
  EXPECT_LT(max_abs(out - flagged_output(0.5, maximally_mixed(1), sigma)), 1e-14);
  EXPECT_TRUE(is_stochastic(wigner_of_channel(E)).stochastic);
  CMatrix rho = noisy_magic_state(0.1);
  CMatrix rr = kron(rho, rho);
  double p = (codespace_projector(c) * rr).trace().real();
  auto o = simulate_projection(c, rho, e.frame);
  EXPECT_NEAR(o.p, p, 1e-14);
  EXPECT_LT(max_abs(E.apply(rr) - flagged_output(o.p, o.output, sigma)), 1e-12);
}

TEST(Projection, SteaneMatchesDenseAndChannel) {
  CssCode c = load_code("steane");
  Encoder e = synth_encoder(c);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    CMatrix rho = random_density(1, rng);
    auto a = simulate_projection(c, rho, e.frame);
    auto b = simulate_projection_dense(c, e, rho);
    EXPECT_NEAR(a.p, b.p, 1e-10);
    EXPECT_LT(max_abs(a.output - b.output), 1e-10);
  }
  CMatrix rho = noisy_magic_state(0.0);
  auto a = simulate_projection(c, rho, e.frame, ket_h());
  auto b = simulate_projection_dense(c, e, rho);
  attach_target(b, ket_h());
  EXPECT_NEAR(a.fidelity, b.fidelity, 1e-10);
  Channel E = tp_code_projection(c, e, maximally_mixed(1));
  EXPECT_LT(max_abs(E.apply(kron_power(rho, 7)) - flagged_output(a.p, a.output, maximally_mixed(1))), 1e-10);
}

TEST(Projection, MaximallyMixedGivesReferenceValues) {
  for (const char* name : {"steane", "rm15", "golay"}) {
    CssCode c = load_code(name);
    auto o = simulate_projection(c, maximally_mixed(1), synth_encoder(c).frame);
    EXPECT_NEAR(o.p, std::exp2(c.k - c.n), 1e-15);
    EXPECT_LT(max_abs(o.output - maximally_mixed(c.k)), 1e-12);
  }
}

TEST(Projection, FourTwoCodeMatchesDense) {
  CssCode c = four_two_code();
  Encoder e = synth_encoder(c);
  std::mt19937_64 rng(7);
  CMatrix rho = random_density(1, rng);
  auto a = simulate_projection(c, rho, e.frame);
  auto b = simulate_projection_dense(c, e, rho);
  EXPECT_NEAR(a.p, b.p, 1e-12);
  EXPECT_LT(max_abs(a.output - b.output), 1e-12);
}

// Frozen values from an independent numpy stabilizer sum over the 2^22 group elements.
TEST(Projection, GolayFrozenValues) {
  CssCode c = load_code("golay");
  Encoder e = synth_encoder(c);
  auto a = simulate_projection(c, noisy_magic_state(0.01), e.frame, ket_h());
  EXPECT_NEAR(a.p, 2.9079424147611453e-05, 1e-15);
  EXPECT_NEAR(a.fidelity, 0.9948277047562109, 1e-10);
  auto b = simulate_projection(c, noisy_magic_state(0.2), e.frame, ket_h());
  EXPECT_NEAR(b.p, 3.6401063615013425e-06, 1e-16);
  EXPECT_NEAR(b.fidelity, 0.9034987633812116, 1e-10);
  EXPECT_GT(b.fidelity, fidelity_with_pure(noisy_magic_state(0.2), ket_h()));
}

TEST(Projection, GolayImprovesFidelityAtOnePercentNoise) {
  CssCode c = load_code("golay");
  Encoder e = synth_encoder(c);
  auto clean = simulate_projection(c, noisy_magic_state(0.0), e.frame, ket_h());
  EXPECT_NEAR(clean.fidelity, 1.0, 1e-9);
  CMatrix rho = 0.99 * projector(ket_h()) + 0.01 * maximally_mixed(1);
  auto o = simulate_projection(c, rho, e.frame, ket_h());
  double f_in = fidelity_with_pure(rho, ket_h());
  EXPECT_GE(o.fidelity, f_in);
  EXPECT_GT(o.p, 0.0);
  EXPECT_LE(o.p, 1.0);
}

TEST(Projection, HadamardTwirlProducesCanonicalForm) {
  std::mt19937_64 rng(8);
  Channel tw = hadamard_twirl();
  for (int t = 0; t < 5; ++t) {
    CMatrix out = tw.apply(random_density(1, rng));
    double f = fidelity_with_pure(out, ket_h());
    double eps = 2.0 * (1.0 - f);
    CMatrix expect = (1.0 - eps) * projector(ket_h()) + eps * maximally_mixed(1);
    EXPECT_LT(max_abs(out - expect), 1e-12);
  }
}
