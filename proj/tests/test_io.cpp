#include "wigcss/io.hpp"

#include <gtest/gtest.h>

using namespace wigcss;

TEST(Json, QuasiDistRoundTrip) {
  QuasiDist w = wigner_of_state(projector(ket_a()));
  QuasiDist back = quasi_from_json(json::parse(to_json(w).dump()));
  EXPECT_EQ(back.n_qubits, 1);
  EXPECT_EQ(back.values, w.values);
  json bad = to_json(w);
  bad["values"].erase(0);
  EXPECT_THROW(quasi_from_json(bad), Error);
}

TEST(Json, ChannelMatrixRoundTrip) {
  CssCircuit c{2, {GateStep{Gate::cnot(0, 1)}, DiscardStep{{1}}}};
  ChannelMatrix m = wigner_of_channel(circuit_to_channel(c));
  json j = json::parse(to_json(m).dump());
  EXPECT_EQ(j.at("values").size(), 64u);
  ChannelMatrix back = channel_matrix_from_json(j);
  EXPECT_EQ(back.n_in, 2);
  EXPECT_EQ(back.n_out, 1);
  EXPECT_LT((back.values - m.values).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Json, BoundResultRoundTripWithSentinels) {
  DistillationSpec s;
  s.eps = 0.05;
  s.p = 0.9;
  BoundResult b = aggregate_bounds(s, default_alpha_grid());
  json j = to_json(b);
  EXPECT_EQ(j.at("rows")[0].at("alpha"), "1+");
  EXPECT_EQ(j.at("rows")[0].at("n_upper"), "inf");
  BoundResult back = bound_result_from_json(json::parse(j.dump()));
  ASSERT_EQ(back.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < b.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].alpha, b.rows[i].alpha);
    EXPECT_EQ(back.rows[i].n_lower, b.rows[i].n_lower);
    EXPECT_EQ(back.rows[i].n_upper, b.rows[i].n_upper);
  }
  EXPECT_EQ(back.n_lower, b.n_lower);
  EXPECT_EQ(back.feasible, b.feasible);
  EXPECT_THROW(number_from_json("nan"), Error);
}

TEST(Format, Numbers) {
  EXPECT_EQ(fmt_num(kInf), "inf");
  EXPECT_EQ(fmt_num(-kInf), "-inf");
  EXPECT_EQ(fmt_num(0.5), "0.5");
  EXPECT_EQ(fmt_num(1.0 / 3.0), "0.333333333333");
}

TEST(Format, CsvTable) {
  CsvTable t;
  t.comments = {"eps sweep"};
  t.columns = {"eps", "n_upper"};
  t.add({"0.1", "inf"});
  EXPECT_EQ(t.str(), "# eps sweep\neps,n_upper\n0.1,inf\n");
  EXPECT_EQ(t.to_json().at("rows")[0].at("n_upper"), "inf");
  EXPECT_THROW(t.add({"1"}), Error);
}
