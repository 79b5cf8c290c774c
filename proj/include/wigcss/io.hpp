#pragma once

#include "wigcss/bounds.hpp"

#include <json.hpp>

#include <cstdio>
#include <iomanip>
#include <sstream>

namespace wigcss {

using json = nlohmann::json;

/// Finite doubles as numbers, infinities as "inf"/"-inf".
inline json number_or_sentinel(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}
inline double number_from_json(const json& j) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    require(s == "inf" || s == "-inf", "unrecognised numeric sentinel: " + s);
    return s == "inf" ? kInf : -kInf;
  }
  return j.get<double>();
}

inline json to_json(const QuasiDist& w) {
  json vals = json::array();
  for (Eigen::Index i = 0; i < w.values.size(); ++i) vals.push_back({w.values(i).real(), w.values(i).imag()});
  return {{"n_qubits", w.n_qubits}, {"values", vals}};
}
inline QuasiDist quasi_from_json(const json& j) {
  QuasiDist w;
  w.n_qubits = j.at("n_qubits").get<int>();
  const auto& vals = j.at("values");
  require(vals.size() == (std::size_t{1} << (2 * w.n_qubits)), "quasidistribution length must be 4^n");
  w.values.resize(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) w.values(static_cast<Eigen::Index>(i)) = cplx(vals[i][0].get<double>(), vals[i][1].get<double>());
  return w;
}

/// Row-major real parts; the representation of a CSS-built channel is real.
inline json to_json(const ChannelMatrix& m) {
  json vals = json::array();
  for (Eigen::Index r = 0; r < m.values.rows(); ++r)
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) vals.push_back(m.values(r, c).real());
  return {{"n_in", m.n_in}, {"n_out", m.n_out}, {"values", vals}};
}
inline ChannelMatrix channel_matrix_from_json(const json& j) {
  ChannelMatrix m;
  m.n_in = j.at("n_in").get<int>();
  m.n_out = j.at("n_out").get<int>();
  Eigen::Index rows = Eigen::Index{1} << (2 * m.n_out), cols = Eigen::Index{1} << (2 * m.n_in);
  const auto& vals = j.at("values");
  require(vals.size() == static_cast<std::size_t>(rows * cols), "channel matrix size mismatch");
  m.values.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m.values(r, c) = vals[static_cast<std::size_t>(r * cols + c)].get<double>();
  return m;
}

inline json to_json(const BoundResult& b) {
  json rows = json::array();
  for (const auto& r : b.rows)
    rows.push_back({{"alpha", r.alpha.label()}, {"n_lower", number_or_sentinel(r.n_lower)}, {"n_upper", number_or_sentinel(r.n_upper)}, {"feasible", r.feasible}});
  return {{"rows", rows},
          {"n_lower", number_or_sentinel(b.n_lower)},
          {"n_upper", number_or_sentinel(b.n_upper)},
          {"n_lower_int", number_or_sentinel(b.integer_lower())},
          {"n_upper_int", number_or_sentinel(b.integer_upper())},
          {"feasible", b.feasible}};
}
inline BoundResult bound_result_from_json(const json& j) {
  BoundResult b;
  for (const auto& r : j.at("rows"))
    b.rows.push_back({AlphaIndex::parse(r.at("alpha").get<std::string>()), number_from_json(r.at("n_lower")), number_from_json(r.at("n_upper")),
                      r.at("feasible").get<bool>()});
  b.n_lower = number_from_json(j.at("n_lower"));
  b.n_upper = number_from_json(j.at("n_upper"));
  b.feasible = j.at("feasible").get<bool>();
  return b;
}

inline json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

/// Shortest round-trip text for a double; infinities as inf/-inf.
inline std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// CSV table with '#'-prefixed header comments.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    require(row.size() == columns.size(), "CSV row width mismatch");
    rows.push_back(std::move(row));
  }
  std::string str() const {
    std::ostringstream os;
    for (const auto& c : comments) os << "# " << c << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
    return os.str();
  }
  json to_json() const {
    json out = json::array();
    for (const auto& r : rows) {
      json o = json::object();
      for (std::size_t i = 0; i < columns.size(); ++i) o[columns[i]] = r[i];
      out.push_back(o);
    }
    return {{"comments", comments}, {"rows", out}};
  }
};

}  // namespace wigcss
