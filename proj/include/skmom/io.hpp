#pragma once

// Text formats shared by the library and the CLI: round-trip CSV numbers and
// the JSON/CSV encodings of Pmf.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skmom/spin.hpp"

namespace skmom::io {

/// 17 significant digits, enough to round-trip any double.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline nlohmann::json pmf_to_json(const Pmf& p) {
  return nlohmann::json{{"k", p.dim()}, {"weights", p.weights()}};
}

inline Pmf pmf_from_json(const nlohmann::json& j) {
  return Pmf::from_weights(j.at("k").get<int>(), j.at("weights").get<std::vector<double>>());
}

/// Rows of `index,spin_string,weight` under a header line.
inline std::string pmf_to_csv(const Pmf& p) {
  std::string out = "index,spin_string,weight\n";
  for (std::uint32_t s = 0; s < p.size(); ++s) {
    out += std::to_string(s);
    out += ',';
    out += SpinVector(p.dim(), s).to_string();
    out += ',';
    out += fmt_double(p[s]);
    out += '\n';
  }
  return out;
}

inline Pmf pmf_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int k = -1;
  std::vector<double> w;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("index", 0) == 0) continue;
    }
    std::istringstream row(line);
    std::string idx, spins, weight;
    if (!std::getline(row, idx, ',') || !std::getline(row, spins, ',') || !std::getline(row, weight))
      throw std::invalid_argument("pmf_from_csv: malformed row '" + line + "'");
    const SpinVector s = SpinVector::parse(spins);
    if (k < 0) {
      k = s.dim();
      if (k > kMaxPmfDim) throw std::invalid_argument("pmf_from_csv: dimension too large");
      w.assign(Pmf::cell_count(k), 0.0);
    }
    if (s.dim() != k || s.bits() != std::stoul(idx))
      throw std::invalid_argument("pmf_from_csv: index and spin string disagree in row '" + line + "'");
    w[s.bits()] = std::stod(weight);
  }
  if (k < 0) throw std::invalid_argument("pmf_from_csv: no rows");
  return Pmf::from_weights(k, std::move(w));
}

}  // namespace skmom::io
