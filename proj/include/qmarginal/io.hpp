// Copyright 2026 The qmarginal authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "qmarginal/analytic.hpp"
#include "qmarginal/entropy.hpp"
#include "qmarginal/games.hpp"
#include "qmarginal/marginal.hpp"

namespace qmarginal::io {

using nlohmann::json;

//==============================================================================
// Matrices and labels
//
// Complex matrices serialize as nested arrays of [re, im] pairs, row-major;
// labels as {"name": str, "dim": int}.
//==============================================================================

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c)
      row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("matrix JSON must be a nested array");
  const long rows = long(j.size());
  const long cols = long(j.at(0).size());
  Matrix m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    const auto& row = j.at(std::size_t(r));
    if (long(row.size()) != cols) throw std::invalid_argument("ragged matrix JSON");
    for (long c = 0; c < cols; ++c) {
      const auto& e = row.at(std::size_t(c));
      if (e.is_array() && e.size() == 2)
        m(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
      else if (e.is_number())
        m(r, c) = Complex(e.get<double>(), 0.0);
      else
        throw std::invalid_argument("matrix entries must be [re, im] pairs");
    }
  }
  return m;
}

inline json to_json(const SystemLabel& l) { return json{{"name", l.name}, {"dim", l.dim}}; }

inline SystemLabel label_from_json(const json& j) {
  return SystemLabel{j.at("name").get<std::string>(), j.at("dim").get<int>()};
}

//==============================================================================
// Channels
//
// {"kind":"kraus","in_dim":..,"out_dim":..,"kraus":[matrix,...]}
// {"kind":"named","name":"identity","d":..}
// {"kind":"named","name":"depolarizing","d":..,"mu":..,"q":..,"p":..}
// {"kind":"pauli","p":[p0,px,py,pz]}
//==============================================================================

inline KrausChannel channel_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "kraus") {
    const int din = j.at("in_dim").get<int>();
    const int dout = j.at("out_dim").get<int>();
    std::vector<Matrix> ks;
    for (const auto& k : j.at("kraus")) ks.push_back(matrix_from_json(k));
    return KrausChannel({"A", din}, {"B", dout}, std::move(ks));
  }
  if (kind == "named") {
    const std::string name = j.at("name").get<std::string>();
    const int d = j.at("d").get<int>();
    if (name == "identity") return identity_channel(d);
    if (name == "depolarizing")
      return depolarizing_channel(d, j.at("mu").get<double>(), j.value("q", 0), j.value("p", 0));
    throw std::invalid_argument("unknown named channel: " + name);
  }
  if (kind == "pauli") {
    const auto& p = j.at("p");
    if (p.size() != 4) throw std::invalid_argument("pauli channel needs 4 probabilities");
    return pauli_channel(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>(),
                         p.at(3).get<double>());
  }
  throw std::invalid_argument("unknown channel kind: " + kind);
}

inline json to_json(const KrausChannel& ch) {
  json ks = json::array();
  for (const auto& k : ch.kraus) ks.push_back(to_json(k));
  return json{{"kind", "kraus"},
              {"in_dim", ch.in_dim()},
              {"out_dim", ch.out_dim()},
              {"kraus", std::move(ks)}};
}

//==============================================================================
// Scenarios and bipartite states
//==============================================================================

/// {"A": label, "marginals": [{"B": label, "state": matrix}, ...]}
inline MarginalScenario scenario_from_json(const json& j) {
  const SystemLabel a = label_from_json(j.at("A"));
  std::vector<SystemLabel> bs;
  std::vector<DensityOperator> marginals;
  for (const auto& entry : j.at("marginals")) {
    SystemLabel b = label_from_json(entry.at("B"));
    Matrix m = matrix_from_json(entry.at("state"));
    bs.push_back(b);
    marginals.emplace_back(std::vector<SystemLabel>{a, b}, std::move(m));
  }
  return MarginalScenario(a, std::move(bs), std::move(marginals));
}

inline json to_json(const MarginalScenario& s) {
  json marginals = json::array();
  for (std::size_t k = 0; k < s.size(); ++k)
    marginals.push_back(json{{"B", to_json(s.Bs[k])}, {"state", to_json(s.marginals[k].matrix)}});
  return json{{"A", to_json(s.A)}, {"marginals", std::move(marginals)}};
}

/// {"A": label, "B": label, "state": matrix}
inline DensityOperator bipartite_state_from_json(const json& j) {
  const SystemLabel a = label_from_json(j.at("A"));
  const SystemLabel b = label_from_json(j.at("B"));
  return DensityOperator({a, b}, matrix_from_json(j.at("state")));
}

//==============================================================================
// Results
//==============================================================================

inline json to_json(const FeasibilityVerdict& v, bool include_matrices) {
  json j{{"status", to_string(v.status)},
         {"violation", v.violation},
         {"gap", v.gap},
         {"diagnostics", v.diagnostics}};
  if (include_matrices) {
    if (v.joint) j["joint"] = to_json(v.joint->matrix);
    if (v.certificate) {
      json blocks = json::array();
      for (const auto& b : v.certificate_blocks) blocks.push_back(to_json(b.matrix));
      j["certificate"] = std::move(blocks);
    }
  }
  return j;
}

inline json to_json(const RobustnessResult& r, bool include_matrices) {
  json j{{"status", r.ok ? "ok" : "ambiguous"},
         {"t", r.t},
         {"gap", r.gap},
         {"free", r.free_description},
         {"diagnostics", r.diagnostics}};
  if (include_matrices) {
    json noise = json::array();
    for (const auto& n : r.noise) noise.push_back(to_json(n.matrix));
    j["noise"] = std::move(noise);
    json witness = json::array();
    for (const auto& w : r.witness_blocks) witness.push_back(to_json(w.matrix));
    j["witness"] = std::move(witness);
    if (r.joint) j["joint"] = to_json(r.joint->matrix);
  }
  return j;
}

/// CLI-facing analytic verdict:
/// {"compatible": bool|null, "certificate": {...}|null, "margin_to_boundary": real}
inline json to_json(const PauliCompatResult& r) {
  json j;
  if (r.verdict == CompatVerdict::Boundary)
    j["compatible"] = nullptr;
  else
    j["compatible"] = r.verdict == CompatVerdict::Compatible;
  if (r.certificate)
    j["certificate"] = json{{"lambda", r.certificate->lambda},
                            {"mu", r.certificate->mu},
                            {"nu", r.certificate->nu},
                            {"min_eig", r.certificate->min_eig}};
  else
    j["certificate"] = nullptr;
  j["margin_to_boundary"] = r.margin;
  return j;
}

//==============================================================================
// Games
//==============================================================================

/// {"alice": [effect matrices], "bob": [effect matrices], "rewards": [[...]]}
inline json to_json(const CorrelationGame& g) {
  json alice = json::array(), bob = json::array(), rewards = json::array();
  for (const auto& e : g.alice.effects) alice.push_back(to_json(e.matrix));
  for (const auto& e : g.bob.effects) bob.push_back(to_json(e.matrix));
  for (long a = 0; a < g.rewards.rows(); ++a) {
    json row = json::array();
    for (long b = 0; b < g.rewards.cols(); ++b) row.push_back(g.rewards(a, b));
    rewards.push_back(std::move(row));
  }
  return json{{"alice", std::move(alice)}, {"bob", std::move(bob)}, {"rewards", std::move(rewards)}};
}

inline CorrelationGame game_from_json(const json& j) {
  auto effects_of = [](const json& arr, const SystemLabel& label) {
    std::vector<HermitianOperator> effects;
    for (const auto& e : arr)
      effects.emplace_back(std::vector<SystemLabel>{label}, matrix_from_json(e));
    return Povm(std::move(effects));
  };
  const auto& alice_arr = j.at("alice");
  const auto& bob_arr = j.at("bob");
  const int da = int(matrix_from_json(alice_arr.at(0)).rows());
  const int db = int(matrix_from_json(bob_arr.at(0)).rows());
  Povm alice = effects_of(alice_arr, {"A", da});
  Povm bob = effects_of(bob_arr, {"B", db});
  const auto& rj = j.at("rewards");
  RealMatrix rewards(long(rj.size()), long(rj.at(0).size()));
  for (long a = 0; a < rewards.rows(); ++a)
    for (long b = 0; b < rewards.cols(); ++b) rewards(a, b) = rj.at(std::size_t(a)).at(std::size_t(b)).get<double>();
  return CorrelationGame(std::move(alice), std::move(bob), std::move(rewards));
}

//==============================================================================
// Region CSV
//==============================================================================

/// Fixed format `mu,nu,exact,entropic` with 6-decimal coordinates; row order
/// is row-major in mu then nu, so reruns are byte identical.
inline void write_region_csv(const std::vector<RegionPoint>& points, std::ostream& os) {
  os << "mu,nu,exact,entropic\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%d,%d\n", p.mu, p.nu, p.exact ? 1 : 0,
                  p.entropic ? 1 : 0);
    os << buf;
  }
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace qmarginal::io
