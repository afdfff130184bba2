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

#include <catch2/catch_amalgamated.hpp>

#include "qmarginal/io.hpp"
#include "test_helpers.hpp"

using namespace qmtest;
namespace io = qmarginal::io;

TEST_CASE("matrix serialization round trip", "[io]") {
  std::mt19937_64 rng(3);
  const Matrix m = random_ginibre(rng, 3, 3);
  const Matrix back = io::matrix_from_json(io::to_json(m));
  CHECK(max_abs_diff(m, back) == 0.0);

  SECTION("row-major pair layout") {
    Matrix small(1, 2);
    small << Complex(1, 2), Complex(3, -4);
    const auto j = io::to_json(small);
    CHECK(j[0][0][0] == 1.0);
    CHECK(j[0][0][1] == 2.0);
    CHECK(j[0][1][1] == -4.0);
  }

  SECTION("plain numbers read as real entries") {
    const auto j = io::json::parse("[[1, 0],[0, 1]]");
    CHECK(max_abs_diff(io::matrix_from_json(j), Matrix::Identity(2, 2)) == 0.0);
  }

  SECTION("malformed input is rejected") {
    CHECK_THROWS_AS(io::matrix_from_json(io::json::parse("5")), std::invalid_argument);
    CHECK_THROWS_AS(io::matrix_from_json(io::json::parse("[[1],[1,2]]")), std::invalid_argument);
  }
}

TEST_CASE("label serialization", "[io]") {
  const SystemLabel l{"B2", 3};
  const auto j = io::to_json(l);
  CHECK(j.at("name") == "B2");
  CHECK(io::label_from_json(j) == l);
}

TEST_CASE("channel schemas", "[io]") {
  SECTION("explicit Kraus channels round trip through their action") {
    std::mt19937_64 rng(5);
    const auto phi = random_channel(rng, 2, 3, 2);
    const auto back = io::channel_from_json(io::to_json(phi));
    CHECK(channel_action_distance(phi, back) < 1e-12);
  }

  SECTION("named depolarizing channels expand to the defining map") {
    const auto j = io::json::parse(
        R"({"kind":"named","name":"depolarizing","d":3,"mu":0.4,"q":1,"p":2})");
    const auto phi = io::channel_from_json(j);
    CHECK(channel_action_distance(phi, depolarizing_channel(3, 0.4, 1, 2)) < 1e-12);
  }

  SECTION("identity and Pauli kinds") {
    CHECK(channel_action_distance(
              io::channel_from_json(io::json::parse(R"({"kind":"named","name":"identity","d":2})")),
              identity_channel(2)) < 1e-12);
    const auto phi = io::channel_from_json(
        io::json::parse(R"({"kind":"pauli","p":[0.4,0.3,0.2,0.1]})"));
    CHECK(channel_action_distance(phi, pauli_channel(0.4, 0.3, 0.2, 0.1)) < 1e-12);
  }

  SECTION("unknown kinds are rejected") {
    CHECK_THROWS_AS(io::channel_from_json(io::json::parse(R"({"kind":"mystery"})")),
                    std::invalid_argument);
  }
}

TEST_CASE("scenario schema", "[io]") {
  std::mt19937_64 rng(7);
  const SystemLabel A{"A", 2}, B1{"B1", 2}, B2{"B2", 2};
  const auto rho_a = random_density_matrix(rng, 2);
  const auto sigma = random_density_matrix(rng, 2);
  DensityOperator m1({A, B1}, kron(rho_a, sigma));
  DensityOperator m2({A, B2}, kron(rho_a, sigma));
  const MarginalScenario s(A, {B1, B2}, {m1, m2});
  const auto back = io::scenario_from_json(io::to_json(s));
  CHECK(back.size() == 2);
  CHECK(max_abs_diff(back.marginals[0].matrix, m1.matrix) == 0.0);
  CHECK(back.Bs[1].name == "B2");
}

TEST_CASE("game schema", "[io]") {
  std::mt19937_64 rng(11);
  const Matrix g = random_ginibre(rng, 4, 4);
  const HermitianOperator w({{"A", 2}, {"B", 2}}, Matrix(g * g.adjoint() / 4.0));
  const auto game = witness_to_game(w);
  const auto back = io::game_from_json(io::to_json(game));
  CHECK((back.rewards - game.rewards).cwiseAbs().maxCoeff() == 0.0);
  CHECK(max_abs_diff(game_operator(back).matrix, game_operator(game).matrix) < 1e-12);
}

TEST_CASE("verdict and robustness payloads", "[io]") {
  const SystemLabel A{"A", 2}, B1{"B1", 2}, B2{"B2", 2};
  DensityOperator m1({A, B1}, bell_state(A, B1).matrix);
  DensityOperator m2({A, B2}, bell_state(A, B1).matrix);
  const MarginalScenario bells(A, {B1, B2}, {m1, m2});

  const auto verdict = marginal_feasible(bells);
  const auto vj = io::to_json(verdict, true);
  CHECK(vj.at("status") == "infeasible");
  CHECK(vj.at("certificate").is_array());
  CHECK(vj.at("violation").get<double>() > 0.5);

  const auto rr = consistent_robustness(bells);
  const auto rj = io::to_json(rr, true);
  CHECK(rj.at("status") == "ok");
  CHECK(rj.at("t").get<double>() > 0.1);
  CHECK(rj.at("witness").size() == 2);
  // matrices parse back
  CHECK_NOTHROW(io::matrix_from_json(rj.at("witness").at(0)));
}

TEST_CASE("region CSV format", "[io]") {
  const auto pts = depol_region_scan(2, 3);
  std::ostringstream os;
  io::write_region_csv(pts, os);
  const std::string text = os.str();
  CHECK(text.substr(0, 23) == "mu,nu,exact,entropic\n0.");
  CHECK(text.find("0.500000,1.000000,1,1") != std::string::npos);
  // 9 data rows + header
  CHECK(std::count(text.begin(), text.end(), '\n') == 10);
}
