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

#include "qmarginal/analytic.hpp"
#include "qmarginal/games.hpp"
#include "test_helpers.hpp"

using namespace qmtest;

namespace {

const SystemLabel kA{"A", 2}, kB{"B", 2};

Povm z_measurement(const SystemLabel& label) {
  Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
  p0(0, 0) = 1;
  p1(1, 1) = 1;
  return Povm({HermitianOperator({label}, p0), HermitianOperator({label}, p1)});
}

CorrelationGame random_game(std::mt19937_64& rng) {
  Povm alice = ic_povm(kA), bob = ic_povm(kB);
  std::normal_distribution<double> g;
  RealMatrix rewards(long(alice.effects.size()), long(bob.effects.size()));
  for (long a = 0; a < rewards.rows(); ++a)
    for (long b = 0; b < rewards.cols(); ++b) rewards(a, b) = g(rng);
  return CorrelationGame(std::move(alice), std::move(bob), std::move(rewards));
}

/// Sample a two-extendible two-qubit state using the closed-form membership
/// test: draw random states and pull toward white noise until extendible.
DensityOperator sample_two_extendible(std::mt19937_64& rng) {
  while (true) {
    DensityOperator rho = random_density(rng, {kA, kB});
    if (qubit_sym_ext(rho)) return rho;
    // binary search for the extendibility threshold toward I/4
    double lo = 0, hi = 1;
    const Matrix noise = Matrix::Identity(4, 4) / 4.0;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      DensityOperator cand({kA, kB},
                           Matrix((1 - mid) * rho.matrix + mid * noise));
      (qubit_sym_ext(cand) ? hi : lo) = mid;
    }
    const double safely_inside = std::min(1.0, hi + 0.01);
    return DensityOperator({kA, kB},
                           Matrix((1 - safely_inside) * rho.matrix + safely_inside * noise));
  }
}

}  // namespace

TEST_CASE("payoff evaluation", "[games]") {
  SECTION("constant rewards pay the constant on every state") {
    std::mt19937_64 rng(3);
    Povm alice = z_measurement(kA), bob = z_measurement(kB);
    CorrelationGame g(alice, bob, RealMatrix::Constant(2, 2, 0.7));
    for (int trial = 0; trial < 5; ++trial)
      CHECK(payoff(random_density(rng, {kA, kB}), g) == Catch::Approx(0.7).margin(1e-12));
  }

  SECTION("correlation game on the maximally entangled state: explicit sum") {
    CorrelationGame g(z_measurement(kA), z_measurement(kB), RealMatrix::Identity(2, 2));
    const auto bell = bell_state(kA, kB);
    // oracle: sum_ab w_ab <ab|rho|ab> over the four outcomes
    double oracle = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double w = a == b ? 1.0 : 0.0;
        oracle += w * bell.matrix(a * 2 + b, a * 2 + b).real();
      }
    CHECK(oracle == Catch::Approx(1.0).margin(1e-12));
    CHECK(payoff(bell, g) == Catch::Approx(oracle).margin(1e-12));
  }

  SECTION("linear in the state") {
    std::mt19937_64 rng(5);
    const auto g = random_game(rng);
    const auto rho = random_density(rng, {kA, kB});
    const auto sigma = random_density(rng, {kA, kB});
    const double alpha = 0.35;
    DensityOperator mix({kA, kB}, Matrix(alpha * rho.matrix + (1 - alpha) * sigma.matrix));
    CHECK(payoff(mix, g) ==
          Catch::Approx(alpha * payoff(rho, g) + (1 - alpha) * payoff(sigma, g)).margin(1e-10));
  }

  SECTION("matches the induced operator") {
    std::mt19937_64 rng(7);
    const auto g = random_game(rng);
    const auto w = game_operator(g);
    for (int trial = 0; trial < 5; ++trial) {
      const auto rho = random_density(rng, {kA, kB});
      REQUIRE(payoff(rho, g) == Catch::Approx(inner(w.matrix, rho.matrix)).margin(1e-10));
    }
  }
}

TEST_CASE("canonical form of a game", "[games]") {
  std::mt19937_64 rng(11);

  SECTION("extrema become zero and one") {
    const auto g = canonicalize(random_game(rng));
    const RealVector ev = hermitian_eigenvalues(game_operator(g).matrix);
    CHECK(ev.minCoeff() == Catch::Approx(0.0).margin(1e-10));
    CHECK(ev.maxCoeff() == Catch::Approx(1.0).margin(1e-10));
  }

  SECTION("idempotent") {
    const auto g = canonicalize(random_game(rng));
    const auto g2 = canonicalize(g);
    CHECK((g.rewards - g2.rewards).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("invariant under affine reward changes") {
    auto g = random_game(rng);
    const auto canon = canonicalize(g);
    CorrelationGame shifted(g.alice, g.bob, RealMatrix(2.5 * g.rewards.array() + 5.0));
    const auto canon2 = canonicalize(shifted);
    CHECK((canon.rewards - canon2.rewards).cwiseAbs().maxCoeff() < 1e-10);
  }

  SECTION("payoff ordering of states is preserved") {
    auto g = random_game(rng);
    const auto canon = canonicalize(g);
    const auto r1 = random_density(rng, {kA, kB});
    const auto r2 = random_density(rng, {kA, kB});
    CHECK((payoff(r1, g) < payoff(r2, g)) == (payoff(r1, canon) < payoff(r2, canon)));
  }

  SECTION("constant games are rejected") {
    CorrelationGame g(z_measurement(kA), z_measurement(kB), RealMatrix::Constant(2, 2, 1.0));
    CHECK_THROWS_AS(canonicalize(g), std::invalid_argument);
  }
}

TEST_CASE("witness decomposition into local POVMs", "[games]") {
  SECTION("the identity witness reconstructs exactly") {
    const HermitianOperator w({kA, kB}, Matrix::Identity(4, 4));
    const auto g = witness_to_game(w);
    CHECK(reconstruction_residual(w, g) < 1e-10);
  }

  SECTION("product witnesses reconstruct") {
    std::mt19937_64 rng(13);
    const Matrix ma = random_density_matrix(rng, 2);
    const Matrix mb = random_density_matrix(rng, 2);
    const HermitianOperator w({kA, kB}, kron(ma, mb));
    CHECK(reconstruction_residual(w, witness_to_game(w)) < 1e-9);
  }

  SECTION("random PSD witnesses on qubit and qutrit systems") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix g = random_ginibre(rng, 4, 4);
      const HermitianOperator w({kA, kB}, Matrix(g * g.adjoint() / 4.0));
      REQUIRE(reconstruction_residual(w, witness_to_game(w)) <= 1e-8);
    }
    const SystemLabel qutrit{"A", 3};
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix g = random_ginibre(rng, 6, 6);
      const HermitianOperator w({qutrit, kB}, Matrix(g * g.adjoint() / 6.0));
      REQUIRE(reconstruction_residual(w, witness_to_game(w)) <= 1e-8);
    }
  }

  SECTION("non-positive witnesses are rejected") {
    Matrix bad = Matrix::Identity(4, 4);
    bad(3, 3) = -1;
    CHECK_THROWS_AS(witness_to_game(HermitianOperator({kA, kB}, bad)), std::invalid_argument);
  }
}

TEST_CASE("game advantage realizes the robustness", "[games]") {
  SECTION("free states give ratio one") {
    const DensityOperator mixed({kA, kB}, Matrix::Identity(4, 4) / 4);
    const auto adv = game_advantage(mixed, FreeSetSpec::n_extendible(2));
    CHECK(adv.robustness.t <= 1e-7);
    CHECK(adv.ratio == Catch::Approx(1.0).margin(1e-5));
  }

  SECTION("the maximally entangled state achieves 1 + t") {
    const auto bell = bell_state(kA, kB);
    const auto adv = game_advantage(bell, FreeSetSpec::n_extendible(2));
    CHECK(adv.ratio == Catch::Approx(1.0 + adv.robustness.t).margin(1e-4));
    CHECK(adv.robustness.t > 0.1);
  }

  SECTION("sampled free states lower-bound the denominator") {
    std::mt19937_64 rng(19);
    const auto bell = bell_state(kA, kB);
    const auto adv = game_advantage(bell, FreeSetSpec::n_extendible(2));
    double best_free = 0;
    for (int i = 0; i < 1000; ++i)
      best_free = std::max(best_free, payoff(sample_two_extendible(rng), adv.game));
    CHECK(payoff(bell, adv.game) / best_free >= adv.ratio - 1e-3);
  }
}

TEST_CASE("direct-sum games over scenarios", "[games]") {
  const SystemLabel B1{"B1", 2}, B2{"B2", 2};

  SECTION("a single block reduces to the plain payoff") {
    std::mt19937_64 rng(23);
    const auto rho = random_density(rng, {kA, B1});
    MarginalScenario single(kA, {B1}, {rho});
    const Matrix g = random_ginibre(rng, 4, 4);
    const HermitianOperator w({kA, B1}, Matrix(g * g.adjoint() / 4.0));
    const auto eval = direct_sum_game(single, {w});
    CHECK(eval.block_payoffs.size() == 1);
    CHECK(eval.total == Catch::Approx(inner(w.matrix, rho.matrix)).margin(1e-8));
  }

  SECTION("two identical blocks double the total") {
    std::mt19937_64 rng(29);
    const Matrix sigma = random_density_matrix(rng, 2);
    const Matrix rho_a = random_density_matrix(rng, 2);
    DensityOperator m1({kA, B1}, kron(rho_a, sigma));
    DensityOperator m2({kA, B2}, kron(rho_a, sigma));
    MarginalScenario scenario(kA, {B1, B2}, {m1, m2});
    const Matrix g = random_ginibre(rng, 4, 4);
    const HermitianOperator w1({kA, B1}, Matrix(g * g.adjoint() / 4.0));
    const HermitianOperator w2({kA, B2}, w1.matrix);
    const auto eval = direct_sum_game(scenario, {w1, w2});
    CHECK(eval.total == Catch::Approx(2 * eval.block_payoffs[0]).margin(1e-8));
  }

  SECTION("consistent-robustness witnesses achieve the block ratio 1 + t") {
    DensityOperator m1({kA, B1}, bell_state(kA, B1).matrix);
    DensityOperator m2({kA, B2}, bell_state(kA, B1).matrix);
    MarginalScenario bells(kA, {B1, B2}, {m1, m2});
    const auto rr = consistent_robustness(bells);
    REQUIRE(rr.ok);
    const auto eval = direct_sum_game(bells, rr.witness_blocks);
    CHECK(eval.ratio == Catch::Approx(1.0 + rr.t).margin(1e-4));
  }
}
