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

#include "test_helpers.hpp"

using namespace qmtest;

TEST_CASE("canonical purification", "[choi]") {
  SystemLabel A{"A", 2};

  SECTION("maximally mixed qubit purifies to the maximally entangled vector") {
    const auto margin = canonical_purification(maximally_mixed(A));
    Vector omega0 = Vector::Zero(4);
    omega0(0) = omega0(3) = 1.0 / std::sqrt(2.0);
    CHECK((margin.omega - omega0).norm() < 1e-12);
  }

  SECTION("diagonal margin keeps the computational basis") {
    Matrix d(2, 2);
    d << 0.7, 0, 0, 0.3;
    const auto margin = canonical_purification(DensityOperator({A}, d));
    Vector expected = Vector::Zero(4);
    expected(0) = std::sqrt(0.7);
    expected(3) = std::sqrt(0.3);
    CHECK((margin.omega - expected).norm() < 1e-12);
    CHECK(margin.eigenvalues(0) == Catch::Approx(0.7));
  }

  SECTION("purification margins reproduce the state") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const auto rho = random_full_rank_density(rng, {{"A", 3}});
      const auto margin = canonical_purification(rho);
      CHECK(std::abs(margin.eigenvalues.sum() - 1.0) < 1e-12);
      const Matrix proj = margin.omega * margin.omega.adjoint();
      const Matrix first = partial_trace_matrix(proj, {3, 3}, {true, false});
      const Matrix second = partial_trace_matrix(proj, {3, 3}, {false, true});
      CHECK(max_abs_diff(first, rho.matrix) < 1e-9);
      CHECK(max_abs_diff(second, rho.matrix) < 1e-9);
    }
  }

  SECTION("rank-deficient margins are rejected with guidance") {
    Matrix p = Matrix::Zero(2, 2);
    p(0, 0) = 1;
    CHECK_THROWS_WITH(canonical_purification(DensityOperator({A}, p)),
                      Catch::Matchers::ContainsSubstring("restrict_support"));
  }

  SECTION("construction is deterministic") {
    std::mt19937_64 rng(5);
    const auto rho = random_full_rank_density(rng, {{"A", 4}});
    const auto m1 = canonical_purification(rho);
    const auto m2 = canonical_purification(rho);
    CHECK((m1.omega - m2.omega).norm() == 0.0);
  }

  SECTION("support restriction produces a usable full-rank state") {
    Matrix p = Matrix::Zero(3, 3);
    p(0, 0) = 0.6;
    p(1, 1) = 0.4;
    const auto restricted = restrict_support(DensityOperator({{"A", 3}}, p));
    CHECK(restricted.state.dim() == 2);
    CHECK_NOTHROW(canonical_purification(restricted.state));
    const Matrix back = restricted.isometry *
                        restricted.state.matrix * restricted.isometry.adjoint();
    CHECK(max_abs_diff(back, p) < 1e-12);
  }
}

TEST_CASE("Choi states of channels", "[choi]") {
  SystemLabel A{"A", 2};
  const auto mixed_margin = canonical_purification(maximally_mixed(A));

  SECTION("identity channel gives the maximally entangled projector") {
    const auto cs = choi_state(identity_channel(2), mixed_margin);
    CHECK(max_abs_diff(cs.state.matrix, mixed_margin.omega * mixed_margin.omega.adjoint()) <
          1e-12);
  }

  SECTION("depolarizing channel mixes the projector with white noise") {
    for (double mu : {0.25, 1.0 / 3.0, 0.8}) {
      const auto cs = choi_state(depolarizing_channel(2, mu), mixed_margin);
      const Matrix expected =
          (1 - mu) * (mixed_margin.omega * mixed_margin.omega.adjoint()).eval() +
          mu * Matrix::Identity(4, 4) / 4.0;
      CHECK(max_abs_diff(cs.state.matrix, expected) < 1e-12);
    }
  }

  SECTION("margin constraint holds for random channels and margins") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      const auto rho = random_full_rank_density(rng, {A});
      const auto margin = canonical_purification(rho);
      const auto phi = random_channel(rng, 2, 3, 1 + int(rng() % 4));
      const auto cs = choi_state(phi, margin);
      const Matrix red =
          partial_trace_matrix(cs.state.matrix, factor_dims(cs.state.factors), {true, false});
      CHECK(max_abs_diff(red, rho.matrix) < 1e-10);
    }
  }
}

TEST_CASE("Choi channels invert Choi states", "[choi]") {
  SystemLabel A{"A", 2}, B{"B", 2};
  const auto mixed_margin = canonical_purification(maximally_mixed(A));

  SECTION("product Choi state gives the constant channel") {
    std::mt19937_64 rng(11);
    const auto sigma = random_density(rng, {B});
    const auto state = tensor({maximally_mixed(A), sigma});
    const auto phi = choi_channel(ChoiState(mixed_margin, state));
    const auto rho_in = random_density(rng, {A});
    CHECK(max_abs_diff(apply_channel(phi, rho_in.matrix), sigma.matrix) < 1e-10);
  }

  SECTION("maximally entangled Choi state gives the identity channel") {
    const ChoiState cs(mixed_margin,
                       DensityOperator({A, B}, mixed_margin.omega * mixed_margin.omega.adjoint()));
    const auto phi = choi_channel(cs);
    CHECK(channel_action_distance(phi, identity_channel(2)) < 1e-10);
  }

  SECTION("round trips on random instances") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
      const auto rho = random_full_rank_density(rng, {A});
      const auto margin = canonical_purification(rho);

      // channel -> state -> channel
      const auto phi = random_channel(rng, 2, 2, 1 + int(rng() % 4));
      const auto cs = choi_state(phi, margin);
      CHECK(channel_action_distance(choi_channel(cs), phi) < 1e-8);

      // state -> channel -> state
      const auto state = random_density(rng, {A, B});
      const Matrix state_margin =
          partial_trace_matrix(state.matrix, {2, 2}, {true, false});
      const auto fixed_margin =
          canonical_purification(DensityOperator({A}, state_margin));
      const ChoiState cs2(fixed_margin, state);
      const auto back = choi_state(choi_channel(cs2), fixed_margin);
      CHECK(max_abs_diff(back.state.matrix, state.matrix) < 1e-8);
    }
  }

  SECTION("the inversion formula route agrees with the Kraus route") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
      const auto rho = random_full_rank_density(rng, {A});
      const auto margin = canonical_purification(rho);
      const auto phi = random_channel(rng, 2, 2, 1 + int(rng() % 4));
      const auto cs = choi_state(phi, margin);
      const auto recovered = choi_channel(cs);
      for (const auto& h : hermitian_basis(2))
        REQUIRE(max_abs_diff(apply_choi(cs, h), apply_channel(recovered, h)) < 1e-9);
    }
  }

  SECTION("the dualism is affine") {
    std::mt19937_64 rng(19);
    const auto rho = random_full_rank_density(rng, {A});
    const auto margin = canonical_purification(rho);
    const auto phi = random_channel(rng, 2, 2, 2);
    const auto psi = random_channel(rng, 2, 2, 3);
    const double alpha = 0.3;
    std::vector<Matrix> mixed_kraus;
    for (const auto& k : phi.kraus) mixed_kraus.push_back(std::sqrt(alpha) * k);
    for (const auto& k : psi.kraus) mixed_kraus.push_back(std::sqrt(1 - alpha) * k);
    const KrausChannel mix(phi.in_label, phi.out_label, std::move(mixed_kraus));
    const Matrix expected = alpha * choi_state(phi, margin).state.matrix +
                            (1 - alpha) * choi_state(psi, margin).state.matrix;
    CHECK(max_abs_diff(choi_state(mix, margin).state.matrix, expected) < 1e-10);
  }
}

TEST_CASE("orthogonal Kraus spectra", "[choi]") {
  SystemLabel A{"A", 2};
  const auto mixed_margin = canonical_purification(maximally_mixed(A));

  SECTION("a unitary channel has a single Kraus weight") {
    std::mt19937_64 rng(23);
    const Matrix u = random_unitary(rng, 2);
    const KrausChannel phi(A, {"B", 2}, {u});
    const auto spec = orthogonal_kraus(choi_state(phi, mixed_margin));
    REQUIRE(spec.lambdas.size() == 1);
    CHECK(spec.lambdas(0) == Catch::Approx(1.0).margin(1e-10));
  }

  SECTION("depolarizing spectrum in closed form") {
    const double mu = 0.4;
    const auto spec = orthogonal_kraus(choi_state(depolarizing_channel(2, mu), mixed_margin));
    REQUIRE(spec.lambdas.size() == 4);
    CHECK(spec.lambdas(0) == Catch::Approx(1 - 0.75 * mu).margin(1e-10));
    for (int i = 1; i < 4; ++i) CHECK(spec.lambdas(i) == Catch::Approx(mu / 4).margin(1e-10));
  }

  SECTION("random channels satisfy the spectrum invariants") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
      const auto rho = random_full_rank_density(rng, {A});
      const auto margin = canonical_purification(rho);
      const auto phi = random_channel(rng, 2, 2, 1 + int(rng() % 4));
      const auto spec = orthogonal_kraus(choi_state(phi, margin));
      CHECK(std::abs(spec.lambdas.sum() - 1.0) < 1e-9);
      for (long i = 0; i < spec.lambdas.size(); ++i) {
        CHECK(spec.lambdas(i) > 0.0);
        CHECK(spec.lambdas(i) <= 1.0 + 1e-12);
        // lambda_i = tr[K_i rho K_i^dag]
        const double w =
            (spec.kraus[std::size_t(i)] * rho.matrix * spec.kraus[std::size_t(i)].adjoint())
                .trace()
                .real();
        CHECK(w == Catch::Approx(spec.lambdas(i)).margin(1e-9));
        for (long j = 0; j < i; ++j) {
          const Complex overlap =
              (rho.matrix * spec.kraus[std::size_t(i)].adjoint() * spec.kraus[std::size_t(j)])
                  .trace();
          REQUIRE(std::abs(overlap) < 1e-8);
        }
      }
    }
  }
}

TEST_CASE("channel constructors", "[choi]") {
  SECTION("Kraus operators must be trace preserving") {
    Matrix half = Matrix::Identity(2, 2) / 2.0;
    CHECK_THROWS_AS(KrausChannel({"A", 2}, {"B", 2}, {half}), std::invalid_argument);
  }

  SECTION("depolarizing channel acts as its defining map") {
    std::mt19937_64 rng(31);
    for (int d : {2, 3}) {
      const double mu = 0.35;
      const auto phi = depolarizing_channel(d, mu, 1, 1);
      const Matrix rho = random_density_matrix(rng, d);
      const Matrix w = weyl(1, 1, d);
      const Matrix expected =
          (1 - mu) * w * rho * w.adjoint() + mu * Matrix::Identity(d, d) / double(d);
      CHECK(max_abs_diff(apply_channel(phi, rho), expected) < 1e-12);
    }
  }

  SECTION("Pauli channel acts as its defining map") {
    std::mt19937_64 rng(37);
    const auto phi = pauli_channel(0.4, 0.3, 0.2, 0.1);
    const Matrix rho = random_density_matrix(rng, 2);
    const Matrix expected = 0.4 * rho + 0.3 * pauli_x() * rho * pauli_x() +
                            0.2 * pauli_y() * rho * pauli_y() +
                            0.1 * pauli_z() * rho * pauli_z();
    CHECK(max_abs_diff(apply_channel(phi, rho), expected) < 1e-12);
  }
}
