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

#include "qmarginal/marginal.hpp"

namespace qmarginal {

//==============================================================================
// Correlation games
//==============================================================================

/// Local POVMs for the two players plus a real reward per outcome pair.
/// The induced operator W_G = sum_ab w_ab M_a (x) N_b reproduces the payoff
/// as tr[rho W_G].
struct CorrelationGame {
  Povm alice;
  Povm bob;
  RealMatrix rewards;

  CorrelationGame(Povm a, Povm b, RealMatrix w)
      : alice(std::move(a)), bob(std::move(b)), rewards(std::move(w)) {
    if (rewards.rows() != long(alice.effects.size()) ||
        rewards.cols() != long(bob.effects.size()))
      throw std::invalid_argument("reward table shape must match the outcome counts");
  }
};

inline HermitianOperator game_operator(const CorrelationGame& g) {
  std::vector<SystemLabel> factors = g.alice.factors();
  factors.insert(factors.end(), g.bob.factors().begin(), g.bob.factors().end());
  Matrix w = Matrix::Zero(g.alice.dim() * g.bob.dim(), g.alice.dim() * g.bob.dim());
  for (long a = 0; a < g.rewards.rows(); ++a)
    for (long b = 0; b < g.rewards.cols(); ++b)
      w += g.rewards(a, b) * kron(g.alice.effects[std::size_t(a)].matrix,
                                  g.bob.effects[std::size_t(b)].matrix);
  return HermitianOperator(std::move(factors), std::move(w));
}

/// Expected reward sum_ab w_ab tr[(M_a (x) N_b) rho].
inline double payoff(const DensityOperator& rho, const CorrelationGame& g) {
  if (rho.dim() != g.alice.dim() * g.bob.dim())
    throw std::invalid_argument("state dimension does not match the game");
  double total = 0;
  for (long a = 0; a < g.rewards.rows(); ++a)
    for (long b = 0; b < g.rewards.cols(); ++b)
      total += g.rewards(a, b) *
               inner(kron(g.alice.effects[std::size_t(a)].matrix,
                          g.bob.effects[std::size_t(b)].matrix),
                     rho.matrix);
  return total;
}

/// Affinely rescale the rewards so the payoff ranges over [0,1] as the
/// shared state varies; the extrema are the spectral extrema of W_G.
/// Rejects games whose payoff is constant.
inline CorrelationGame canonicalize(const CorrelationGame& g) {
  const RealVector ev = hermitian_eigenvalues(game_operator(g).matrix);
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (hi - lo <= 1e-12) throw std::invalid_argument("degenerate game: constant payoff");
  // Shifting every reward by s shifts W_G by s I (POVM completeness).
  RealMatrix rescaled = (g.rewards.array() - lo) / (hi - lo);
  return CorrelationGame(g.alice, g.bob, std::move(rescaled));
}

//==============================================================================
// Witness decomposition into a game
//==============================================================================

/// A fixed informationally complete POVM with d^2 effects: Weyl displacements
/// of a deterministic full-rank fiducial state, M_qp = W(q,p) phi W(q,p)^dag / d.
inline Povm ic_povm(const SystemLabel& label) {
  const int d = label.dim;
  Vector v(d);
  const Complex beta = 0.8 * std::exp(Complex(0, 0.9));
  for (int j = 0; j < d; ++j) v(j) = std::pow(beta, j);
  v /= v.norm();
  const Matrix fiducial =
      0.5 * (v * v.adjoint()).eval() + 0.5 * Matrix::Identity(d, d) / double(d);
  std::vector<HermitianOperator> effects;
  for (int q = 0; q < d; ++q)
    for (int p = 0; p < d; ++p) {
      const Matrix w = weyl(q, p, d);
      effects.emplace_back(std::vector<SystemLabel>{label},
                           Matrix(w * fiducial * w.adjoint() / double(d)));
    }
  Povm povm(std::move(effects));
  // Informational completeness check: the effects must span the Hermitian
  // operator space.
  const auto basis = hermitian_basis(d);
  RealMatrix gram(d * d, d * d);
  for (int i = 0; i < d * d; ++i)
    for (int j = 0; j < d * d; ++j)
      gram(i, j) = inner(basis[std::size_t(i)], povm.effects[std::size_t(j)].matrix);
  Eigen::ColPivHouseholderQR<RealMatrix> qr(gram);
  if (qr.rank() < d * d)
    throw std::runtime_error("fiducial construction failed to be informationally complete");
  return povm;
}

/// Decompose a PSD bipartite operator as W = sum_ab w_ab M_a (x) N_b with
/// fixed local IC-POVMs; the rewards may be negative. The reconstruction
/// residual is guaranteed below 1e-8.
inline CorrelationGame witness_to_game(const HermitianOperator& w) {
  if (w.factors.size() != 2)
    throw std::invalid_argument("witness must live on two labeled factors");
  if (!is_psd(w, 1e-7)) throw std::invalid_argument("witness must be positive semidefinite");
  Povm alice = ic_povm(w.factors[0]);
  Povm bob = ic_povm(w.factors[1]);
  const int ka = int(alice.effects.size()), kb = int(bob.effects.size());
  const auto basis = hermitian_basis(int(w.dim()));
  RealMatrix system(w.dim() * w.dim(), ka * kb);
  RealVector rhs(w.dim() * w.dim());
  for (long r = 0; r < long(basis.size()); ++r) rhs(r) = inner(basis[std::size_t(r)], w.matrix);
  for (int a = 0; a < ka; ++a)
    for (int b = 0; b < kb; ++b) {
      const Matrix prod =
          kron(alice.effects[std::size_t(a)].matrix, bob.effects[std::size_t(b)].matrix);
      for (long r = 0; r < long(basis.size()); ++r)
        system(r, a * kb + b) = inner(basis[std::size_t(r)], prod);
    }
  const RealVector omega = Eigen::ColPivHouseholderQR<RealMatrix>(system).solve(rhs);
  RealMatrix rewards(ka, kb);
  for (int a = 0; a < ka; ++a)
    for (int b = 0; b < kb; ++b) rewards(a, b) = omega(a * kb + b);
  CorrelationGame game(std::move(alice), std::move(bob), std::move(rewards));
  if ((game_operator(game).matrix - w.matrix).cwiseAbs().maxCoeff() > 1e-8)
    throw std::runtime_error("witness decomposition residual above 1e-8");
  return game;
}

inline double reconstruction_residual(const HermitianOperator& w, const CorrelationGame& g) {
  return (game_operator(g).matrix - w.matrix).cwiseAbs().maxCoeff();
}

//==============================================================================
// Robustness as a game advantage
//==============================================================================

struct GameAdvantage {
  CorrelationGame game;
  double ratio = 0;  // payoff(rho) / max payoff over the free set
  RobustnessResult robustness;
};

/// Build the correlation game realizing the robustness of rho against the
/// free set: the dual witness is decomposed into local POVMs and rewards,
/// and the achieved advantage ratio equals 1 + t up to solver accuracy.
inline GameAdvantage game_advantage(const DensityOperator& rho, const FreeSetSpec& free,
                                    const SolveOptions& opts = {}) {
  RobustnessResult rr = generalized_robustness(rho, free, opts);
  if (!rr.ok) throw std::runtime_error("robustness solve failed: " + rr.diagnostics);
  CorrelationGame game = witness_to_game(rr.witness_blocks.front());
  const double num = payoff(rho, game);
  const double den = free_set_maximum(game_operator(game), free, opts);
  return GameAdvantage{std::move(game), num / den, std::move(rr)};
}

//==============================================================================
// Direct-sum games over marginal scenarios
//==============================================================================

struct DirectSumEvaluation {
  std::vector<CorrelationGame> games;
  std::vector<double> block_payoffs;
  double total = 0;
  double free_maximum = 0;  // best total payoff over compatible consistent scenarios
  double ratio = 0;
};

/// Treat the scenario as a direct sum of shared states: decompose one PSD
/// witness block per marginal into a game, sum the block payoffs, and
/// compare against the best compatible scenario with the same margin.
/// With the dual blocks of consistent_robustness the ratio is 1 + t.
inline DirectSumEvaluation direct_sum_game(const MarginalScenario& scenario,
                                           const std::vector<HermitianOperator>& witness_blocks,
                                           const SolveOptions& opts = {}) {
  if (witness_blocks.size() != scenario.size())
    throw std::invalid_argument("one witness block per marginal required");
  DirectSumEvaluation eval;
  std::vector<HermitianOperator> rebuilt;
  for (std::size_t k = 0; k < witness_blocks.size(); ++k) {
    CorrelationGame g = witness_to_game(witness_blocks[k]);
    eval.block_payoffs.push_back(payoff(scenario.marginals[k], g));
    eval.total += eval.block_payoffs.back();
    rebuilt.push_back(game_operator(g));
    eval.games.push_back(std::move(g));
  }
  eval.free_maximum = consistent_set_maximum(rebuilt, scenario, opts);
  eval.ratio = eval.total / eval.free_maximum;
  return eval;
}

}  // namespace qmarginal
