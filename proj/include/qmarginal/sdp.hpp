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

#include <limits>

#include "qmarginal/qobj.hpp"

namespace qmarginal::sdp {

//==============================================================================
// Problem description
//
// Primal:  minimize    sum_j <C_j, X_j>
//          subject to  sum_j <A_ij, X_j> = b_i,   X_j >= 0 (Hermitian PSD)
// Dual:    maximize    b^T y
//          subject to  Z_j = C_j - sum_i y_i A_ij >= 0
//
// All data matrices are Hermitian; <.,.> is the real Hilbert-Schmidt inner
// product. Blocks are dense; this is intended for the small problems that
// arise from low-dimensional marginal scenarios.
//==============================================================================

struct Options {
  double tol = 1e-9;          // relative feasibility and gap target
  int max_iter = 200;
  double step_fraction = 0.98;
  bool verbose = false;
};

enum class SolveStatus { Optimal, Inaccurate, IterationLimit, NumericalFailure };

struct Term {
  int block;
  Matrix coeff;
};

struct Constraint {
  std::vector<Term> terms;
  double rhs = 0.0;
};

struct Problem {
  std::vector<int> block_dims;
  std::vector<Matrix> objective;  // one Hermitian C_j per block
  std::vector<Constraint> constraints;
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<Matrix> x;
  std::vector<Matrix> z;
  RealVector y;
  double primal_objective = 0;
  double dual_objective = 0;
  double primal_infeasibility = 0;
  double dual_infeasibility = 0;
  double duality_gap = 0;  // normalized |p - d| / (1 + |p| + |d|)
  int iterations = 0;
};

namespace detail {

// Largest alpha with S + alpha dS >= 0 (exact via a generalized eigenvalue).
inline double max_step(const Matrix& s, const Matrix& ds) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) return 0.0;
  Matrix tmp = llt.matrixL().solve(ds);
  Matrix b = llt.matrixL().solve(tmp.adjoint()).adjoint();
  const double lmin = min_eigenvalue(hermitian_part(b));
  if (lmin >= -1e-14) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

}  // namespace detail

inline Solution solve(const Problem& prob, const Options& opt = {}) {
  const int nblocks = int(prob.block_dims.size());
  const int m = int(prob.constraints.size());
  if (int(prob.objective.size()) != nblocks)
    throw std::invalid_argument("objective block count mismatch");
  for (const auto& con : prob.constraints)
    for (const auto& t : con.terms)
      if (t.block < 0 || t.block >= nblocks ||
          t.coeff.rows() != prob.block_dims[std::size_t(t.block)])
        throw std::invalid_argument("constraint term block mismatch");

  // Per-block lists of (constraint index, coefficient) for the Schur build.
  std::vector<std::vector<std::pair<int, const Matrix*>>> by_block(static_cast<std::size_t>(nblocks));
  for (int i = 0; i < m; ++i)
    for (const auto& t : prob.constraints[std::size_t(i)].terms)
      by_block[std::size_t(t.block)].push_back({i, &t.coeff});

  RealVector b(m);
  for (int i = 0; i < m; ++i) b(i) = prob.constraints[std::size_t(i)].rhs;

  double total_dim = 0, data_scale = 1, b_scale = 0;
  for (int d : prob.block_dims) total_dim += d;
  for (const auto& c : prob.objective) data_scale = std::max(data_scale, c.norm());
  for (const auto& con : prob.constraints) {
    b_scale = std::max(b_scale, std::abs(con.rhs));
    for (const auto& t : con.terms) data_scale = std::max(data_scale, t.coeff.norm());
  }

  Solution sol;
  sol.y = RealVector::Zero(m);
  const double xi = std::max({10.0, std::sqrt(total_dim), 10.0 * b_scale});
  const double eta = std::max({10.0, std::sqrt(total_dim), 10.0 * data_scale});
  for (int j = 0; j < nblocks; ++j) {
    const int d = prob.block_dims[std::size_t(j)];
    sol.x.push_back(xi * Matrix::Identity(d, d));
    sol.z.push_back(eta * Matrix::Identity(d, d));
  }

  const double b_norm = b.norm();
  double c_norm = 0;
  for (const auto& c : prob.objective) c_norm = std::max(c_norm, c.norm());

  std::vector<Matrix> zinv(static_cast<std::size_t>(nblocks)), rd(static_cast<std::size_t>(nblocks));
  RealVector rp(m);

  // Iterates can degrade once mu reaches rounding level; keep the best one.
  Solution best;
  double best_score = std::numeric_limits<double>::infinity();
  auto score_of = [](const Solution& s) {
    return std::max({s.primal_infeasibility, s.dual_infeasibility, s.duality_gap});
  };
  auto finish = [&](SolveStatus fallback) -> Solution& {
    if (best_score < score_of(sol)) {
      const int iters = sol.iterations;
      sol = best;
      sol.iterations = iters;
    }
    if (sol.primal_infeasibility <= opt.tol && sol.dual_infeasibility <= opt.tol &&
        sol.duality_gap <= opt.tol)
      sol.status = SolveStatus::Optimal;
    else if (sol.primal_infeasibility < 1e-7 && sol.dual_infeasibility < 1e-7 &&
             sol.duality_gap < 1e-6)
      sol.status = SolveStatus::Inaccurate;
    else
      sol.status = fallback;
    return sol;
  };

  auto compute_residuals = [&]() {
    for (int i = 0; i < m; ++i) {
      double ax = 0;
      for (const auto& t : prob.constraints[std::size_t(i)].terms)
        ax += inner(t.coeff, sol.x[std::size_t(t.block)]);
      rp(i) = b(i) - ax;
    }
    for (int j = 0; j < nblocks; ++j) rd[std::size_t(j)] = prob.objective[std::size_t(j)] - sol.z[std::size_t(j)];
    for (int i = 0; i < m; ++i)
      for (const auto& t : prob.constraints[std::size_t(i)].terms)
        rd[std::size_t(t.block)] -= sol.y(i) * t.coeff;
  };

  auto objective_values = [&]() {
    sol.primal_objective = 0;
    for (int j = 0; j < nblocks; ++j)
      sol.primal_objective += inner(prob.objective[std::size_t(j)], sol.x[std::size_t(j)]);
    sol.dual_objective = b.dot(sol.y);
    sol.primal_infeasibility = rp.norm() / (1.0 + b_norm);
    double dinf = 0;
    for (const auto& r : rd) dinf = std::max(dinf, r.norm());
    sol.dual_infeasibility = dinf / (1.0 + c_norm);
    sol.duality_gap = std::abs(sol.primal_objective - sol.dual_objective) /
                      (1.0 + std::abs(sol.primal_objective) + std::abs(sol.dual_objective));
  };

  for (sol.iterations = 0; sol.iterations < opt.max_iter; ++sol.iterations) {
    compute_residuals();
    objective_values();
    if (score_of(sol) < best_score) {
      best_score = score_of(sol);
      best = sol;
    }
    double mu = 0;
    for (int j = 0; j < nblocks; ++j)
      mu += trace_product(sol.x[std::size_t(j)], sol.z[std::size_t(j)]).real();
    mu /= total_dim;

    if (sol.primal_infeasibility <= opt.tol && sol.dual_infeasibility <= opt.tol &&
        sol.duality_gap <= opt.tol) {
      sol.status = SolveStatus::Optimal;
      return sol;
    }
    if (mu < 1e-15) return finish(SolveStatus::Inaccurate);

    for (int j = 0; j < nblocks; ++j) {
      Eigen::LLT<Matrix> llt(sol.z[std::size_t(j)]);
      if (llt.info() != Eigen::Success) return finish(SolveStatus::NumericalFailure);
      const int d = prob.block_dims[std::size_t(j)];
      zinv[std::size_t(j)] = llt.solve(Matrix::Identity(d, d));
    }

    // Schur complement M_ik = sum_j Re tr[A_ij X_j A_kj Zinv_j], with a tiny
    // diagonal shift against the degeneracy of non-unique optimal faces.
    RealMatrix schur = RealMatrix::Zero(m, m);
    for (int j = 0; j < nblocks; ++j) {
      const auto& rows = by_block[std::size_t(j)];
      for (const auto& [k, ak] : rows) {
        const Matrix g = sol.x[std::size_t(j)] * (*ak) * zinv[std::size_t(j)];
        for (const auto& [i, ai] : rows) schur(i, k) += trace_product(*ai, g).real();
      }
    }
    schur.diagonal().array() += 1e-13 * schur.diagonal().cwiseAbs().mean();
    Eigen::PartialPivLU<RealMatrix> lu(schur);

    auto solve_schur = [&](const RealVector& rhs) -> RealVector {
      RealVector dy = lu.solve(rhs);
      if (!dy.allFinite() || (schur * dy - rhs).norm() > 1e-6 * (1.0 + rhs.norm()))
        throw std::runtime_error("singular Schur complement in interior-point step");
      return dy;
    };

    // Shared pieces: H_j = X_j Rd_j Zinv_j.
    std::vector<Matrix> h(static_cast<std::size_t>(nblocks));
    for (int j = 0; j < nblocks; ++j)
      h[std::size_t(j)] = sol.x[std::size_t(j)] * rd[std::size_t(j)] * zinv[std::size_t(j)];

    RealVector rhs(m);
    for (int i = 0; i < m; ++i) {
      double v = b(i);
      for (const auto& t : prob.constraints[std::size_t(i)].terms)
        v += trace_product(t.coeff, h[std::size_t(t.block)]).real();
      rhs(i) = v;
    }

    RealVector dy_aff;
    try {
      dy_aff = solve_schur(rhs);
    } catch (const std::runtime_error&) {
      return finish(SolveStatus::NumericalFailure);
    }

    std::vector<Matrix> dz_aff(static_cast<std::size_t>(nblocks)), dx_aff(static_cast<std::size_t>(nblocks));
    for (int j = 0; j < nblocks; ++j) dz_aff[std::size_t(j)] = rd[std::size_t(j)];
    for (int i = 0; i < m; ++i)
      for (const auto& t : prob.constraints[std::size_t(i)].terms)
        dz_aff[std::size_t(t.block)] -= dy_aff(i) * t.coeff;
    for (int j = 0; j < nblocks; ++j) {
      dx_aff[std::size_t(j)] = hermitian_part(
          -sol.x[std::size_t(j)] -
          sol.x[std::size_t(j)] * dz_aff[std::size_t(j)] * zinv[std::size_t(j)]);
    }

    double ap_aff = 1.0, ad_aff = 1.0;
    for (int j = 0; j < nblocks; ++j) {
      ap_aff = std::min(ap_aff, detail::max_step(sol.x[std::size_t(j)], dx_aff[std::size_t(j)]));
      ad_aff = std::min(ad_aff, detail::max_step(sol.z[std::size_t(j)], dz_aff[std::size_t(j)]));
    }

    double mu_aff = 0;
    for (int j = 0; j < nblocks; ++j)
      mu_aff += trace_product(sol.x[std::size_t(j)] + ap_aff * dx_aff[std::size_t(j)],
                              sol.z[std::size_t(j)] + ad_aff * dz_aff[std::size_t(j)])
                    .real();
    mu_aff /= total_dim;
    double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3);
    sigma = std::clamp(sigma, 1e-10, 0.99);
    const double nu = sigma * mu;

    // Corrector right-hand side.
    for (int i = 0; i < m; ++i) {
      double v = b(i);
      for (const auto& t : prob.constraints[std::size_t(i)].terms) {
        const int j = t.block;
        const Matrix corr = (dx_aff[std::size_t(j)] * dz_aff[std::size_t(j)]) * zinv[std::size_t(j)];
        v += trace_product(t.coeff, h[std::size_t(j)] + corr).real();
        v -= nu * trace_product(t.coeff, zinv[std::size_t(j)]).real();
      }
      rhs(i) = v;
    }

    RealVector dy;
    try {
      dy = solve_schur(rhs);
    } catch (const std::runtime_error&) {
      return finish(SolveStatus::NumericalFailure);
    }

    std::vector<Matrix> dz(static_cast<std::size_t>(nblocks)), dx(static_cast<std::size_t>(nblocks));
    for (int j = 0; j < nblocks; ++j) dz[std::size_t(j)] = rd[std::size_t(j)];
    for (int i = 0; i < m; ++i)
      for (const auto& t : prob.constraints[std::size_t(i)].terms)
        dz[std::size_t(t.block)] -= dy(i) * t.coeff;
    for (int j = 0; j < nblocks; ++j) {
      Matrix step = nu * zinv[std::size_t(j)] - sol.x[std::size_t(j)] -
                    (dx_aff[std::size_t(j)] * dz_aff[std::size_t(j)]) * zinv[std::size_t(j)] -
                    sol.x[std::size_t(j)] * dz[std::size_t(j)] * zinv[std::size_t(j)];
      dx[std::size_t(j)] = hermitian_part(step);
    }

    double ap = 1.0, ad = 1.0;
    for (int j = 0; j < nblocks; ++j) {
      ap = std::min(ap, opt.step_fraction * detail::max_step(sol.x[std::size_t(j)], dx[std::size_t(j)]));
      ad = std::min(ad, opt.step_fraction * detail::max_step(sol.z[std::size_t(j)], dz[std::size_t(j)]));
    }
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);
    if (ap < 1e-10 && ad < 1e-10) return finish(SolveStatus::Inaccurate);

    for (int j = 0; j < nblocks; ++j) {
      sol.x[std::size_t(j)] = hermitian_part(sol.x[std::size_t(j)] + ap * dx[std::size_t(j)]);
      sol.z[std::size_t(j)] = hermitian_part(sol.z[std::size_t(j)] + ad * dz[std::size_t(j)]);
    }
    sol.y += ad * dy;
  }

  compute_residuals();
  objective_values();
  if (score_of(sol) < best_score) {
    best_score = score_of(sol);
    best = sol;
  }
  return finish(SolveStatus::IterationLimit);
}

}  // namespace qmarginal::sdp
