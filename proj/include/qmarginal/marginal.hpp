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

#include <optional>
#include <sstream>

#include "qmarginal/choi.hpp"
#include "qmarginal/sdp.hpp"

namespace qmarginal {

//==============================================================================
// Scenarios and verdicts
//==============================================================================

/// Overlapping-marginal data: bipartite states rho_{A B_k} that share the
/// common margin rho_A on the overlap system.
struct MarginalScenario {
  SystemLabel A;
  std::vector<SystemLabel> Bs;
  std::vector<DensityOperator> marginals;  // marginals[k] lives on {A, Bs[k]}

  static constexpr double kMarginTol = 1e-8;

  MarginalScenario(SystemLabel a, std::vector<SystemLabel> bs,
                   std::vector<DensityOperator> margs)
      : A(std::move(a)), Bs(std::move(bs)), marginals(std::move(margs)) {
    if (Bs.empty() || Bs.size() != marginals.size())
      throw std::invalid_argument("scenario needs one marginal per B system");
    std::vector<SystemLabel> all = Bs;
    all.push_back(A);
    check_unique_names(all);
    for (std::size_t k = 0; k < Bs.size(); ++k) {
      const auto& m = marginals[k];
      if (m.factors.size() != 2 || !(m.factors[0] == A) || !(m.factors[1] == Bs[k]))
        throw std::invalid_argument("marginal factors must be {A, B_k} in order");
    }
    const Matrix ref = margin_of(0);
    for (std::size_t k = 1; k < Bs.size(); ++k)
      if ((margin_of(k) - ref).cwiseAbs().maxCoeff() > kMarginTol)
        throw std::invalid_argument("inconsistent common margin on A");
  }

  Matrix margin_of(std::size_t k) const {
    return partial_trace_matrix(marginals[k].matrix, factor_dims(marginals[k].factors),
                                {true, false});
  }

  DensityOperator common_margin() const { return DensityOperator({A}, margin_of(0)); }

  std::vector<SystemLabel> joint_factors() const {
    std::vector<SystemLabel> f{A};
    f.insert(f.end(), Bs.begin(), Bs.end());
    return f;
  }

  long joint_dim() const { return dim_product(joint_factors()); }
  std::size_t size() const { return Bs.size(); }
};

enum class Feasibility { Feasible, Infeasible, Ambiguous };

inline const char* to_string(Feasibility f) {
  switch (f) {
    case Feasibility::Feasible: return "feasible";
    case Feasibility::Infeasible: return "infeasible";
    default: return "ambiguous";
  }
}

/// Outcome of a marginal-feasibility decision. When infeasible, the
/// certificate is a block-diagonal operator over the marginal systems with
/// negative value on the given marginals but nonnegative value on the
/// margins of every joint state.
struct FeasibilityVerdict {
  Feasibility status = Feasibility::Ambiguous;
  std::optional<DensityOperator> joint;
  std::optional<HermitianOperator> certificate;
  std::vector<HermitianOperator> certificate_blocks;
  double gap = 0;
  double violation = 0;  // minimal total trace-norm margin violation
  std::string diagnostics;
};

struct SolveOptions {
  double solver_tol = 1e-9;
  double feas_tol = 1e-7;  // verdict threshold on violations / dual margins
  int dim_cap = 64;
  int max_iter = 200;
  bool symmetric_subspace_reduction = false;  // n = 2 extension solves only
};

/// How incompatibility is quantified: noise weight t >= 0 with optimal
/// mixing noise, the joint state certifying membership of the mixture, the
/// dual witness blocks, and the primal-dual gap of the underlying program.
struct RobustnessResult {
  double t = 0;
  std::vector<DensityOperator> noise;
  std::optional<DensityOperator> joint;
  std::vector<HermitianOperator> witness_blocks;
  double gap = 0;
  bool ok = false;
  std::string free_description;
  std::string diagnostics;
};

//==============================================================================
// Constraint assembly helpers
//==============================================================================

namespace detail {

/// Orthonormal Hermitian product basis {F_a (x) G_b} of a bipartite system.
/// Index 0 of either side is the normalized identity, so skipping b == 0
/// skips exactly the A-local components.
struct ProductBasis {
  std::vector<Matrix> f, g;
  int da, db;

  ProductBasis(int da_, int db_) : f(hermitian_basis(da_)), g(hermitian_basis(db_)),
                                   da(da_), db(db_) {}

  Matrix element(std::size_t a, std::size_t b) const { return kron(f[a], g[b]); }
};

inline std::string solver_note(const sdp::Solution& s) {
  std::ostringstream os;
  os << "solver ";
  switch (s.status) {
    case sdp::SolveStatus::Optimal: os << "optimal"; break;
    case sdp::SolveStatus::Inaccurate: os << "inaccurate"; break;
    case sdp::SolveStatus::IterationLimit: os << "iteration limit"; break;
    default: os << "numerical failure"; break;
  }
  os << " after " << s.iterations << " iterations"
     << "; pinf " << s.primal_infeasibility << ", dinf " << s.dual_infeasibility << ", gap "
     << s.duality_gap;
  return os.str();
}

inline bool usable(const sdp::Solution& s) {
  if (s.status == sdp::SolveStatus::Optimal) return true;
  // Near-converged answers are still decisive for thresholded verdicts.
  return s.primal_infeasibility < 1e-7 && s.dual_infeasibility < 1e-7 && s.duality_gap < 1e-6;
}

inline HermitianOperator direct_sum(const std::vector<HermitianOperator>& blocks) {
  long total = 0;
  for (const auto& b : blocks) total += b.dim();
  Matrix m = Matrix::Zero(total, total);
  long off = 0;
  for (const auto& b : blocks) {
    m.block(off, off, b.dim(), b.dim()) = b.matrix;
    off += b.dim();
  }
  return HermitianOperator({SystemLabel{"direct_sum", int(total)}}, std::move(m));
}

inline void check_dim_cap(long dim, const SolveOptions& opts) {
  if (dim > opts.dim_cap) {
    std::ostringstream os;
    os << "dimension cap exceeded: joint dimension " << dim << " > cap " << opts.dim_cap;
    throw std::invalid_argument(os.str());
  }
}

}  // namespace detail

//==============================================================================
// Marginal feasibility
//==============================================================================

/// Decide whether a joint state with the given overlapping marginals exists.
///
/// Solved as the violation program
///   minimize sum_k tr[P_k + N_k]
///   s.t.     tr_{I\J_k}[X] - rho_k = P_k - N_k,  tr X = 1,  X, P_k, N_k >= 0
/// whose optimum is the least total trace-norm deviation of the margins of
/// any joint state; it is zero exactly on feasible scenarios, and the dual
/// solution is a separating witness otherwise.
inline FeasibilityVerdict marginal_feasible(const MarginalScenario& s,
                                            const SolveOptions& opts = {}) {
  const auto joint_factors = s.joint_factors();
  const long d_joint = dim_product(joint_factors);
  detail::check_dim_cap(d_joint, opts);
  const int n = int(s.size());

  sdp::Problem prob;
  prob.block_dims.push_back(int(d_joint));  // block 0: X
  prob.objective.push_back(Matrix::Zero(d_joint, d_joint));
  std::vector<int> pblock(static_cast<std::size_t>(n)), nblock(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int dk = int(s.marginals[std::size_t(k)].dim());
    pblock[std::size_t(k)] = int(prob.block_dims.size());
    prob.block_dims.push_back(dk);
    prob.objective.push_back(Matrix::Identity(dk, dk));
    nblock[std::size_t(k)] = int(prob.block_dims.size());
    prob.block_dims.push_back(dk);
    prob.objective.push_back(Matrix::Identity(dk, dk));
  }

  prob.constraints.push_back({{{0, Matrix::Identity(d_joint, d_joint)}}, 1.0});
  struct RowId {
    int k;
    std::size_t a, b;
  };
  std::vector<RowId> row_ids;  // aligned with constraints after the trace row
  for (int k = 0; k < n; ++k) {
    detail::ProductBasis basis(s.A.dim, s.Bs[std::size_t(k)].dim);
    for (std::size_t a = 0; a < basis.f.size(); ++a)
      for (std::size_t b = 0; b < basis.g.size(); ++b) {
        Matrix h = basis.element(a, b);
        HermitianOperator h_op({s.A, s.Bs[std::size_t(k)]}, h);
        sdp::Constraint con;
        con.terms.push_back({0, embed(h_op, joint_factors)});
        con.terms.push_back({pblock[std::size_t(k)], -h});
        con.terms.push_back({nblock[std::size_t(k)], h});
        con.rhs = inner(h, s.marginals[std::size_t(k)].matrix);
        prob.constraints.push_back(std::move(con));
        row_ids.push_back({k, a, b});
      }
  }

  sdp::Options sopt;
  sopt.tol = opts.solver_tol;
  sopt.max_iter = opts.max_iter;
  const sdp::Solution sol = sdp::solve(prob, sopt);

  FeasibilityVerdict verdict;
  verdict.violation = sol.primal_objective;
  verdict.gap = std::abs(sol.primal_objective - sol.dual_objective);
  verdict.diagnostics = detail::solver_note(sol);
  if (!detail::usable(sol)) return verdict;  // ambiguous

  if (sol.primal_objective <= opts.feas_tol) {
    verdict.status = Feasibility::Feasible;
    Matrix x = sol.x[0] / sol.x[0].trace().real();
    verdict.joint = DensityOperator(joint_factors, std::move(x), Tolerances{1e-7, 1e-7, 1e-7});
  } else if (sol.dual_objective >= opts.feas_tol) {
    verdict.status = Feasibility::Infeasible;
    const double y0 = sol.y(0);
    std::vector<Matrix> yk(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const long dk = s.marginals[std::size_t(k)].dim();
      yk[std::size_t(k)] = Matrix::Zero(dk, dk);
    }
    for (std::size_t r = 0; r < row_ids.size(); ++r) {
      const auto& id = row_ids[r];
      detail::ProductBasis basis(s.A.dim, s.Bs[std::size_t(id.k)].dim);
      yk[std::size_t(id.k)] += sol.y(long(r) + 1) * basis.element(id.a, id.b);
    }
    for (int k = 0; k < n; ++k) {
      const long dk = s.marginals[std::size_t(k)].dim();
      Matrix w = -yk[std::size_t(k)] - (y0 / n) * Matrix::Identity(dk, dk);
      verdict.certificate_blocks.emplace_back(
          std::vector<SystemLabel>{s.A, s.Bs[std::size_t(k)]}, std::move(w));
    }
    verdict.certificate = detail::direct_sum(verdict.certificate_blocks);
  }
  return verdict;
}

//==============================================================================
// Symmetric extension
//==============================================================================

namespace detail {

inline std::vector<SystemLabel> extension_labels(const SystemLabel& b, int n) {
  std::vector<SystemLabel> out;
  for (int k = 0; k < n; ++k) {
    SystemLabel l = b;
    if (k > 0) l.name += "#" + std::to_string(k + 1);
    out.push_back(std::move(l));
  }
  return out;
}

// Isometries from the symmetric / antisymmetric subspaces into B (x) B.
inline std::pair<Matrix, Matrix> swap_isometries(int d) {
  const int ds = d * (d + 1) / 2, da = d * (d - 1) / 2;
  Matrix sym = Matrix::Zero(d * d, ds), anti = Matrix::Zero(d * d, da);
  int cs = 0, ca = 0;
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i) sym(i * d + i, cs++) = 1.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      sym(i * d + j, cs) = r;
      sym(j * d + i, cs) = r;
      ++cs;
      anti(i * d + j, ca) = r;
      anti(j * d + i, ca) = -r;
      ++ca;
    }
  return {sym, anti};
}

// Two-extension feasibility on the swap-invariant blocks A (x) Sym^2 and
// A (x) Anti^2. Twirling makes this equivalent to the unreduced program.
inline FeasibilityVerdict symmetric_extension_reduced(const DensityOperator& rho,
                                                      const SolveOptions& opts) {
  const int da = rho.factors[0].dim, db = rho.factors[1].dim;
  const auto [sym, anti] = swap_isometries(db);
  const Matrix vs = kron(Matrix::Identity(da, da), sym);
  const Matrix va = kron(Matrix::Identity(da, da), anti);
  const long dsym = vs.cols(), danti = va.cols(), dmarg = rho.dim();

  sdp::Problem prob;
  prob.block_dims = {int(dsym), int(danti), int(dmarg), int(dmarg)};
  prob.objective = {Matrix::Zero(dsym, dsym), Matrix::Zero(danti, danti),
                    Matrix::Identity(dmarg, dmarg), Matrix::Identity(dmarg, dmarg)};

  sdp::Constraint trace_row;
  trace_row.terms.push_back({0, Matrix::Identity(dsym, dsym)});
  trace_row.terms.push_back({1, Matrix::Identity(danti, danti)});
  trace_row.rhs = 1.0;
  prob.constraints.push_back(std::move(trace_row));

  ProductBasis basis(da, db);
  const Matrix ib = Matrix::Identity(db, db);
  for (std::size_t a = 0; a < basis.f.size(); ++a)
    for (std::size_t b = 0; b < basis.g.size(); ++b) {
      const Matrix h = basis.element(a, b);
      const Matrix lifted = kron(h, ib);  // margin of the first B copy
      sdp::Constraint con;
      con.terms.push_back({0, hermitian_part(vs.adjoint() * lifted * vs)});
      con.terms.push_back({1, hermitian_part(va.adjoint() * lifted * va)});
      con.terms.push_back({2, -h});
      con.terms.push_back({3, h});
      con.rhs = inner(h, rho.matrix);
      prob.constraints.push_back(std::move(con));
    }

  sdp::Options sopt;
  sopt.tol = opts.solver_tol;
  sopt.max_iter = opts.max_iter;
  const sdp::Solution sol = sdp::solve(prob, sopt);

  FeasibilityVerdict verdict;
  verdict.violation = sol.primal_objective;
  verdict.gap = std::abs(sol.primal_objective - sol.dual_objective);
  verdict.diagnostics = "swap-invariant reduction; " + solver_note(sol);
  if (!usable(sol)) return verdict;

  if (sol.primal_objective <= opts.feas_tol) {
    verdict.status = Feasibility::Feasible;
    Matrix x = vs * sol.x[0] * vs.adjoint() + va * sol.x[1] * va.adjoint();
    x /= x.trace().real();
    const auto labels = extension_labels(rho.factors[1], 2);
    verdict.joint = DensityOperator({rho.factors[0], labels[0], labels[1]}, std::move(x),
                                    Tolerances{1e-7, 1e-7, 1e-7});
  } else if (sol.dual_objective >= opts.feas_tol) {
    verdict.status = Feasibility::Infeasible;
    const double y0 = sol.y(0);
    Matrix y = Matrix::Zero(dmarg, dmarg);
    long r = 1;
    for (std::size_t a = 0; a < basis.f.size(); ++a)
      for (std::size_t b = 0; b < basis.g.size(); ++b) y += sol.y(r++) * basis.element(a, b);
    verdict.certificate_blocks.emplace_back(rho.factors,
                                            Matrix(-y - y0 * Matrix::Identity(dmarg, dmarg)));
    verdict.certificate = verdict.certificate_blocks.front();
  }
  return verdict;
}

}  // namespace detail

/// Decide n-symmetric extendibility of a bipartite state (extensions copy
/// the second factor).
inline FeasibilityVerdict symmetric_extension(const DensityOperator& rho, int n,
                                              const SolveOptions& opts = {}) {
  if (rho.factors.size() != 2)
    throw std::invalid_argument("symmetric_extension expects a bipartite state");
  if (n < 2) throw std::invalid_argument("extension count must be >= 2");
  long d = rho.factors[0].dim;
  for (int k = 0; k < n; ++k) d *= rho.factors[1].dim;
  detail::check_dim_cap(d, opts);

  if (opts.symmetric_subspace_reduction && n == 2)
    return detail::symmetric_extension_reduced(rho, opts);

  const auto bs = detail::extension_labels(rho.factors[1], n);
  std::vector<DensityOperator> marginals;
  for (int k = 0; k < n; ++k)
    marginals.emplace_back(std::vector<SystemLabel>{rho.factors[0], bs[std::size_t(k)]},
                           rho.matrix);
  MarginalScenario scenario(rho.factors[0], bs, std::move(marginals));
  return marginal_feasible(scenario, opts);
}

//==============================================================================
// Consistent robustness
//==============================================================================

/// Minimal consistent noise weight t mixing the scenario into the feasible
/// set. Solved as
///   minimize tr[S]
///   s.t.     tr_{I\J_k}[S] = rho_k + D_k,  tr_{I\A}[S] = tr[S] rho_A,
///            S >= 0, D_k >= 0
/// with t = tr[S] - 1. The dual slacks of the D_k blocks are PSD witness
/// blocks W_k with sum_k tr[W_k rho_k] = 1 + t and value at most 1 on every
/// compatible scenario with the same margin.
inline RobustnessResult consistent_robustness(const MarginalScenario& s,
                                              const SolveOptions& opts = {}) {
  const auto joint_factors = s.joint_factors();
  const long d_joint = dim_product(joint_factors);
  detail::check_dim_cap(d_joint, opts);
  const int n = int(s.size());
  const Matrix rho_a = s.margin_of(0);
  const int da = s.A.dim;

  sdp::Problem prob;
  prob.block_dims.push_back(int(d_joint));  // block 0: joint S
  prob.objective.push_back(Matrix::Identity(d_joint, d_joint));
  std::vector<int> dblock(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int dk = int(s.marginals[std::size_t(k)].dim());
    dblock[std::size_t(k)] = int(prob.block_dims.size());
    prob.block_dims.push_back(dk);
    prob.objective.push_back(Matrix::Zero(dk, dk));
  }

  for (int k = 0; k < n; ++k) {
    detail::ProductBasis basis(da, s.Bs[std::size_t(k)].dim);
    for (std::size_t a = 0; a < basis.f.size(); ++a)
      for (std::size_t b = 0; b < basis.g.size(); ++b) {
        Matrix h = basis.element(a, b);
        HermitianOperator h_op({s.A, s.Bs[std::size_t(k)]}, h);
        sdp::Constraint con;
        con.terms.push_back({0, embed(h_op, joint_factors)});
        con.terms.push_back({dblock[std::size_t(k)], -h});
        con.rhs = inner(h, s.marginals[std::size_t(k)].matrix);
        prob.constraints.push_back(std::move(con));
      }
  }
  // A-margin proportionality rows; the identity component is a trace
  // identity and must be left out.
  {
    const auto fa = hermitian_basis(da);
    for (std::size_t a = 1; a < fa.size(); ++a) {
      HermitianOperator f_op({s.A}, fa[a]);
      Matrix coeff = embed(f_op, joint_factors) -
                     inner(fa[a], rho_a) * Matrix::Identity(d_joint, d_joint);
      prob.constraints.push_back({{{0, std::move(coeff)}}, 0.0});
    }
  }

  sdp::Options sopt;
  sopt.tol = opts.solver_tol;
  sopt.max_iter = opts.max_iter;
  const sdp::Solution sol = sdp::solve(prob, sopt);

  RobustnessResult res;
  res.free_description = "consistent";
  res.gap = std::abs(sol.primal_objective - sol.dual_objective);
  res.diagnostics = detail::solver_note(sol);
  res.ok = detail::usable(sol);
  res.t = std::max(0.0, sol.primal_objective - 1.0);
  if (!res.ok) return res;

  Matrix joint = sol.x[0] / sol.x[0].trace().real();
  res.joint = DensityOperator(joint_factors, std::move(joint), Tolerances{1e-7, 1e-7, 1e-7});
  for (int k = 0; k < n; ++k) {
    const Matrix& dk_mat = sol.x[std::size_t(dblock[std::size_t(k)])];
    const double w = dk_mat.trace().real();
    if (w > opts.feas_tol)
      res.noise.emplace_back(std::vector<SystemLabel>{s.A, s.Bs[std::size_t(k)]},
                             Matrix(dk_mat / w), Tolerances{1e-6, 1e-6, 1e-6});
    res.witness_blocks.emplace_back(std::vector<SystemLabel>{s.A, s.Bs[std::size_t(k)]},
                                    sol.z[std::size_t(dblock[std::size_t(k)])],
                                    Tolerances{1e-7, 1e-7, 1e-7});
  }
  return res;
}

//==============================================================================
// Generalized robustness against a free set
//==============================================================================

/// Free sets supported by the robustness and game machinery.
struct FreeSetSpec {
  int extensions = 2;
  bool separable_approx = false;

  static FreeSetSpec n_extendible(int n) { return {n, false}; }
  /// Separability replaced by the extendibility relaxation at this level.
  static FreeSetSpec separable_inner_approx(int level) { return {level, true}; }

  std::string describe() const {
    std::ostringstream os;
    if (separable_approx)
      os << "separable (extendibility relaxation, level " << extensions << ")";
    else
      os << extensions << "-extendible";
    return os.str();
  }
};

/// Generalized robustness of a bipartite state against the n-extendible
/// free set: min tr[sigma] s.t. sigma >= rho, sigma in the cone of
/// extendible operators; t = tr[sigma] - 1. The dual slack of the noise
/// block is the PSD witness W with tr[rho W] = 1 + t and tr[sigma W] <= 1
/// for all free sigma.
inline RobustnessResult generalized_robustness(const DensityOperator& rho,
                                               const FreeSetSpec& free,
                                               const SolveOptions& opts = {}) {
  if (rho.factors.size() != 2)
    throw std::invalid_argument("generalized_robustness expects a bipartite state");
  const int n = free.extensions;
  if (n < 2) throw std::invalid_argument("free set needs extension level >= 2");
  const SystemLabel a_label = rho.factors[0];
  const auto bs = detail::extension_labels(rho.factors[1], n);
  std::vector<SystemLabel> ext_factors{a_label};
  ext_factors.insert(ext_factors.end(), bs.begin(), bs.end());
  const long d_ext = dim_product(ext_factors);
  detail::check_dim_cap(d_ext, opts);
  const long d_ab = rho.dim();

  sdp::Problem prob;
  prob.block_dims = {int(d_ext), int(d_ab)};  // extension, noise
  prob.objective = {Matrix::Zero(d_ext, d_ext), Matrix::Identity(d_ab, d_ab)};

  detail::ProductBasis basis(a_label.dim, rho.factors[1].dim);
  for (int k = 0; k < n; ++k) {
    for (std::size_t a = 0; a < basis.f.size(); ++a)
      for (std::size_t b = 0; b < basis.g.size(); ++b) {
        if (k > 0 && b == 0) continue;  // A-local rows repeat the k = 0 set
        Matrix h = basis.element(a, b);
        HermitianOperator h_op({a_label, bs[std::size_t(k)]}, h);
        sdp::Constraint con;
        con.terms.push_back({0, embed(h_op, ext_factors)});
        con.terms.push_back({1, -h});
        con.rhs = inner(h, rho.matrix);
        prob.constraints.push_back(std::move(con));
      }
  }

  sdp::Options sopt;
  sopt.tol = opts.solver_tol;
  sopt.max_iter = opts.max_iter;
  const sdp::Solution sol = sdp::solve(prob, sopt);

  RobustnessResult res;
  res.free_description = free.describe();
  res.gap = std::abs(sol.primal_objective - sol.dual_objective);
  res.diagnostics = detail::solver_note(sol);
  res.ok = detail::usable(sol);
  res.t = std::max(0.0, sol.primal_objective);
  if (!res.ok) return res;

  const double scale = sol.x[0].trace().real();
  if (scale > 0)
    res.joint = DensityOperator(ext_factors, Matrix(sol.x[0] / scale),
                                Tolerances{1e-7, 1e-7, 1e-7});
  const double w = sol.x[1].trace().real();
  if (w > opts.feas_tol)
    res.noise.emplace_back(rho.factors, Matrix(sol.x[1] / w), Tolerances{1e-6, 1e-6, 1e-6});
  res.witness_blocks.emplace_back(rho.factors, sol.z[1], Tolerances{1e-7, 1e-7, 1e-7});
  return res;
}

/// max tr[W sigma] over normalized states sigma of the free set.
inline double free_set_maximum(const HermitianOperator& w, const FreeSetSpec& free,
                               const SolveOptions& opts = {}) {
  if (w.factors.size() != 2) throw std::invalid_argument("witness must be bipartite");
  const int n = free.extensions;
  const SystemLabel a_label = w.factors[0];
  const auto bs = detail::extension_labels(w.factors[1], n);
  std::vector<SystemLabel> ext_factors{a_label};
  ext_factors.insert(ext_factors.end(), bs.begin(), bs.end());
  const long d_ext = dim_product(ext_factors);
  detail::check_dim_cap(d_ext, opts);

  sdp::Problem prob;
  prob.block_dims = {int(d_ext)};
  HermitianOperator w_first({a_label, bs[0]}, w.matrix);
  prob.objective = {Matrix(-embed(w_first, ext_factors))};
  prob.constraints.push_back({{{0, Matrix::Identity(d_ext, d_ext)}}, 1.0});

  detail::ProductBasis basis(a_label.dim, w.factors[1].dim);
  for (int k = 1; k < n; ++k)
    for (std::size_t a = 0; a < basis.f.size(); ++a)
      for (std::size_t b = 1; b < basis.g.size(); ++b) {
        Matrix h = basis.element(a, b);
        HermitianOperator h_k({a_label, bs[std::size_t(k)]}, h);
        HermitianOperator h_0({a_label, bs[0]}, h);
        Matrix coeff = embed(h_k, ext_factors) - embed(h_0, ext_factors);
        prob.constraints.push_back({{{0, std::move(coeff)}}, 0.0});
      }

  sdp::Options sopt;
  sopt.tol = opts.solver_tol;
  sopt.max_iter = opts.max_iter;
  const sdp::Solution sol = sdp::solve(prob, sopt);
  if (!detail::usable(sol))
    throw std::runtime_error("free-set maximization failed: " + detail::solver_note(sol));
  return -sol.primal_objective;
}

/// max sum_k tr[W_k sigma_k] over compatible scenarios whose common margin
/// is exactly rho_A.
inline double consistent_set_maximum(const std::vector<HermitianOperator>& blocks,
                                     const MarginalScenario& shape,
                                     const SolveOptions& opts = {}) {
  if (blocks.size() != shape.size())
    throw std::invalid_argument("one witness block per marginal required");
  const auto joint_factors = shape.joint_factors();
  const long d_joint = dim_product(joint_factors);
  detail::check_dim_cap(d_joint, opts);
  const Matrix rho_a = shape.margin_of(0);

  Matrix obj = Matrix::Zero(d_joint, d_joint);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    HermitianOperator w_k({shape.A, shape.Bs[k]}, blocks[k].matrix);
    obj -= embed(w_k, joint_factors);
  }

  sdp::Problem prob;
  prob.block_dims = {int(d_joint)};
  prob.objective = {std::move(obj)};
  const auto fa = hermitian_basis(shape.A.dim);
  for (const auto& f : fa) {
    HermitianOperator f_op({shape.A}, f);
    prob.constraints.push_back({{{0, embed(f_op, joint_factors)}}, inner(f, rho_a)});
  }

  sdp::Options sopt;
  sopt.tol = opts.solver_tol;
  sopt.max_iter = opts.max_iter;
  const sdp::Solution sol = sdp::solve(prob, sopt);
  if (!detail::usable(sol))
    throw std::runtime_error("consistent-set maximization failed: " + detail::solver_note(sol));
  return -sol.primal_objective;
}

//==============================================================================
// Channel compatibility via the state dualism
//==============================================================================

namespace detail {

inline MarginalScenario choi_scenario(const std::vector<KrausChannel>& channels,
                                      const PurifiedMargin& margin) {
  if (channels.empty()) throw std::invalid_argument("no channels given");
  std::vector<SystemLabel> bs;
  std::vector<DensityOperator> marginals;
  for (std::size_t k = 0; k < channels.size(); ++k) {
    const auto& ch = channels[k];
    if (ch.in_dim() != margin.dim())
      throw std::invalid_argument("channel input dimension does not match the margin");
    SystemLabel b = ch.out_label;
    b.name += "#" + std::to_string(k + 1);
    const ChoiState cs = choi_state(ch, margin);
    bs.push_back(b);
    marginals.emplace_back(std::vector<SystemLabel>{margin.label(), b}, cs.state.matrix);
  }
  return MarginalScenario(margin.label(), std::move(bs), std::move(marginals));
}

}  // namespace detail

/// Channels are compatible exactly when the marginal problem of their Choi
/// states is feasible (for any fixed canonical purification of the shared
/// full-rank input state).
inline FeasibilityVerdict channel_compatible(const std::vector<KrausChannel>& channels,
                                             const PurifiedMargin& margin,
                                             const SolveOptions& opts = {}) {
  return marginal_feasible(detail::choi_scenario(channels, margin), opts);
}

/// Rebuild the broadcasting channel from the joint state of a feasible
/// channel-compatibility verdict.
inline KrausChannel broadcast_channel(const FeasibilityVerdict& verdict,
                                      const PurifiedMargin& margin) {
  if (verdict.status != Feasibility::Feasible || !verdict.joint)
    throw std::invalid_argument("verdict does not carry a joint state");
  const auto& joint = *verdict.joint;
  long d_out = 1;
  std::string name;
  for (std::size_t i = 1; i < joint.factors.size(); ++i) {
    d_out *= joint.factors[i].dim;
    name += joint.factors[i].name;
  }
  DensityOperator flat({joint.factors[0], SystemLabel{name, int(d_out)}}, joint.matrix);
  return choi_channel(ChoiState(margin, std::move(flat), 1e-6), 1e-6);
}

/// Incompatibility robustness of a channel set, computed as the consistent
/// robustness of the Choi scenario.
inline RobustnessResult incompatibility_robustness(const std::vector<KrausChannel>& channels,
                                                   const PurifiedMargin& margin,
                                                   const SolveOptions& opts = {}) {
  RobustnessResult res = consistent_robustness(detail::choi_scenario(channels, margin), opts);
  res.free_description = "compatible channels (consistent)";
  return res;
}

/// Noise channels of an incompatibility-robustness optimizer. The noise
/// states carry the solver precision divided by t, so the validation bounds
/// scale accordingly.
inline std::vector<KrausChannel> noise_channels(const RobustnessResult& res,
                                                const PurifiedMargin& margin) {
  std::vector<KrausChannel> out;
  for (const auto& tau : res.noise)
    out.push_back(choi_channel(ChoiState(margin, tau, 1e-4), 1e-4));
  return out;
}

}  // namespace qmarginal
