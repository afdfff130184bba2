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
#include <utility>

#include "qmarginal/qobj.hpp"

namespace qmarginal {

/// Eigenvalues of a margin below this threshold make it rank deficient.
inline constexpr double kRankFloor = 1e-10;

//==============================================================================
// Canonical purifications
//==============================================================================

/// A full-rank state rho_A together with its canonical purification
/// |Omega> = sum_n sqrt(t_n) |n> (x) |n> built from the eigendecomposition
/// rho_A = sum_n t_n |n><n|, t_1 >= t_2 >= ... > 0.
///
/// The eigenbasis is made deterministic: eigenvectors are ordered by
/// descending eigenvalue, ties broken by lexicographic comparison of the
/// real parts of the coordinates, and each global phase is fixed so the
/// first nonvanishing coordinate is real positive.
struct PurifiedMargin {
  DensityOperator rho_A;
  RealVector eigenvalues;  // descending, all > rank floor
  Matrix eigenbasis;       // column n is |n>
  Vector omega;            // purifying vector in H_A (x) H_A

  const SystemLabel& label() const { return rho_A.factors.front(); }
  int dim() const { return label().dim; }
};

namespace detail {

inline void fix_column_phase(Matrix& v, long col) {
  for (long r = 0; r < v.rows(); ++r) {
    const Complex x = v(r, col);
    if (std::abs(x) > 1e-12) {
      v.col(col) *= std::conj(x) / std::abs(x);
      return;
    }
  }
}

inline bool column_lex_greater(const Matrix& v, long a, long b) {
  for (long r = 0; r < v.rows(); ++r) {
    const double ra = v(r, a).real(), rb = v(r, b).real();
    if (std::abs(ra - rb) > 1e-12) return ra > rb;
  }
  for (long r = 0; r < v.rows(); ++r) {
    const double ia = v(r, a).imag(), ib = v(r, b).imag();
    if (std::abs(ia - ib) > 1e-12) return ia > ib;
  }
  return false;
}

}  // namespace detail

inline PurifiedMargin canonical_purification(const DensityOperator& rho,
                                             double eps_rank = kRankFloor) {
  if (rho.factors.size() != 1)
    throw std::invalid_argument("canonical_purification expects a single-factor state");
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed for margin state");
  const long d = rho.dim();
  RealVector ev = es.eigenvalues();
  if (ev.minCoeff() <= eps_rank)
    throw std::domain_error(
        "margin state is rank deficient; restrict to its support first "
        "(see restrict_support)");

  Matrix v(d, d);
  RealVector t(d);
  for (long i = 0; i < d; ++i) {  // descending order
    t(i) = ev(d - 1 - i);
    v.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  for (long i = 0; i < d; ++i) detail::fix_column_phase(v, i);
  // Deterministic ordering within degenerate eigenspaces.
  for (long i = 0; i + 1 < d; ++i)
    for (long j = i + 1; j < d && std::abs(t(j) - t(i)) <= 1e-12; ++j)
      if (detail::column_lex_greater(v, j, i)) {
        v.col(i).swap(v.col(j));
        std::swap(t(i), t(j));
      }

  Vector omega = Vector::Zero(d * d);
  for (long n = 0; n < d; ++n)
    omega += std::sqrt(t(n)) * kron_vec(v.col(n), v.col(n));
  return PurifiedMargin{rho, std::move(t), std::move(v), std::move(omega)};
}

/// Result of projecting a state onto its support: the restricted full-rank
/// state on a smaller label, plus the isometry back into the original space.
struct SupportRestriction {
  DensityOperator state;
  Matrix isometry;  // original_dim x rank
};

inline SupportRestriction restrict_support(const DensityOperator& rho,
                                           double eps = kRankFloor) {
  if (rho.factors.size() != 1)
    throw std::invalid_argument("restrict_support expects a single-factor state");
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix);
  const long d = rho.dim();
  std::vector<long> kept;
  double mass = 0;
  for (long i = d - 1; i >= 0; --i)
    if (es.eigenvalues()(i) > eps) {
      kept.push_back(i);
      mass += es.eigenvalues()(i);
    }
  if (kept.empty()) throw std::domain_error("state has no support above threshold");
  const long r = long(kept.size());
  Matrix iso(d, r);
  Matrix restricted = Matrix::Zero(r, r);
  for (long k = 0; k < r; ++k) {
    iso.col(k) = es.eigenvectors().col(kept[std::size_t(k)]);
    restricted(k, k) = es.eigenvalues()(kept[std::size_t(k)]) / mass;
  }
  SystemLabel reduced{rho.factors.front().name + "'", int(r)};
  return SupportRestriction{DensityOperator({reduced}, restricted), std::move(iso)};
}

//==============================================================================
// Channels in Kraus form
//==============================================================================

/// A completely positive trace-preserving map given by Kraus operators.
struct KrausChannel {
  SystemLabel in_label;
  SystemLabel out_label;
  std::vector<Matrix> kraus;

  KrausChannel(SystemLabel in, SystemLabel out, std::vector<Matrix> ks, double tol = 1e-9)
      : in_label(std::move(in)), out_label(std::move(out)), kraus(std::move(ks)) {
    if (kraus.empty()) throw std::invalid_argument("channel needs at least one Kraus operator");
    Matrix sum = Matrix::Zero(in_label.dim, in_label.dim);
    for (const auto& k : kraus) {
      if (k.rows() != out_label.dim || k.cols() != in_label.dim)
        throw std::invalid_argument("Kraus operator has wrong shape");
      sum += k.adjoint() * k;
    }
    if ((sum - Matrix::Identity(in_label.dim, in_label.dim)).cwiseAbs().maxCoeff() > tol)
      throw std::invalid_argument("Kraus operators are not trace preserving");
  }

  int in_dim() const { return in_label.dim; }
  int out_dim() const { return out_label.dim; }
};

inline Matrix apply_channel(const KrausChannel& phi, const Matrix& rho) {
  Matrix out = Matrix::Zero(phi.out_dim(), phi.out_dim());
  for (const auto& k : phi.kraus) out += k * rho * k.adjoint();
  return out;
}

inline DensityOperator apply_channel(const KrausChannel& phi, const DensityOperator& rho) {
  if (rho.dim() != phi.in_dim()) throw std::invalid_argument("channel input dimension mismatch");
  return DensityOperator({phi.out_label}, apply_channel(phi, rho.matrix), Tolerances{1e-8, 1e-8, 1e-8});
}

inline KrausChannel identity_channel(int d, SystemLabel in = {}, SystemLabel out = {}) {
  if (in.name.empty()) in = {"A", d};
  if (out.name.empty()) out = {"B", d};
  return KrausChannel(in, out, {Matrix::Identity(d, d)});
}

/// Depolarizing channel with a Weyl-displaced coherent part:
/// rho -> (1-mu) W(q,p) rho W(q,p)^dag + mu tr[rho] I/d.
inline KrausChannel depolarizing_channel(int d, double mu, int q = 0, int p = 0,
                                         SystemLabel in = {}, SystemLabel out = {}) {
  if (mu < 0 || mu > 1) throw std::invalid_argument("depolarizing noise must be in [0,1]");
  if (in.name.empty()) in = {"A", d};
  if (out.name.empty()) out = {"B", d};
  // The white-noise part is the full Weyl twirl; merge its (q,p) term with
  // the coherent part.
  std::vector<Matrix> ks;
  const double dd = double(d) * double(d);
  const double main_weight = (1.0 - mu) + mu / dd;
  if (main_weight > 0) ks.push_back(std::sqrt(main_weight) * weyl(q, p, d));
  if (mu > 0) {
    const double w = std::sqrt(mu / dd);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        if (a == ((q % d) + d) % d && b == ((p % d) + d) % d) continue;
        ks.push_back(w * weyl(a, b, d));
      }
  }
  return KrausChannel(std::move(in), std::move(out), std::move(ks));
}

/// Qubit Pauli channel rho -> p0 rho + px X rho X + py Y rho Y + pz Z rho Z.
inline KrausChannel pauli_channel(double p0, double px, double py, double pz,
                                  SystemLabel in = {}, SystemLabel out = {}) {
  if (in.name.empty()) in = {"A", 2};
  if (out.name.empty()) out = {"B", 2};
  const double probs[4] = {p0, px, py, pz};
  const Matrix sigmas[4] = {Matrix::Identity(2, 2), pauli_x(), pauli_y(), pauli_z()};
  std::vector<Matrix> ks;
  for (int r = 0; r < 4; ++r) {
    if (probs[r] < -1e-12) throw std::invalid_argument("Pauli probabilities must be nonnegative");
    if (probs[r] > 0) ks.push_back(std::sqrt(probs[r]) * sigmas[r]);
  }
  return KrausChannel(std::move(in), std::move(out), std::move(ks));
}

//==============================================================================
// Choi states
//==============================================================================

/// The bipartite state (id (x) Phi)(|Omega><Omega|) for a fixed canonical
/// purification |Omega> of the margin. Its A margin always equals rho_A.
struct ChoiState {
  PurifiedMargin margin;
  DensityOperator state;  // factors: {A, B}

  ChoiState(PurifiedMargin m, DensityOperator s, double tol = 1e-9)
      : margin(std::move(m)), state(std::move(s)) {
    if (state.factors.size() != 2 || state.factors.front().name != margin.label().name)
      throw std::invalid_argument("Choi state must live on {A, B} with A the margin label");
    const Matrix red =
        partial_trace_matrix(state.matrix, factor_dims(state.factors), {true, false});
    if ((red - margin.rho_A.matrix).cwiseAbs().maxCoeff() > tol)
      throw std::invalid_argument("Choi state margin does not match rho_A");
  }

  const SystemLabel& out_label() const { return state.factors.back(); }
};

inline ChoiState choi_state(const KrausChannel& phi, const PurifiedMargin& margin) {
  if (phi.in_dim() != margin.dim())
    throw std::invalid_argument("channel input dimension does not match the margin");
  const long da = margin.dim(), db = phi.out_dim();
  Matrix s = Matrix::Zero(da * db, da * db);
  for (const auto& k : phi.kraus) {
    Vector w = Vector::Zero(da * db);
    for (long n = 0; n < da; ++n)
      w += std::sqrt(margin.eigenvalues(n)) *
           kron_vec(margin.eigenbasis.col(n), k * margin.eigenbasis.col(n));
    s += w * w.adjoint();
  }
  return ChoiState(margin,
                   DensityOperator({margin.label(), phi.out_label}, std::move(s)));
}

//==============================================================================
// rho_A-orthogonal Kraus decompositions
//==============================================================================

/// Kraus operators K_i with tr[rho_A K_i^dag K_j] = 0 for i != j, together
/// with the induced Choi-state spectrum lambda_i = tr[K_i rho_A K_i^dag].
struct KrausSpectrum {
  RealVector lambdas;         // descending, each in (0,1]
  std::vector<Matrix> kraus;  // same order as lambdas
};

namespace detail {

// Recover K from a Choi-state eigenvector w scaled so that
// w = (I (x) K)|Omega>: reshape w to a d_A x d_B matrix and undo the
// sqrt(rho_A) factor transposed in the eigenbasis.
inline Matrix kraus_from_vector(const Vector& w, const PurifiedMargin& margin, long db) {
  const long da = margin.dim();
  Matrix wmat(da, db);
  for (long a = 0; a < da; ++a)
    for (long b = 0; b < db; ++b) wmat(a, b) = w(a * db + b);
  Matrix qinv = margin.eigenbasis.conjugate() *
                margin.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
                margin.eigenbasis.adjoint();
  return wmat.transpose() * qinv;
}

}  // namespace detail

inline KrausSpectrum orthogonal_kraus(const ChoiState& s, double cutoff = kEigenvalueFloor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.state.matrix);
  if (es.info() != Eigen::Success) {
    const RealVector ev = s.state.matrix.diagonal().real();
    std::ostringstream msg;
    msg << "Choi-state eigendecomposition failed; diagonal spread "
        << ev.maxCoeff() - ev.minCoeff();
    throw std::runtime_error(msg.str());
  }
  const long n = s.state.dim();
  const long db = s.out_label().dim;
  KrausSpectrum spec;
  std::vector<double> ls;
  for (long i = n - 1; i >= 0; --i) {
    const double l = es.eigenvalues()(i);
    if (l <= cutoff) continue;
    ls.push_back(l);
    const Vector w = std::sqrt(l) * es.eigenvectors().col(i);
    spec.kraus.push_back(detail::kraus_from_vector(w, s.margin, db));
  }
  spec.lambdas = Eigen::Map<RealVector>(ls.data(), long(ls.size()));
  return spec;
}

/// The unique channel whose Choi state (for the stored margin) is `s`.
/// tp_tol bounds the accepted trace-preservation defect; inexact inputs
/// (optimizer output at finite solver precision) need a looser bound.
inline KrausChannel choi_channel(const ChoiState& s, double tp_tol = 1e-8) {
  KrausSpectrum spec = orthogonal_kraus(s);
  return KrausChannel(s.margin.label(), s.out_label(), std::move(spec.kraus), tp_tol);
}

/// Direct action of the Choi channel of `s` on an input, via the inversion
/// formula Phi(x) = tr_A[ rho_AB (rho_A^{-1/2} x^{T_A} rho_A^{-1/2} (x) I) ]
/// with the transpose taken in the eigenbasis of rho_A.
inline Matrix apply_choi(const ChoiState& s, const Matrix& input) {
  const long da = s.margin.dim();
  const long db = s.out_label().dim;
  if (input.rows() != da || input.cols() != da)
    throw std::invalid_argument("input dimension mismatch");
  const Matrix inv_sqrt = s.margin.eigenbasis *
                          s.margin.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
                          s.margin.eigenbasis.adjoint();
  const Matrix d = inv_sqrt * transpose_in_basis(input, s.margin.eigenbasis) * inv_sqrt;
  const Matrix m = s.state.matrix * kron(d, Matrix::Identity(db, db));
  return partial_trace_matrix(m, {int(da), int(db)}, {false, true});
}

/// Largest action difference of two channels over an orthonormal Hermitian
/// basis of the common input space.
inline double channel_action_distance(const KrausChannel& a, const KrausChannel& b) {
  if (a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim())
    throw std::invalid_argument("channel shapes differ");
  double worst = 0;
  for (const auto& h : hermitian_basis(a.in_dim()))
    worst = std::max(worst, (apply_channel(a, h) - apply_channel(b, h)).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace qmarginal
