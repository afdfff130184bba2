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

#include "qmarginal/choi.hpp"
#include "qmarginal/sdp.hpp"

namespace qmarginal {

//==============================================================================
// Depolarizing-pair compatibility
//==============================================================================

/// Signed distance of a depolarizing pair from its compatibility boundary:
/// mu + (2/d) sqrt(mu nu) + nu - 1.
inline double depol_compat_margin(double mu, double nu, int d) {
  if (mu < 0 || mu > 1 || nu < 0 || nu > 1)
    throw std::invalid_argument("depolarizing noise must be in [0,1]");
  if (d < 2) throw std::invalid_argument("dimension must be >= 2");
  return mu + (2.0 / d) * std::sqrt(mu * nu) + nu - 1.0;
}

/// Two depolarizing channels with noise mu, nu on dimension d are compatible
/// exactly on the closed region mu + (2/d) sqrt(mu nu) + nu >= 1.
inline bool depol_compatible(double mu, double nu, int d) {
  return depol_compat_margin(mu, nu, d) >= -1e-12;
}

/// Pauli probability vector of the plain depolarizing qubit channel.
inline std::array<double, 4> depol_pauli_probs(double mu) {
  return {1.0 - 0.75 * mu, mu / 4.0, mu / 4.0, mu / 4.0};
}

//==============================================================================
// Pauli-channel pair criterion
//==============================================================================

/// Probability vector over the Pauli unitaries (1, X, Y, Z).
struct PauliProbVector {
  double p0, px, py, pz;

  PauliProbVector(double a0, double ax, double ay, double az)
      : p0(a0), px(ax), py(ay), pz(az) {
    for (double v : {p0, px, py, pz})
      if (v < -1e-12) throw std::invalid_argument("Pauli probabilities must be nonnegative");
    if (std::abs(p0 + px + py + pz - 1.0) > 1e-12)
      throw std::invalid_argument("Pauli probabilities must sum to 1");
  }

  double operator[](int i) const {
    switch (i) {
      case 0: return p0;
      case 1: return px;
      case 2: return py;
      default: return pz;
    }
  }
};

inline KrausChannel pauli_channel(const PauliProbVector& p, SystemLabel in = {},
                                  SystemLabel out = {}) {
  return pauli_channel(p.p0, p.px, p.py, p.pz, std::move(in), std::move(out));
}

/// The three diagonal correlation coefficients of a probability vector:
/// <q>_1 = (q0-qx-qy+qz)/2, <q>_2 = (q0-qx+qy-qz)/2, <q>_3 = (q0+qx-qy-qz)/2.
inline std::array<double, 3> pauli_correlations(const PauliProbVector& q) {
  return {0.5 * (q.p0 - q.px - q.py + q.pz), 0.5 * (q.p0 - q.px + q.py - q.pz),
          0.5 * (q.p0 + q.px - q.py - q.pz)};
}

/// The 4x4 real symmetric matrix whose positive semidefiniteness for some
/// (lambda, mu, nu) in [-1,1]^3 decides compatibility of the Pauli channels
/// of p and q.
inline HermitianOperator m_matrix(const PauliProbVector& p, const PauliProbVector& q,
                                  double lambda, double mu, double nu) {
  for (double v : {lambda, mu, nu})
    if (v < -1.0 - 1e-12 || v > 1.0 + 1e-12)
      throw std::invalid_argument("certificate parameters must lie in [-1,1]");
  const auto c = pauli_correlations(q);
  Matrix m(4, 4);
  m << p.p0, lambda, mu, c[0] - nu,           //
      lambda, p.px, nu, c[1] - mu,            //
      mu, nu, p.py, c[2] - lambda,            //
      c[0] - nu, c[1] - mu, c[2] - lambda, p.pz;
  return HermitianOperator({SystemLabel{"M", 4}}, std::move(m));
}

enum class CompatVerdict { Compatible, Incompatible, Boundary };

inline const char* to_string(CompatVerdict v) {
  switch (v) {
    case CompatVerdict::Compatible: return "compatible";
    case CompatVerdict::Incompatible: return "incompatible";
    default: return "boundary";
  }
}

/// A feasible point of the matrix criterion together with the smallest
/// eigenvalue it achieves.
struct PauliCompatCertificate {
  double lambda = 0, mu = 0, nu = 0;
  double min_eig = 0;
};

struct PauliCompatResult {
  CompatVerdict verdict = CompatVerdict::Boundary;
  std::optional<PauliCompatCertificate> certificate;
  /// max over (lambda,mu,nu) of the smallest eigenvalue of the criterion
  /// matrix; positive means compatible with that margin.
  double margin = 0;
};

/// Decide the Pauli-pair criterion by maximizing the smallest eigenvalue of
/// the 4x4 matrix over the three certificate parameters (a small SDP).
/// Verdicts within 1e-9 of zero are reported as boundary.
inline PauliCompatResult pauli_compatible(const PauliProbVector& p, const PauliProbVector& q,
                                          double solver_tol = 1e-9) {
  auto pattern = [](int which) {
    // Derivative of the criterion matrix in lambda, mu, nu.
    Matrix d = Matrix::Zero(4, 4);
    if (which == 0) {
      d(0, 1) = d(1, 0) = 1;
      d(2, 3) = d(3, 2) = -1;
    } else if (which == 1) {
      d(0, 2) = d(2, 0) = 1;
      d(1, 3) = d(3, 1) = -1;
    } else {
      d(1, 2) = d(2, 1) = 1;
      d(0, 3) = d(3, 0) = -1;
    }
    return d;
  };

  // Dual-form program: maximize t subject to
  //   M(lambda,mu,nu) - t I >= 0 and the [-1,1] boxes.
  sdp::Problem prob;
  prob.block_dims = {4, 1, 1, 1, 1, 1, 1};
  prob.objective.push_back(m_matrix(p, q, 0, 0, 0).matrix);
  for (int i = 0; i < 6; ++i) prob.objective.push_back(Matrix::Ones(1, 1));
  const Matrix one = Matrix::Ones(1, 1);
  for (int v = 0; v < 3; ++v) {
    sdp::Constraint con;  // multiplier: lambda / mu / nu
    con.terms.push_back({0, Matrix(-pattern(v))});
    con.terms.push_back({1 + 2 * v, one});
    con.terms.push_back({2 + 2 * v, -one});
    con.rhs = 0.0;
    prob.constraints.push_back(std::move(con));
  }
  {
    sdp::Constraint con;  // multiplier: t
    con.terms.push_back({0, Matrix::Identity(4, 4)});
    con.rhs = 1.0;
    prob.constraints.push_back(std::move(con));
  }

  sdp::Options sopt;
  sopt.tol = solver_tol;
  const sdp::Solution sol = sdp::solve(prob, sopt);
  if (sol.status != sdp::SolveStatus::Optimal &&
      !(sol.primal_infeasibility < 1e-8 && sol.duality_gap < 1e-8))
    throw std::runtime_error("Pauli criterion solve failed");

  PauliCompatResult res;
  res.margin = sol.dual_objective;
  auto clamp1 = [](double v) { return std::clamp(v, -1.0, 1.0); };
  PauliCompatCertificate cert;
  cert.lambda = clamp1(sol.y(0));
  cert.mu = clamp1(sol.y(1));
  cert.nu = clamp1(sol.y(2));
  cert.min_eig = min_eigenvalue(m_matrix(p, q, cert.lambda, cert.mu, cert.nu).matrix);
  if (res.margin > 1e-9) {
    res.verdict = CompatVerdict::Compatible;
    res.certificate = cert;
  } else if (res.margin < -1e-9) {
    res.verdict = CompatVerdict::Incompatible;
  } else {
    res.verdict = CompatVerdict::Boundary;
    if (cert.min_eig >= -1e-9) res.certificate = cert;
  }
  return res;
}

//==============================================================================
// Bell-diagonal marginal problem
//==============================================================================

/// The Bell-diagonal two-qubit state sum_r p_r |Omega_r><Omega_r| with
/// |Omega_r> = (I (x) sigma_r)|Omega_0>.
inline DensityOperator bell_diagonal_state(const PauliProbVector& p, SystemLabel a = {},
                                           SystemLabel b = {}) {
  if (a.name.empty()) a = {"A", 2};
  if (b.name.empty()) b = {"B", 2};
  Vector omega0 = Vector::Zero(4);
  omega0(0) = omega0(3) = 1.0 / std::sqrt(2.0);
  const Matrix sigmas[4] = {Matrix::Identity(2, 2), pauli_x(), pauli_y(), pauli_z()};
  Matrix m = Matrix::Zero(4, 4);
  for (int r = 0; r < 4; ++r) {
    const Vector v = kron(Matrix::Identity(2, 2), sigmas[r]) * omega0;
    m += p[r] * (v * v.adjoint());
  }
  return DensityOperator({a, b}, std::move(m));
}

/// A pair of Bell-diagonal two-qubit states are margins of one three-qubit
/// state exactly when the Pauli-pair criterion holds; the decision procedure
/// is shared with pauli_compatible.
inline PauliCompatResult bell_diagonal_marginal(const PauliProbVector& p,
                                                const PauliProbVector& q,
                                                double solver_tol = 1e-9) {
  return pauli_compatible(p, q, solver_tol);
}

//==============================================================================
// Two-qubit symmetric extendibility and qubit self-compatibility
//==============================================================================

/// Signed slack of the spectral two-qubit extendibility criterion,
/// tr[rho_B^2] - tr[rho^2] + 4 sqrt(det rho); nonnegative iff extendible.
/// Determinants at or below 1e-14 in magnitude are clamped to zero.
inline double qubit_sym_ext_gap(const DensityOperator& rho) {
  if (rho.dim() != 4 || rho.factors.size() != 2)
    throw std::invalid_argument("expected a two-qubit state on {A, B}");
  const Matrix rho_b =
      partial_trace_matrix(rho.matrix, factor_dims(rho.factors), {false, true});
  const double purity_b = trace_product(rho_b, rho_b).real();
  const double purity = trace_product(rho.matrix, rho.matrix).real();
  double det = rho.matrix.determinant().real();
  if (det <= 1e-14) det = 0.0;
  return purity_b - purity + 4.0 * std::sqrt(det);
}

inline bool qubit_sym_ext(const DensityOperator& rho) {
  return qubit_sym_ext_gap(rho) >= -1e-12;
}

/// Signed slack of the qubit self-compatibility criterion evaluated through
/// the rho_A-orthogonal Kraus spectrum: tr[Phi(rho_A)^2] - sum_i lambda_i^2
/// + 4 prod_i sqrt(lambda_i), with the spectrum zero-padded to the four
/// Choi eigenvalues (so the product vanishes below Kraus rank 4).
inline double qubit_self_compatible_gap(const KrausChannel& phi, const DensityOperator& rho_a) {
  if (phi.in_dim() != 2 || phi.out_dim() != 2)
    throw std::invalid_argument("expected a qubit-to-qubit channel");
  const PurifiedMargin margin = canonical_purification(rho_a);
  const KrausSpectrum spec = orthogonal_kraus(choi_state(phi, margin));
  double sum_sq = 0, prod_sqrt = 1;
  for (long i = 0; i < 4; ++i) {
    const double l = i < spec.lambdas.size() ? spec.lambdas(i) : 0.0;
    sum_sq += l * l;
    prod_sqrt *= std::sqrt(std::max(l, 0.0));
  }
  const Matrix out = apply_channel(phi, rho_a.matrix);
  return trace_product(out, out).real() - sum_sq + 4.0 * prod_sqrt;
}

inline bool qubit_self_compatible(const KrausChannel& phi, const DensityOperator& rho_a) {
  return qubit_self_compatible_gap(phi, rho_a) >= -1e-12;
}

/// Hilbert-Schmidt form of the same criterion at rho_A = I/2:
/// tr[Phi(I)^2] - sum_i ||K_i||_HS^4 + (16/2^{R/2}) prod_i ||K_i||_HS over
/// HS-orthogonal Kraus operators; the product term is kept determinant
/// consistent (zero below Kraus rank 4). Equals 4x the spectral slack.
inline double hs_self_compatible_gap(const KrausChannel& phi) {
  if (phi.in_dim() != 2 || phi.out_dim() != 2)
    throw std::invalid_argument("expected a qubit-to-qubit channel");
  SystemLabel a = phi.in_label;
  const PurifiedMargin margin = canonical_purification(maximally_mixed(a));
  const KrausSpectrum spec = orthogonal_kraus(choi_state(phi, margin));
  const long rank = spec.lambdas.size();
  double sum4 = 0, prod = 1;
  for (long i = 0; i < rank; ++i) {
    const double hs2 = 2.0 * spec.lambdas(i);  // ||K_i||^2 = 2 lambda_i at I/2
    sum4 += hs2 * hs2;
    prod *= std::sqrt(hs2);
  }
  const double prod_term = rank >= 4 ? (16.0 / std::pow(2.0, rank / 2.0)) * prod : 0.0;
  const Matrix out = apply_channel(phi, Matrix::Identity(2, 2));
  return trace_product(out, out).real() - sum4 + prod_term;
}

inline bool hs_self_compatible(const KrausChannel& phi) {
  return hs_self_compatible_gap(phi) >= -1e-12;
}

}  // namespace qmarginal
