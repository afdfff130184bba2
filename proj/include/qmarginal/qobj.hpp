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

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

namespace qmarginal {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Validation tolerances for quantum objects. All defaults are 1e-9 and can
/// be overridden per construction.
struct Tolerances {
  double herm = 1e-9;
  double psd = 1e-9;
  double trace = 1e-9;
};

/// Eigenvalues below this floor contribute nothing to entropies (0 log 0 = 0).
inline constexpr double kEigenvalueFloor = 1e-12;

//==============================================================================
// System labels
//==============================================================================

/// A named tensor factor with its Hilbert-space dimension.
struct SystemLabel {
  std::string name;
  int dim = 0;

  friend bool operator==(const SystemLabel&, const SystemLabel&) = default;
};

inline long dim_product(const std::vector<SystemLabel>& factors) {
  long d = 1;
  for (const auto& f : factors) {
    if (f.dim < 1) throw std::invalid_argument("system dimension must be >= 1: " + f.name);
    d *= f.dim;
  }
  return d;
}

inline void check_unique_names(const std::vector<SystemLabel>& factors) {
  for (std::size_t i = 0; i < factors.size(); ++i)
    for (std::size_t j = i + 1; j < factors.size(); ++j)
      if (factors[i].name == factors[j].name)
        throw std::invalid_argument("duplicate label: " + factors[i].name);
}

//==============================================================================
// Dense matrix helpers
//==============================================================================

inline Matrix kron(const Matrix& a, const Matrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

inline Vector kron_vec(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (long i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline bool is_hermitian_matrix(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

/// Re tr[A^dag B]; real Hilbert-Schmidt inner product.
inline double inner(const Matrix& a, const Matrix& b) {
  return a.conjugate().cwiseProduct(b).sum().real();
}

/// tr[A B] without forming the product.
inline Complex trace_product(const Matrix& a, const Matrix& b) {
  return a.transpose().cwiseProduct(b).sum();
}

inline RealVector hermitian_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigenvalue computation failed");
  return es.eigenvalues();
}

inline double min_eigenvalue(const Matrix& m) { return hermitian_eigenvalues(m).minCoeff(); }

inline Matrix pauli_x() {
  Matrix s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

inline Matrix pauli_y() {
  Matrix s(2, 2);
  s << 0, Complex(0, -1), Complex(0, 1), 0;
  return s;
}

inline Matrix pauli_z() {
  Matrix s(2, 2);
  s << 1, 0, 0, -1;
  return s;
}

/// Transpose of x taken in the column basis of the unitary `basis`.
inline Matrix transpose_in_basis(const Matrix& x, const Matrix& basis) {
  return basis * (basis.adjoint() * x * basis).transpose() * basis.adjoint();
}

//==============================================================================
// Labeled operators
//==============================================================================

/// A Hermitian operator on an ordered list of labeled tensor factors.
struct HermitianOperator {
  std::vector<SystemLabel> factors;
  Matrix matrix;

  HermitianOperator(std::vector<SystemLabel> f, Matrix m, Tolerances tol = {})
      : factors(std::move(f)) {
    check_unique_names(factors);
    const long d = dim_product(factors);
    if (m.rows() != d || m.cols() != d)
      throw std::invalid_argument("operator size does not match factor dimensions");
    if (!is_hermitian_matrix(m, tol.herm))
      throw std::invalid_argument("operator is not Hermitian within tolerance");
    matrix = hermitian_part(std::move(m));
  }

  long dim() const { return matrix.rows(); }
};

/// A positive unit-trace operator on an ordered list of labeled tensor
/// factors. Positivity and trace are validated on construction.
struct DensityOperator {
  std::vector<SystemLabel> factors;
  Matrix matrix;

  DensityOperator(std::vector<SystemLabel> f, Matrix m, Tolerances tol = {})
      : factors(std::move(f)) {
    check_unique_names(factors);
    const long d = dim_product(factors);
    if (m.rows() != d || m.cols() != d)
      throw std::invalid_argument("state size does not match factor dimensions");
    if (!is_hermitian_matrix(m, tol.herm))
      throw std::invalid_argument("state is not Hermitian within tolerance");
    matrix = hermitian_part(std::move(m));
    if (std::abs(matrix.trace().real() - 1.0) > tol.trace)
      throw std::invalid_argument("state trace deviates from 1");
    if (min_eigenvalue(matrix) < -tol.psd)
      throw std::invalid_argument("state has a negative eigenvalue beyond tolerance");
  }

  long dim() const { return matrix.rows(); }

  std::vector<int> dims() const {
    std::vector<int> d(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) d[i] = factors[i].dim;
    return d;
  }
};

inline std::vector<int> factor_dims(const std::vector<SystemLabel>& factors) {
  std::vector<int> d(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i) d[i] = factors[i].dim;
  return d;
}

inline DensityOperator maximally_mixed(const SystemLabel& label) {
  return DensityOperator({label}, Matrix::Identity(label.dim, label.dim) / double(label.dim));
}

//==============================================================================
// Tensor products and partial traces
//==============================================================================

namespace detail {

inline Matrix tensor_matrices(const std::vector<const Matrix*>& mats) {
  Matrix out = *mats.front();
  for (std::size_t i = 1; i < mats.size(); ++i) out = kron(out, *mats[i]);
  return out;
}

template <class Op>
Op tensor_impl(const std::vector<Op>& ops) {
  if (ops.empty()) throw std::invalid_argument("tensor of zero operators");
  std::vector<SystemLabel> factors;
  std::vector<const Matrix*> mats;
  for (const auto& op : ops) {
    factors.insert(factors.end(), op.factors.begin(), op.factors.end());
    mats.push_back(&op.matrix);
  }
  check_unique_names(factors);
  return Op(std::move(factors), tensor_matrices(mats));
}

// Offsets of every composite sub-index of the masked factors within the full
// row index, in row-major (first factor most significant) convention.
inline std::vector<long> subindex_offsets(const std::vector<int>& dims,
                                          const std::vector<bool>& mask) {
  std::vector<long> strides(dims.size(), 1);
  for (int i = int(dims.size()) - 2; i >= 0; --i) strides[i] = strides[i + 1] * dims[i + 1];
  std::vector<int> masked_dims;
  std::vector<long> masked_strides;
  long count = 1;
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (mask[i]) {
      masked_dims.push_back(dims[i]);
      masked_strides.push_back(strides[i]);
      count *= dims[i];
    }
  std::vector<long> offsets(count, 0);
  for (long k = 0; k < count; ++k) {
    long rem = k, off = 0;
    for (int i = int(masked_dims.size()) - 1; i >= 0; --i) {
      off += (rem % masked_dims[i]) * masked_strides[i];
      rem /= masked_dims[i];
    }
    offsets[std::size_t(k)] = off;
  }
  return offsets;
}

}  // namespace detail

/// Kronecker product of labeled operators in the given order. Labels must be
/// disjoint across the arguments.
inline HermitianOperator tensor(const std::vector<HermitianOperator>& ops) {
  return detail::tensor_impl(ops);
}

inline DensityOperator tensor(const std::vector<DensityOperator>& ops) {
  return detail::tensor_impl(ops);
}

/// Partial trace over the factors *not* masked `keep`. dims gives the factor
/// dimensions of the square input in row-major composite-index convention.
inline Matrix partial_trace_matrix(const Matrix& m, const std::vector<int>& dims,
                                   const std::vector<bool>& keep) {
  if (dims.size() != keep.size()) throw std::invalid_argument("mask size mismatch");
  std::vector<bool> traced(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) traced[i] = !keep[i];
  const auto kept_off = detail::subindex_offsets(dims, keep);
  const auto traced_off = detail::subindex_offsets(dims, traced);
  Matrix out = Matrix::Zero(long(kept_off.size()), long(kept_off.size()));
  for (std::size_t r = 0; r < kept_off.size(); ++r)
    for (std::size_t c = 0; c < kept_off.size(); ++c) {
      Complex acc = 0;
      for (long t : traced_off) acc += m(kept_off[r] + t, kept_off[c] + t);
      out(long(r), long(c)) = acc;
    }
  return out;
}

namespace detail {

template <class Op>
Op partial_trace_impl(const Op& op, const std::vector<std::string>& keep) {
  std::vector<bool> mask(op.factors.size(), false);
  for (const auto& name : keep) {
    bool found = false;
    for (std::size_t i = 0; i < op.factors.size(); ++i)
      if (op.factors[i].name == name) {
        mask[i] = true;
        found = true;
      }
    if (!found) throw std::invalid_argument("unknown label: " + name);
  }
  std::vector<SystemLabel> kept;
  for (std::size_t i = 0; i < op.factors.size(); ++i)
    if (mask[i]) kept.push_back(op.factors[i]);
  if (kept.empty()) throw std::invalid_argument("partial trace must keep at least one factor");
  // Loosen validation: numerically tiny negativity can be amplified relative
  // to the retained block, but the operation is exactly trace preserving.
  return Op(std::move(kept), partial_trace_matrix(op.matrix, factor_dims(op.factors), mask),
            Tolerances{1e-8, 1e-8, 1e-8});
}

}  // namespace detail

/// Reduce to the subsystems named in `keep` (original factor order kept).
inline DensityOperator partial_trace(const DensityOperator& op,
                                     const std::vector<std::string>& keep) {
  return detail::partial_trace_impl(op, keep);
}

inline HermitianOperator partial_trace(const HermitianOperator& op,
                                       const std::vector<std::string>& keep) {
  return detail::partial_trace_impl(op, keep);
}

//==============================================================================
// Factor reordering and embedding
//==============================================================================

/// Reorder tensor factors. perm[new_position] = old_position.
inline Matrix permute_factors(const Matrix& m, const std::vector<int>& dims,
                              const std::vector<int>& perm) {
  const std::size_t n = dims.size();
  if (perm.size() != n) throw std::invalid_argument("permutation size mismatch");
  std::vector<long> old_strides(n, 1), new_dims(n);
  for (int i = int(n) - 2; i >= 0; --i) old_strides[i] = old_strides[i + 1] * dims[i + 1];
  long total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    new_dims[i] = dims[std::size_t(perm[i])];
    total *= dims[i];
  }
  std::vector<long> map(static_cast<std::size_t>(total));
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx, old_idx = 0;
    for (int i = int(n) - 1; i >= 0; --i) {
      const long digit = rem % new_dims[std::size_t(i)];
      rem /= new_dims[std::size_t(i)];
      old_idx += digit * old_strides[std::size_t(perm[std::size_t(i)])];
    }
    map[std::size_t(idx)] = old_idx;
  }
  Matrix out(total, total);
  for (long r = 0; r < total; ++r)
    for (long c = 0; c < total; ++c) out(r, c) = m(map[std::size_t(r)], map[std::size_t(c)]);
  return out;
}

/// Embed op into the larger system `target` (identity on missing factors),
/// returning the matrix in target factor order.
inline Matrix embed(const HermitianOperator& op, const std::vector<SystemLabel>& target) {
  std::vector<int> pos_in_target;
  for (const auto& f : op.factors) {
    auto it = std::find_if(target.begin(), target.end(),
                           [&](const SystemLabel& t) { return t.name == f.name; });
    if (it == target.end() || it->dim != f.dim)
      throw std::invalid_argument("embed: factor not present in target: " + f.name);
    pos_in_target.push_back(int(it - target.begin()));
  }
  Matrix m = op.matrix;
  std::vector<int> order;  // target index of each factor of m, op factors first
  order = pos_in_target;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (std::find(pos_in_target.begin(), pos_in_target.end(), int(i)) != pos_in_target.end())
      continue;
    m = kron(m, Matrix::Identity(target[i].dim, target[i].dim));
    order.push_back(int(i));
  }
  // order[k] = target slot of current factor k; invert to perm[new] = old.
  std::vector<int> perm(target.size());
  for (std::size_t k = 0; k < order.size(); ++k) perm[std::size_t(order[k])] = int(k);
  std::vector<int> cur_dims(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) cur_dims[k] = target[std::size_t(order[k])].dim;
  return permute_factors(m, cur_dims, perm);
}

//==============================================================================
// Spectral functionals
//==============================================================================

/// Shannon entropy in bits of a (sub)probability vector.
inline double shannon_entropy(const RealVector& p) {
  double h = 0;
  for (long i = 0; i < p.size(); ++i)
    if (p(i) > kEigenvalueFloor) h -= p(i) * std::log2(p(i));
  return h;
}

/// Von Neumann entropy in bits. Throws on inputs with eigenvalues below
/// the PSD tolerance.
inline double von_neumann_entropy(const DensityOperator& rho, Tolerances tol = {}) {
  RealVector ev = hermitian_eigenvalues(rho.matrix);
  if (ev.minCoeff() < -tol.psd)
    throw std::domain_error("entropy of a non-positive-semidefinite operator");
  return shannon_entropy(ev);
}

/// Discrete Weyl displacement W(q,p) on dimension d, acting as
/// W(q,p)|j> = exp(i pi (q+2j) p / d) |j+q mod d>.
inline Matrix weyl(int q, int p, int d) {
  if (d < 2) throw std::invalid_argument("weyl: dimension must be >= 2");
  auto mod = [d](int x) { return ((x % d) + d) % d; };
  q = mod(q);
  p = mod(p);
  Matrix w = Matrix::Zero(d, d);
  const double pi = std::acos(-1.0);
  for (int j = 0; j < d; ++j)
    w(mod(j + q), j) = std::exp(Complex(0, pi * double(q + 2 * j) * double(p) / double(d)));
  return w;
}

inline bool is_psd(const HermitianOperator& op, double tol) {
  return min_eigenvalue(op.matrix) >= -tol;
}

inline bool is_psd_matrix(const Matrix& m, double tol) { return min_eigenvalue(m) >= -tol; }

//==============================================================================
// POVMs
//==============================================================================

/// A positive-operator-valued measure on one (possibly composite) system.
struct Povm {
  std::vector<HermitianOperator> effects;

  explicit Povm(std::vector<HermitianOperator> eff, Tolerances tol = {})
      : effects(std::move(eff)) {
    if (effects.empty()) throw std::invalid_argument("POVM needs at least one effect");
    const auto& factors = effects.front().factors;
    Matrix sum = Matrix::Zero(effects.front().dim(), effects.front().dim());
    for (const auto& e : effects) {
      if (e.factors != factors) throw std::invalid_argument("POVM effects on mismatched systems");
      if (!is_psd(e, tol.psd)) throw std::invalid_argument("POVM effect is not positive");
      sum += e.matrix;
    }
    if ((sum - Matrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff() > tol.trace)
      throw std::invalid_argument("POVM effects do not sum to the identity");
  }

  long dim() const { return effects.front().dim(); }
  const std::vector<SystemLabel>& factors() const { return effects.front().factors; }
};

//==============================================================================
// Orthonormal Hermitian operator basis
//==============================================================================

/// Orthonormal basis of d x d Hermitian matrices under Re tr[A^dag B].
/// Element 0 is I/sqrt(d); elements 1..d-1 are the diagonal traceless ones;
/// the rest are the symmetric and antisymmetric off-diagonal pairs.
inline std::vector<Matrix> hermitian_basis(int d) {
  std::vector<Matrix> basis;
  basis.reserve(std::size_t(d) * std::size_t(d));
  basis.push_back(Matrix::Identity(d, d) / std::sqrt(double(d)));
  for (int k = 1; k < d; ++k) {
    Matrix m = Matrix::Zero(d, d);
    for (int i = 0; i < k; ++i) m(i, i) = 1.0;
    m(k, k) = -double(k);
    basis.push_back(m / std::sqrt(double(k) * (k + 1.0)));
  }
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Matrix s = Matrix::Zero(d, d);
      s(i, j) = inv_sqrt2;
      s(j, i) = inv_sqrt2;
      basis.push_back(s);
      Matrix a = Matrix::Zero(d, d);
      a(i, j) = Complex(0, -inv_sqrt2);
      a(j, i) = Complex(0, inv_sqrt2);
      basis.push_back(a);
    }
  return basis;
}

}  // namespace qmarginal
