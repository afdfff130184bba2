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

#include "qmarginal/analytic.hpp"
#include "qmarginal/choi.hpp"

namespace qmarginal {

/// Witness values within this band of zero count as boundary cases.
inline constexpr double kEntropicBand = 1e-9;

/// Entropy of a channel for a fixed canonical purification of the input
/// margin: the von Neumann entropy of its Choi state, in bits.
inline double channel_entropy(const KrausChannel& phi, const PurifiedMargin& margin) {
  return von_neumann_entropy(choi_state(phi, margin).state);
}

/// Output state fed into the marginal entropies: Phi applied to rho_A
/// transposed in the stored eigenbasis.
inline DensityOperator channel_output_margin(const KrausChannel& phi,
                                             const PurifiedMargin& margin) {
  const Matrix in = transpose_in_basis(margin.rho_A.matrix, margin.eigenbasis);
  return DensityOperator({phi.out_label}, apply_channel(phi, in), Tolerances{1e-8, 1e-8, 1e-8});
}

/// Entropic data backing a weak-monotonicity witness. A negative
/// witness_value certifies incompatibility; nonnegative values are silent.
struct EntropicReport {
  std::vector<double> h_channels;
  std::vector<double> h_margins;
  double h_A = 0;
  double witness_value = 0;
  /// For the three-channel witness: the value of each doubled-slot choice
  /// (witness_value is their minimum).
  std::vector<double> slot_values;
};

/// Pair witness H(Phi_1) + H(Phi_2) - H(rho_B1) - H(rho_B2).
inline EntropicReport wm_pair_witness(const KrausChannel& phi1, const KrausChannel& phi2,
                                      const PurifiedMargin& margin) {
  EntropicReport r;
  r.h_A = von_neumann_entropy(margin.rho_A);
  for (const auto* phi : {&phi1, &phi2}) {
    r.h_channels.push_back(channel_entropy(*phi, margin));
    r.h_margins.push_back(von_neumann_entropy(channel_output_margin(*phi, margin)));
  }
  r.witness_value = r.h_channels[0] + r.h_channels[1] - r.h_margins[0] - r.h_margins[1];
  return r;
}

/// Three-channel witness with a doubled slot:
/// H(Phi_i) + H(Phi_j) + 2 H(Phi_k) - H(rho_Bi) - H(rho_Bj) - 2 H(rho_A).
/// All three slot assignments are evaluated; the minimum is reported.
inline EntropicReport wm_triple_witness(const KrausChannel& phi1, const KrausChannel& phi2,
                                        const KrausChannel& phi3,
                                        const PurifiedMargin& margin) {
  EntropicReport r;
  r.h_A = von_neumann_entropy(margin.rho_A);
  const KrausChannel* phis[3] = {&phi1, &phi2, &phi3};
  for (const auto* phi : phis) {
    r.h_channels.push_back(channel_entropy(*phi, margin));
    r.h_margins.push_back(von_neumann_entropy(channel_output_margin(*phi, margin)));
  }
  for (int slot = 0; slot < 3; ++slot) {
    double v = 2.0 * r.h_channels[std::size_t(slot)] - 2.0 * r.h_A;
    for (int i = 0; i < 3; ++i) {
      if (i == slot) continue;
      v += r.h_channels[std::size_t(i)] - r.h_margins[std::size_t(i)];
    }
    r.slot_values.push_back(v);
  }
  r.witness_value = *std::min_element(r.slot_values.begin(), r.slot_values.end());
  return r;
}

/// The two self-compatibility conditions, as (H(Phi) - H(rho_B),
/// 2 H(Phi) - H(rho_B) - H(rho_A)). Either being negative certifies that the
/// channel is not self-compatible. When H(rho_A) >= H(rho_B) the second is
/// the tighter one.
inline std::pair<double, double> self_compat_entropic(const KrausChannel& phi,
                                                      const PurifiedMargin& margin) {
  const double h_phi = channel_entropy(phi, margin);
  const double h_b = von_neumann_entropy(channel_output_margin(phi, margin));
  const double h_a = von_neumann_entropy(margin.rho_A);
  return {h_phi - h_b, 2.0 * h_phi - h_b - h_a};
}

//==============================================================================
// Depolarizing region scan
//==============================================================================

/// Choi spectrum of the depolarizing channel at the maximally mixed margin:
/// one eigenvalue 1 - mu + mu/d^2 and d^2 - 1 eigenvalues mu/d^2.
inline RealVector depol_choi_spectrum(int d, double mu) {
  RealVector s(long(d) * d);
  s(0) = 1.0 - mu + mu / (double(d) * d);
  for (long i = 1; i < s.size(); ++i) s(i) = mu / (double(d) * d);
  return s;
}

struct RegionPoint {
  double mu = 0, nu = 0;
  bool exact = false;     // closed-form compatibility
  bool entropic = false;  // pair witness does not rule the point out
};

/// Evaluate the exact depolarizing criterion and the entropic pair witness
/// on a uniform grid over [0,1]^2, row-major in mu then nu. Closed forms
/// only, so large d runs in negligible time.
inline std::vector<RegionPoint> depol_region_scan(int d, int grid) {
  if (d < 2) throw std::invalid_argument("dimension must be >= 2");
  if (grid < 2) throw std::invalid_argument("grid must have at least 2 points per axis");
  const double log2d = std::log2(double(d));
  std::vector<double> h(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i)
    h[std::size_t(i)] = shannon_entropy(depol_choi_spectrum(d, double(i) / (grid - 1)));
  std::vector<RegionPoint> points;
  points.reserve(std::size_t(grid) * std::size_t(grid));
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      RegionPoint pt;
      pt.mu = double(i) / (grid - 1);
      pt.nu = double(j) / (grid - 1);
      pt.exact = depol_compatible(pt.mu, pt.nu, d);
      // Output margins stay maximally mixed for this family.
      pt.entropic = h[std::size_t(i)] + h[std::size_t(j)] - 2.0 * log2d >= -kEntropicBand;
      points.push_back(pt);
    }
  return points;
}

}  // namespace qmarginal
