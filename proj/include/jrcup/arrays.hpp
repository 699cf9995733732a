// SPDX-License-Identifier: Apache-2.0
//
// jrcup - active-RIS joint calibration and user positioning toolkit
// Copyright (C) 2026 jrcup contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef JRCUP_ARRAYS_HPP
#define JRCUP_ARRAYS_HPP

#include <vector>

#include "jrcup/geometry.hpp"

namespace jrcup {

/// Uniform planar array in the local YOZ plane (all element x-coordinates
/// zero). Element i = i1*n2 + i2 sits at [0, i1*spacing, i2*spacing], which
/// makes the response vector the Kronecker product of two uniform linear
/// responses with the first (y) index varying slowest.
struct ArrayGeometry {
  int n1 = 1;
  int n2 = 1;
  double spacing = 0.0;  // [m]

  int size() const { return n1 * n2; }

  std::vector<Vec3> element_positions() const {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (int i1 = 0; i1 < n1; ++i1)
      for (int i2 = 0; i2 < n2; ++i2) out.emplace_back(0.0, i1 * spacing, i2 * spacing);
    return out;
  }
};

/// Uniform linear response [1, e^{jw}, ..., e^{j(n-1)w}].
inline VecC ula_response(int n, double omega) {
  VecC v(n);
  for (int i = 0; i < n; ++i) v[i] = std::exp(j1i * (omega * i));
  return v;
}

/// Planar-array response: entry i = exp(j * 2*pi*fc/c * t(a)^T p_i).
inline VecC array_response(const ArrayGeometry& geom, const AnglePair& a, double fc,
                           double c = default_propagation_speed) {
  const Vec3 t = direction_vector(a);
  const double kappa = 2.0 * pi * fc / c;
  // t has zero weight on x for YOZ arrays, leaving the two ULA frequencies
  const double w1 = kappa * geom.spacing * t[1];
  const double w2 = kappa * geom.spacing * t[2];
  return kron(ula_response(geom.n1, w1), ula_response(geom.n2, w2));
}

/// Combined arrival+departure RIS response expressed through the
/// direction-cosine sums: entry i = exp(j*kappa*(y_i*dirsum_y + z_i*dirsum_z)).
/// Equals the Hadamard product of the arrival and departure responses.
inline VecC ris_combined_response(const ArrayGeometry& geom, double dirsum_y, double dirsum_z,
                                  double fc, double c = default_propagation_speed) {
  const double kappa = 2.0 * pi * fc / c;
  const double w1 = kappa * geom.spacing * dirsum_y;
  const double w2 = kappa * geom.spacing * dirsum_z;
  return kron(ula_response(geom.n1, w1), ula_response(geom.n2, w2));
}

}  // namespace jrcup

#endif  // JRCUP_ARRAYS_HPP
