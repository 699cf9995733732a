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

#ifndef JRCUP_COMMON_HPP
#define JRCUP_COMMON_HPP

#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace jrcup {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using MatC = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx j1i{0.0, 1.0};
inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Vacuum propagation speed [m/s]. Scenario files may override it.
inline constexpr double default_propagation_speed = 299792458.0;

/// Raised when two points that must be distinct (or a distance that must be
/// positive) collapse below the resolvable threshold.
class degenerate_geometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a linear-algebra step loses rank (pseudo-inverse of a
/// rank-deficient block, singular reflection transform, ...).
class numerical_degeneracy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the 2D localization search when every candidate is invalid.
class search_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on malformed scenario / experiment configuration.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Positions closer than this [m] are treated as coincident.
inline constexpr double distance_floor = 1e-9;

inline double wrap_angle(double a) {
  // maps to (-pi, pi]
  a = std::fmod(a, 2.0 * pi);
  if (a <= -pi) a += 2.0 * pi;
  if (a > pi) a -= 2.0 * pi;
  return a;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
inline double deg_to_rad(double d) { return d * pi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / pi; }

/// Kronecker product (first factor varies slowest).
inline MatC kron(const MatC& a, const MatC& b) {
  MatC out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k)
      out.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
  return out;
}

}  // namespace jrcup

#endif  // JRCUP_COMMON_HPP
