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
//
// Forward geometric model: device poses -> channel-level parameters
// (arrival/departure angle pairs, path delays, RIS direction-cosine sums).

#ifndef JRCUP_GEOMETRY_HPP
#define JRCUP_GEOMETRY_HPP

#include <cmath>
#include <utility>

#include "jrcup/common.hpp"

namespace jrcup {

/// Rotation matrix from Euler angles [rx, ry, rz] (radians), intrinsic
/// rotations applied in Z*Y*X order. euler = 0 faces the +X axis.
inline Mat3 rotation_matrix(const Vec3& euler) {
  const double c1 = std::cos(euler[0]), s1 = std::sin(euler[0]);
  const double c2 = std::cos(euler[1]), s2 = std::sin(euler[1]);
  const double c3 = std::cos(euler[2]), s3 = std::sin(euler[2]);
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, c1, -s1, 0, s1, c1;
  ry << c2, 0, s2, 0, 1, 0, -s2, 0, c2;
  rz << c3, -s3, 0, s3, c3, 0, 0, 0, 1;
  return rz * ry * rx;
}

/// Derivative of rotation_matrix with respect to the Z-axis angle.
inline Mat3 rotation_matrix_dz(const Vec3& euler) {
  const double c1 = std::cos(euler[0]), s1 = std::sin(euler[0]);
  const double c2 = std::cos(euler[1]), s2 = std::sin(euler[1]);
  const double c3 = std::cos(euler[2]), s3 = std::sin(euler[2]);
  Mat3 rx, ry, dz;
  rx << 1, 0, 0, 0, c1, -s1, 0, s1, c1;
  ry << c2, 0, s2, 0, 1, 0, -s2, 0, c2;
  dz << -s3, -c3, 0, c3, -s3, 0, 0, 0, 0;
  return dz * ry * rx;
}

/// Position + orientation of an anchored device (BS or RIS).
struct Pose {
  Vec3 position = Vec3::Zero();
  Vec3 euler = Vec3::Zero();  // radians, [X, Y, Z] axes, applied Z*Y*X

  Mat3 rotation() const { return rotation_matrix(euler); }
};

/// Azimuth/elevation pair in a device's local coordinate system.
/// az in (-pi, pi], el in [-pi/2, pi/2].
struct AnglePair {
  double az = 0.0;
  double el = 0.0;
};

/// Unit direction vector of an angle pair:
/// [cos(az)cos(el), sin(az)cos(el), sin(el)].
inline Vec3 direction_vector(const AnglePair& a) {
  const double ca = std::cos(a.az), sa = std::sin(a.az);
  const double ce = std::cos(a.el), se = std::sin(a.el);
  return {ca * ce, sa * ce, se};
}

/// Angle pair of `target` as seen from `observer`, in the observer's local
/// frame. Throws degenerate_geometry when target coincides with the observer.
inline AnglePair aoa_in_lcs(const Pose& observer, const Vec3& target) {
  const Vec3 local = observer.rotation().transpose() * (target - observer.position);
  const double dist = local.norm();
  if (dist < distance_floor)
    throw degenerate_geometry("aoa_in_lcs: target coincides with observer");
  AnglePair out;
  out.az = std::atan2(local[1], local[0]);
  // normalize before asin so rounding cannot push |arg| past 1
  out.el = std::asin(std::clamp(local[2] / dist, -1.0, 1.0));
  return out;
}

/// Unknowns of the joint calibration/positioning problem: UE position, RIS
/// position, RIS Z-axis rotation and the UE-BS clock bias. The remaining RIS
/// Euler angles are known (gravity-stabilized mount) and default to zero.
struct LocalizationState {
  Vec3 p_ue = Vec3::Zero();
  Vec3 p_ris = Vec3::Zero();
  double ris_yaw = 0.0;       // rotation about the RIS local Z axis [rad]
  double clock_bias = 0.0;    // [s]
  Eigen::Vector2d fixed_o1_o2 = Eigen::Vector2d::Zero();

  Pose ris_pose() const {
    return Pose{p_ris, Vec3(fixed_o1_o2[0], fixed_o1_o2[1], ris_yaw)};
  }
};

/// Localization-related channel parameters (the eta vector):
/// BS-side angle pairs of the direct and reflected paths, the two path
/// delays, and the RIS direction-cosine sums.
struct ChannelParams {
  AnglePair aoa_los;   // direct UE->BS path, BS local frame
  AnglePair aoa_ris;   // RIS->BS path, BS local frame
  double tau_los = 0.0;  // [s], includes clock bias
  double tau_ris = 0.0;  // [s], includes clock bias
  double dirsum_y = 0.0;  // sin(azA)cos(elA) + sin(azD)cos(elD)
  double dirsum_z = 0.0;  // sin(elA) + sin(elD)

  Eigen::Matrix<double, 8, 1> to_vector() const {
    Eigen::Matrix<double, 8, 1> v;
    v << aoa_los.az, aoa_los.el, aoa_ris.az, aoa_ris.el, tau_los, tau_ris, dirsum_y, dirsum_z;
    return v;
  }
  static ChannelParams from_vector(const Eigen::Matrix<double, 8, 1>& v) {
    ChannelParams p;
    p.aoa_los = {v[0], v[1]};
    p.aoa_ris = {v[2], v[3]};
    p.tau_los = v[4];
    p.tau_ris = v[5];
    p.dirsum_y = v[6];
    p.dirsum_z = v[7];
    return p;
  }
};

/// ChannelParams plus the complex path gains (nuisance parameters).
struct FullChannelParams {
  ChannelParams eta;
  cplx alpha_los{0.0, 0.0};
  cplx alpha_ris{0.0, 0.0};
};

/// Direct and reflected path delays (tau_los, tau_ris), both offset by the
/// clock bias.
inline std::pair<double, double> path_delays(const LocalizationState& state, const Vec3& p_bs,
                                             double c = default_propagation_speed) {
  const double d_ub = (p_bs - state.p_ue).norm();
  const double d_ur = (state.p_ris - state.p_ue).norm();
  const double d_rb = (p_bs - state.p_ris).norm();
  if (d_ub < distance_floor || d_ur < distance_floor || d_rb < distance_floor)
    throw degenerate_geometry("path_delays: coincident device positions");
  return {d_ub / c + state.clock_bias, (d_ur + d_rb) / c + state.clock_bias};
}

/// Direction-cosine sums of the RIS arrival/departure pair. Equal to the sums
/// of the local y- and z-direction cosines of the two unit vectors.
inline std::pair<double, double> intermediate_angles(const AnglePair& phi_arrival,
                                                     const AnglePair& phi_departure) {
  const double y = std::sin(phi_arrival.az) * std::cos(phi_arrival.el) +
                   std::sin(phi_departure.az) * std::cos(phi_departure.el);
  const double z = std::sin(phi_arrival.el) + std::sin(phi_departure.el);
  return {y, z};
}

/// Full forward map: device states -> channel parameters.
inline ChannelParams forward_map(const LocalizationState& state, const Pose& bs,
                                 double c = default_propagation_speed) {
  ChannelParams out;
  out.aoa_los = aoa_in_lcs(bs, state.p_ue);
  out.aoa_ris = aoa_in_lcs(bs, state.p_ris);
  std::tie(out.tau_los, out.tau_ris) = path_delays(state, bs.position, c);
  const Pose ris = state.ris_pose();
  const AnglePair phi_a = aoa_in_lcs(ris, state.p_ue);
  const AnglePair phi_d = aoa_in_lcs(ris, bs.position);
  std::tie(out.dirsum_y, out.dirsum_z) = intermediate_angles(phi_a, phi_d);
  return out;
}

}  // namespace jrcup

#endif  // JRCUP_GEOMETRY_HPP
