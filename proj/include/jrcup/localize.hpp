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
// Stage 2: channel parameters -> localization parameters through a 2D grid
// search over (ris_yaw, clock_bias) with iterative grid shrinking. Every
// candidate pair determines the UE position from the direct path and the RIS
// position as an ellipsoid/line intersection; the candidate cost compares
// the implied direction-cosine sums against the estimated ones.

#ifndef JRCUP_LOCALIZE_HPP
#define JRCUP_LOCALIZE_HPP

#include <optional>
#include <utility>
#include <vector>

#include "jrcup/geometry.hpp"
#include "jrcup/scenario.hpp"

namespace jrcup {

/// Grid-search schedule: fixed cardinalities, resolutions shrink by `shrink`
/// per refinement round, grids re-centered on the running winner.
struct SearchConfig {
  double yaw_min = -pi;
  double yaw_max = pi;
  int yaw_count = 64;
  double bias_min = 0.0;   // clock bias [s]
  double bias_max = 0.0;   // set from the scenario (0.9 / subcarrier spacing)
  int bias_count = 64;
  double shrink = 0.1;     // resolution factor per round, in (0,1)
  int rounds = 3;          // refinement rounds after the initial search
};

inline SearchConfig default_search(const ScenarioConfig& cfg) {
  SearchConfig s;
  s.bias_max = 0.9 / cfg.subcarrier_spacing();
  return s;
}

/// UE and RIS positions implied by the channel parameters and a candidate
/// clock bias. Returns nullopt when the candidate is geometrically invalid
/// (nonpositive path distances, vanishing intersection denominator, or an
/// intersection outside the ellipsoid).
inline std::optional<std::pair<Vec3, Vec3>> candidate_solution(const ChannelParams& eta,
                                                               double clock_bias, const Pose& bs,
                                                               double c = default_propagation_speed) {
  const double d_l = c * (eta.tau_los - clock_bias);
  const double d_r = c * (eta.tau_ris - clock_bias);
  if (!(d_r > d_l) || !(d_l > distance_floor)) return std::nullopt;
  const Mat3 r_bs = bs.rotation();
  const Vec3 p_ue = bs.position + d_l * (r_bs * direction_vector(eta.aoa_los));
  const Vec3 u = r_bs * direction_vector(eta.aoa_ris);
  const Vec3 back = bs.position - p_ue;
  const double denom = 2.0 * (d_r + u.dot(back));
  if (std::abs(denom) < 1e-12 * (1.0 + d_r)) return std::nullopt;
  const double x = (d_r * d_r - back.squaredNorm()) / denom;
  if (!(x > distance_floor) || !(x < d_r)) return std::nullopt;
  return std::make_pair(p_ue, bs.position + x * u);
}

/// Squared mismatch between the direction-cosine sums implied by a candidate
/// (ris_yaw, clock_bias) and the estimated ones. Invalid candidates cost +inf.
inline double localization_cost(const ChannelParams& eta, double ris_yaw, double clock_bias,
                                const Pose& bs, const Eigen::Vector2d& fixed_o1_o2,
                                double c = default_propagation_speed) {
  const auto cand = candidate_solution(eta, clock_bias, bs, c);
  if (!cand) return inf;
  const Pose ris{cand->second, Vec3(fixed_o1_o2[0], fixed_o1_o2[1], ris_yaw)};
  try {
    const AnglePair phi_a = aoa_in_lcs(ris, cand->first);
    const AnglePair phi_d = aoa_in_lcs(ris, bs.position);
    const auto [dy, dz] = intermediate_angles(phi_a, phi_d);
    const double ey = dy - eta.dirsum_y, ez = dz - eta.dirsum_z;
    return ey * ey + ez * ez;
  } catch (const degenerate_geometry&) {
    return inf;
  }
}

struct GridSearchResult {
  LocalizationState state;
  double cost = inf;
  /// winner of the initial search and of each refinement round, in order
  std::vector<LocalizationState> round_winners;
  std::vector<double> round_costs;
};

/// 2D search with `rounds` shrink-and-recenter refinements. Ties break
/// toward the smaller clock bias, then the smaller |yaw|, making the result
/// independent of candidate evaluation order. Throws search_failure when
/// every candidate of the initial grid is invalid.
inline GridSearchResult grid_search(const ChannelParams& eta, const SearchConfig& search,
                                    const Pose& bs, const Eigen::Vector2d& fixed_o1_o2 =
                                        Eigen::Vector2d::Zero(),
                                    double c = default_propagation_speed) {
  if (search.yaw_count < 1 || search.bias_count < 1)
    throw std::invalid_argument("grid_search: empty search sets");
  if (!(search.shrink > 0.0 && search.shrink < 1.0))
    throw std::invalid_argument("grid_search: shrink factor must be in (0,1)");

  double yaw_res = (search.yaw_max - search.yaw_min) / search.yaw_count;
  double bias_res = (search.bias_max - search.bias_min) / search.bias_count;

  GridSearchResult out;
  double best_yaw = 0.0, best_bias = 0.0;

  for (int round = 0; round <= search.rounds; ++round) {
    std::vector<double> yaws, biases;
    if (round == 0) {
      for (int i = 0; i < search.yaw_count; ++i) yaws.push_back(search.yaw_min + i * yaw_res);
      for (int i = 0; i < search.bias_count; ++i) biases.push_back(search.bias_min + i * bias_res);
    } else {
      yaw_res *= search.shrink;
      bias_res *= search.shrink;
      const int yc = search.yaw_count / 2, bc = search.bias_count / 2;
      for (int i = 0; i < search.yaw_count; ++i)
        yaws.push_back(wrap_angle(best_yaw + (i - (yc - (search.yaw_count % 2 ? 0 : 1))) * yaw_res));
      for (int i = 0; i < search.bias_count; ++i)
        biases.push_back(std::max(0.0, best_bias + (i - (bc - (search.bias_count % 2 ? 0 : 1))) * bias_res));
    }

    double round_best = inf;
    double round_yaw = 0.0, round_bias = 0.0;
    for (double yaw : yaws)
      for (double bias : biases) {
        const double f = localization_cost(eta, yaw, bias, bs, fixed_o1_o2, c);
        const bool better =
            f < round_best ||
            (f == round_best && (bias < round_bias ||
                                 (bias == round_bias && std::abs(yaw) < std::abs(round_yaw))));
        if (better) {
          round_best = f;
          round_yaw = yaw;
          round_bias = bias;
        }
      }

    if (!std::isfinite(round_best)) {
      if (round == 0) throw search_failure("grid_search: every candidate invalid");
      break;  // refinement collapsed onto an invalid neighborhood; keep previous winner
    }
    best_yaw = round_yaw;
    best_bias = round_bias;
    const auto cand = candidate_solution(eta, best_bias, bs, c);
    LocalizationState st;
    st.p_ue = cand->first;
    st.p_ris = cand->second;
    st.ris_yaw = best_yaw;
    st.clock_bias = best_bias;
    st.fixed_o1_o2 = fixed_o1_o2;
    out.round_winners.push_back(st);
    out.round_costs.push_back(round_best);
    out.state = st;
    out.cost = round_best;
  }
  return out;
}

}  // namespace jrcup

#endif  // JRCUP_LOCALIZE_HPP
