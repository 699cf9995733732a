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

#include <catch2/catch_amalgamated.hpp>

#include "jrcup/localize.hpp"
#include "jrcup/rng.hpp"

using namespace jrcup;

namespace {

ScenarioConfig cfg() { return default_scenario(); }

LocalizationState truth_state() { return default_scenario().truth; }

ChannelParams truth_eta() {
  const ScenarioConfig s = cfg();
  return forward_map(s.truth, s.bs_pose, s.c);
}

/// central-difference Hessian of the candidate cost around a point
Eigen::Matrix2d cost_hessian(const ChannelParams& eta, double yaw, double bias, const Pose& bs,
                             double c) {
  const double hy = 1e-4, hb = 1e-13;
  auto f = [&](double dy, double db) {
    return localization_cost(eta, yaw + dy, bias + db, bs, Eigen::Vector2d::Zero(), c);
  };
  Eigen::Matrix2d h;
  const double f0 = f(0, 0);
  h(0, 0) = (f(hy, 0) - 2 * f0 + f(-hy, 0)) / (hy * hy);
  h(1, 1) = (f(0, hb) - 2 * f0 + f(0, -hb)) / (hb * hb);
  h(0, 1) = h(1, 0) =
      (f(hy, hb) - f(hy, -hb) - f(-hy, hb) + f(-hy, -hb)) / (4 * hy * hb);
  // scale the bias axis to meters so both axes are comparable
  h(1, 1) /= c * c;
  h(0, 1) /= c;
  h(1, 0) /= c;
  return h;
}

}  // namespace

TEST_CASE("candidate solution reproduces the default layout exactly") {
  const ScenarioConfig s = cfg();
  const ChannelParams eta = truth_eta();
  const auto cand = candidate_solution(eta, s.truth.clock_bias, s.bs_pose, s.c);
  REQUIRE(cand.has_value());
  REQUIRE((cand->first - s.truth.p_ue).norm() < 1e-9);
  REQUIRE((cand->second - s.truth.p_ris).norm() < 1e-9);

  // hand-checked intersection algebra: d_r^2 = 242, cross term vanishes,
  // distance to the reflecting surface = sqrt(50)
  const double d_r = s.c * (eta.tau_ris - s.truth.clock_bias);
  REQUIRE(d_r * d_r == Catch::Approx(242.0).epsilon(1e-12));
  const Vec3 u = s.bs_pose.rotation() * direction_vector(eta.aoa_ris);
  const Vec3 back = s.bs_pose.position - cand->first;
  REQUIRE(std::abs(u.dot(back)) < 1e-9);
  REQUIRE((cand->second - s.bs_pose.position).norm() ==
          Catch::Approx(std::sqrt(50.0)).margin(1e-9));
}

TEST_CASE("candidate solution rejects degenerate clock biases") {
  const ScenarioConfig s = cfg();
  const ChannelParams eta = truth_eta();
  // clock bias equal to the direct delay collapses the direct distance
  REQUIRE_FALSE(candidate_solution(eta, eta.tau_los, s.bs_pose, s.c).has_value());
  // bias beyond the direct delay gives negative distances
  REQUIRE_FALSE(candidate_solution(eta, eta.tau_los + 1e-9, s.bs_pose, s.c).has_value());
}

TEST_CASE("returned reflector position satisfies the ellipsoid identity") {
  const ScenarioConfig s = cfg();
  const ChannelParams eta = truth_eta();
  Rng rng = make_rng(17);
  std::uniform_real_distribution<double> u(0.0, 90e-9);
  int checked = 0;
  for (int i = 0; i < 50; ++i) {
    const double bias = u(rng);
    const auto cand = candidate_solution(eta, bias, s.bs_pose, s.c);
    if (!cand) continue;
    const double d_r = s.c * (eta.tau_ris - bias);
    const double lhs = (cand->second - s.bs_pose.position).norm() +
                       (cand->second - cand->first).norm();
    REQUIRE(lhs == Catch::Approx(d_r).margin(1e-9));
    ++checked;
  }
  REQUIRE(checked > 10);
}

TEST_CASE("cost vanishes at the truth and grows away from it") {
  const ScenarioConfig s = cfg();
  const ChannelParams eta = truth_eta();
  const double f0 = localization_cost(eta, s.truth.ris_yaw, s.truth.clock_bias, s.bs_pose,
                                      s.truth.fixed_o1_o2, s.c);
  REQUIRE(f0 < 1e-20);
  const double f1 = localization_cost(eta, s.truth.ris_yaw + 0.05, s.truth.clock_bias, s.bs_pose,
                                      s.truth.fixed_o1_o2, s.c);
  REQUIRE(f1 > 1e-6);
  REQUIRE(localization_cost(eta, 0.0, eta.tau_los + 1e-9, s.bs_pose, s.truth.fixed_o1_o2, s.c) ==
          inf);
}

TEST_CASE("cost surface is flat at a blind location relative to a benign one") {
  const ScenarioConfig s = cfg();
  // scan candidate UE positions for the weakest and strongest local cost
  // curvature (minimum Hessian eigenvalue), then compare
  double worst = inf, best = 0.0;
  for (double x = -4.5; x <= 4.5; x += 1.0)
    for (double y = -4.5; y <= 4.5; y += 1.0) {
      LocalizationState st = s.truth;
      st.p_ue = Vec3(x, y, 1.0);
      if ((st.p_ue - s.bs_pose.position).norm() < 1.0 ||
          (st.p_ue - st.p_ris).norm() < 1.0)
        continue;
      ChannelParams eta;
      try {
        eta = forward_map(st, s.bs_pose, s.c);
      } catch (const degenerate_geometry&) {
        continue;
      }
      const Eigen::Matrix2d h = cost_hessian(eta, st.ris_yaw, st.clock_bias, s.bs_pose, s.c);
      const double lam = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(h).eigenvalues()(0);
      worst = std::min(worst, lam);
      best = std::max(best, lam);
    }
  REQUIRE(best >= 10.0 * std::max(worst, 0.0));
}

TEST_CASE("noise-free grid search recovers the state within grid resolution") {
  const ScenarioConfig s = cfg();
  const ChannelParams eta = truth_eta();
  SearchConfig search = default_search(s);
  const GridSearchResult res =
      grid_search(eta, search, s.bs_pose, s.truth.fixed_o1_o2, s.c);

  const double bias_res_final = (search.bias_max - search.bias_min) / search.bias_count *
                                std::pow(search.shrink, search.rounds);
  const double yaw_res_final = (search.yaw_max - search.yaw_min) / search.yaw_count *
                               std::pow(search.shrink, search.rounds);

  // the recovered UE position moves with the clock bias at speed c
  REQUIRE((res.state.p_ue - s.truth.p_ue).norm() < 3.0 * s.c * bias_res_final);
  REQUIRE(std::abs(res.state.clock_bias - s.truth.clock_bias) < 3.0 * bias_res_final);
  REQUIRE(std::abs(wrap_angle(res.state.ris_yaw - s.truth.ris_yaw)) < 3.0 * yaw_res_final);

  // sensitivity-scaled bound for the reflector position, via finite
  // differences of the candidate map around the truth
  const auto c0 = candidate_solution(eta, s.truth.clock_bias, s.bs_pose, s.c);
  const auto c1 = candidate_solution(eta, s.truth.clock_bias + 1e-12, s.bs_pose, s.c);
  const double sens = (c1->second - c0->second).norm() / 1e-12;
  REQUIRE((res.state.p_ris - s.truth.p_ris).norm() < 3.0 * sens * bias_res_final);

  // the best cost never increases across refinement rounds
  for (std::size_t i = 1; i < res.round_costs.size(); ++i)
    REQUIRE(res.round_costs[i] <= res.round_costs[i - 1]);
  REQUIRE(res.round_winners.size() == static_cast<std::size_t>(search.rounds) + 1);
}

TEST_CASE("single-candidate grids containing the truth recover it exactly") {
  const ScenarioConfig s = cfg();
  const ChannelParams eta = truth_eta();
  SearchConfig search;
  search.yaw_min = s.truth.ris_yaw;
  search.yaw_max = s.truth.ris_yaw + 1.0;
  search.yaw_count = 1;
  search.bias_min = s.truth.clock_bias;
  search.bias_max = s.truth.clock_bias + 1e-9;
  search.bias_count = 1;
  search.rounds = 0;
  const GridSearchResult res = grid_search(eta, search, s.bs_pose, s.truth.fixed_o1_o2, s.c);
  REQUIRE((res.state.p_ue - s.truth.p_ue).norm() < 1e-9);
  REQUIRE((res.state.p_ris - s.truth.p_ris).norm() < 1e-9);
  REQUIRE(res.state.ris_yaw == s.truth.ris_yaw);
  REQUIRE(res.state.clock_bias == s.truth.clock_bias);
}

TEST_CASE("search failure when every candidate is invalid") {
  const ScenarioConfig s = cfg();
  ChannelParams eta = truth_eta();
  std::swap(eta.tau_los, eta.tau_ris);  // reflected arriving first is unphysical
  REQUIRE_THROWS_AS(grid_search(eta, default_search(s), s.bs_pose, s.truth.fixed_o1_o2, s.c),
                    search_failure);
}

TEST_CASE("forward map round trip over random benign geometries") {
  const ScenarioConfig s = cfg();
  Rng rng = make_rng(23);
  std::uniform_real_distribution<double> upos(-4.5, 4.5), uz(0.5, 2.5), uyaw(-2.5, 2.5),
      ubias(10e-9, 250e-9);
  SearchConfig search = default_search(s);
  int accepted = 0;
  for (int trial = 0; trial < 200 && accepted < 50; ++trial) {
    LocalizationState st;
    st.p_ue = Vec3(upos(rng), upos(rng), uz(rng));
    st.p_ris = Vec3(upos(rng), upos(rng), uz(rng) + 1.0);
    st.ris_yaw = uyaw(rng);
    st.clock_bias = ubias(rng);
    if ((st.p_ue - st.p_ris).norm() < 1.0 ||
        (st.p_ue - s.bs_pose.position).norm() < 1.0 ||
        (st.p_ris - s.bs_pose.position).norm() < 1.0)
      continue;
    ChannelParams eta;
    try {
      eta = forward_map(st, s.bs_pose, s.c);
    } catch (const degenerate_geometry&) {
      continue;
    }
    if (eta.tau_ris >= 0.9 / s.subcarrier_spacing()) continue;
    // benign-location filter: the cost surface must be meaningfully curved
    const Eigen::Matrix2d h = cost_hessian(eta, st.ris_yaw, st.clock_bias, s.bs_pose, s.c);
    const double lam = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(h).eigenvalues()(0);
    if (!(lam > 1e-3)) continue;

    GridSearchResult res;
    try {
      res = grid_search(eta, search, s.bs_pose, st.fixed_o1_o2, s.c);
    } catch (const search_failure&) {
      continue;
    }
    // a clearly non-vanishing final cost means the initial grid fell into a
    // secondary basin: the (yaw, bias) pair is ambiguous at this resolution,
    // which is the blind-like case excluded by the invariant (grid-limited
    // minima at the true basin stay below ~1e-8)
    if (res.cost > 1e-6) continue;
    const ChannelParams eta_back = forward_map(res.state, s.bs_pose, s.c);
    const auto dv = (eta_back.to_vector() - eta.to_vector()).eval();
    // grid-limited tolerance: generous envelope over the final resolution
    REQUIRE(dv.cwiseAbs().maxCoeff() < 1e-2);
    ++accepted;
  }
  REQUIRE(accepted >= 50);
}
