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
// Scenario description and its on-disk JSON form. Keys mirror the usual
// simulation-parameter tables; powers are accepted in dBm or watts and the
// noise level as PSD [dBm/Hz] + noise figure [dB] over the signal bandwidth.

#ifndef JRCUP_SCENARIO_HPP
#define JRCUP_SCENARIO_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jrcup/arrays.hpp"
#include "jrcup/geometry.hpp"

namespace jrcup {

struct ScenarioConfig {
  double c = default_propagation_speed;  // [m/s]
  double fc = 28e9;                      // carrier [Hz]
  double bandwidth = 100e6;              // [Hz]
  int num_subcarriers = 32;              // K
  int num_transmissions = 9;             // G, perfect square
  double p_tx = 0.0;                     // transmit power [W]
  double p_ris = 0.0;                    // active-RIS power supply [W]; 0 = passive
  double sigma0_sq = 0.0;                // receiver noise variance over the band [W]
  double sigmar_sq = 0.0;                // per-element RIS noise variance [W]
  Pose bs_pose;
  ArrayGeometry bs_array;
  int rfc_n1 = 5;                        // RF-chain output ports, first axis (>1)
  int rfc_n2 = 5;                        // second axis (>1)
  ArrayGeometry ris_array;
  LocalizationState truth;               // ground-truth UE/RIS states + clock bias
  std::uint64_t seed = 1;

  double subcarrier_spacing() const { return bandwidth / num_subcarriers; }
  double wavelength() const { return c / fc; }
  int rfc_ports() const { return rfc_n1 * rfc_n2; }
  int sqrt_g() const { return static_cast<int>(std::lround(std::sqrt(double(num_transmissions)))); }
};

/// Default indoor scenario: 28 GHz carrier, 100 MHz band, 32 subcarriers,
/// 9 transmissions, 10x10 BS / 5x5 RFC / 15x15 RIS, 100 ns clock bias.
inline ScenarioConfig default_scenario() {
  ScenarioConfig s;
  s.p_tx = dbm_to_watt(10.0);
  s.p_ris = dbm_to_watt(7.0);
  const double psd_dbm_hz = -174.0, noise_figure_db = 10.0;
  s.sigma0_sq = dbm_to_watt(psd_dbm_hz + noise_figure_db) * s.bandwidth;
  s.sigmar_sq = s.sigma0_sq;
  s.bs_pose = Pose{Vec3(0, 5, 3), Vec3(0, 0, -pi / 2)};
  s.bs_array = ArrayGeometry{10, 10, 0.5 * s.wavelength()};
  s.ris_array = ArrayGeometry{15, 15, 0.2 * s.wavelength()};
  s.truth.p_ue = Vec3(3, 2, 1);
  s.truth.p_ris = Vec3(-5, 0, 3);
  s.truth.ris_yaw = 0.0;
  s.truth.clock_bias = 100e-9;
  return s;
}

/// Structural checks; throws config_error on violations, returns
/// human-readable warnings (e.g. RIS spacing wide enough to alias).
inline std::vector<std::string> validate_scenario(const ScenarioConfig& s) {
  std::vector<std::string> warnings;
  if (s.c <= 0 || s.fc <= 0 || s.bandwidth <= 0) throw config_error("speeds/frequencies must be positive");
  if (s.num_subcarriers < 3) throw config_error("need at least 3 subcarriers");
  const int rg = s.sqrt_g();
  if (rg * rg != s.num_transmissions || rg < 2)
    throw config_error("transmission count must be a perfect square >= 4");
  if (s.rfc_n1 <= 1 || s.rfc_n2 <= 1) throw config_error("both RFC axes must exceed 1");
  if (s.bs_array.n1 <= s.rfc_n1 || s.bs_array.n2 <= s.rfc_n2)
    throw config_error("BS array must be strictly larger than the RFC grid on both axes");
  if (s.ris_array.n1 <= rg || s.ris_array.n2 <= rg)
    throw config_error("RIS array must be strictly larger than sqrt(G) on both axes");
  if (s.p_tx <= 0) throw config_error("transmit power must be positive");
  if (s.p_ris < 0 || s.sigma0_sq < 0 || s.sigmar_sq < 0)
    throw config_error("powers and noise variances must be nonnegative");

  // delays must stay below the ambiguity limit 1/subcarrier_spacing
  const auto [tau_l, tau_r] = path_delays(s.truth, s.bs_pose.position, s.c);
  const double tau_max = 1.0 / s.subcarrier_spacing();
  if (tau_l < 0 || tau_r >= tau_max)
    throw config_error("path delays exceed the unambiguous range 1/subcarrier_spacing");
  if (tau_r <= tau_l) throw config_error("reflected path must be longer than the direct path");

  if (s.ris_array.spacing > 0.25 * s.wavelength() + 1e-15)
    warnings.push_back("RIS element spacing above lambda/4: direction-cosine sums can alias");
  return warnings;
}

namespace detail {

inline Vec3 vec3_from_json(const nlohmann::json& a, const char* key) {
  if (!a.is_array() || a.size() != 3) throw config_error(std::string("expected 3-vector for ") + key);
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

inline double power_from_json(const nlohmann::json& j, const std::string& name, double fallback) {
  const std::string kd = name + "_dbm", kw = name + "_w";
  if (j.contains(kd) && j.contains(kw)) throw config_error("give " + name + " in dBm or W, not both");
  if (j.contains(kd)) return dbm_to_watt(j[kd].get<double>());
  if (j.contains(kw)) return j[kw].get<double>();
  return fallback;
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const ScenarioConfig& s) {
  nlohmann::json j;
  j["propagation_speed_m_s"] = s.c;
  j["carrier_frequency_hz"] = s.fc;
  j["bandwidth_hz"] = s.bandwidth;
  j["num_subcarriers"] = s.num_subcarriers;
  j["num_transmissions"] = s.num_transmissions;
  j["transmit_power_w"] = s.p_tx;
  j["ris_power_w"] = s.p_ris;
  j["receiver_noise_variance_w"] = s.sigma0_sq;
  j["ris_noise_variance_w"] = s.sigmar_sq;
  j["bs"] = {{"rows", s.bs_array.n1},
             {"cols", s.bs_array.n2},
             {"spacing_m", s.bs_array.spacing},
             {"position_m", {s.bs_pose.position[0], s.bs_pose.position[1], s.bs_pose.position[2]}},
             {"euler_rad", {s.bs_pose.euler[0], s.bs_pose.euler[1], s.bs_pose.euler[2]}}};
  j["rfc"] = {{"rows", s.rfc_n1}, {"cols", s.rfc_n2}};
  j["ris"] = {{"rows", s.ris_array.n1},
              {"cols", s.ris_array.n2},
              {"spacing_m", s.ris_array.spacing},
              {"position_m", {s.truth.p_ris[0], s.truth.p_ris[1], s.truth.p_ris[2]}},
              {"yaw_rad", s.truth.ris_yaw},
              {"fixed_euler_rad", {s.truth.fixed_o1_o2[0], s.truth.fixed_o1_o2[1]}}};
  j["ue"] = {{"position_m", {s.truth.p_ue[0], s.truth.p_ue[1], s.truth.p_ue[2]}}};
  j["clock_bias_s"] = s.truth.clock_bias;
  j["seed"] = s.seed;
  return j;
}

/// Builds a scenario from JSON, starting from default_scenario() so partial
/// files only override what they mention.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig s = default_scenario();
  if (j.contains("propagation_speed_m_s")) s.c = j["propagation_speed_m_s"].get<double>();
  if (j.contains("carrier_frequency_hz")) s.fc = j["carrier_frequency_hz"].get<double>();
  if (j.contains("bandwidth_hz")) s.bandwidth = j["bandwidth_hz"].get<double>();
  if (j.contains("num_subcarriers")) s.num_subcarriers = j["num_subcarriers"].get<int>();
  if (j.contains("num_transmissions")) s.num_transmissions = j["num_transmissions"].get<int>();
  s.p_tx = detail::power_from_json(j, "transmit_power", s.p_tx);
  s.p_ris = detail::power_from_json(j, "ris_power", s.p_ris);

  if (j.contains("noise_psd_dbm_hz") || j.contains("noise_figure_db")) {
    const double psd = j.value("noise_psd_dbm_hz", -174.0);
    const double nf = j.value("noise_figure_db", 10.0);
    s.sigma0_sq = dbm_to_watt(psd + nf) * s.bandwidth;
    s.sigmar_sq = s.sigma0_sq;
  }
  if (j.contains("receiver_noise_variance_w")) s.sigma0_sq = j["receiver_noise_variance_w"].get<double>();
  if (j.contains("ris_noise_variance_w")) s.sigmar_sq = j["ris_noise_variance_w"].get<double>();

  const double lambda = s.wavelength();
  if (j.contains("bs")) {
    const auto& b = j["bs"];
    if (b.contains("rows")) s.bs_array.n1 = b["rows"].get<int>();
    if (b.contains("cols")) s.bs_array.n2 = b["cols"].get<int>();
    if (b.contains("spacing_m") && b.contains("spacing_wavelengths"))
      throw config_error("give BS spacing in meters or wavelengths, not both");
    if (b.contains("spacing_m")) s.bs_array.spacing = b["spacing_m"].get<double>();
    else if (b.contains("spacing_wavelengths")) s.bs_array.spacing = b["spacing_wavelengths"].get<double>() * lambda;
    else s.bs_array.spacing = 0.5 * lambda;
    if (b.contains("position_m")) s.bs_pose.position = detail::vec3_from_json(b["position_m"], "bs.position_m");
    if (b.contains("euler_rad")) s.bs_pose.euler = detail::vec3_from_json(b["euler_rad"], "bs.euler_rad");
  } else {
    s.bs_array.spacing = 0.5 * lambda;
  }
  if (j.contains("rfc")) {
    s.rfc_n1 = j["rfc"].value("rows", s.rfc_n1);
    s.rfc_n2 = j["rfc"].value("cols", s.rfc_n2);
  }
  if (j.contains("ris")) {
    const auto& r = j["ris"];
    if (r.contains("rows")) s.ris_array.n1 = r["rows"].get<int>();
    if (r.contains("cols")) s.ris_array.n2 = r["cols"].get<int>();
    if (r.contains("spacing_m") && r.contains("spacing_wavelengths"))
      throw config_error("give RIS spacing in meters or wavelengths, not both");
    if (r.contains("spacing_m")) s.ris_array.spacing = r["spacing_m"].get<double>();
    else if (r.contains("spacing_wavelengths")) s.ris_array.spacing = r["spacing_wavelengths"].get<double>() * lambda;
    else s.ris_array.spacing = 0.2 * lambda;
    if (r.contains("position_m")) s.truth.p_ris = detail::vec3_from_json(r["position_m"], "ris.position_m");
    if (r.contains("yaw_rad")) s.truth.ris_yaw = r["yaw_rad"].get<double>();
    if (r.contains("fixed_euler_rad")) {
      const auto& f = r["fixed_euler_rad"];
      if (!f.is_array() || f.size() != 2) throw config_error("ris.fixed_euler_rad must be a 2-vector");
      s.truth.fixed_o1_o2 << f[0].get<double>(), f[1].get<double>();
    }
  } else {
    s.ris_array.spacing = 0.2 * lambda;
  }
  if (j.contains("ue")) s.truth.p_ue = detail::vec3_from_json(j["ue"]["position_m"], "ue.position_m");
  if (j.contains("clock_bias_s")) s.truth.clock_bias = j["clock_bias_s"].get<double>();
  if (j.contains("clock_bias_ns")) s.truth.clock_bias = j["clock_bias_ns"].get<double>() * 1e-9;
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  return s;
}

/// Reads a scenario file (JSON, // and /* */ comments allowed).
inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw config_error("malformed scenario file " + path + ": " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw config_error("bad scenario value in " + path + ": " + e.what());
  }
}

}  // namespace jrcup

#endif  // JRCUP_SCENARIO_HPP
