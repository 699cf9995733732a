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

#include "jrcup/scenario.hpp"

using namespace jrcup;

TEST_CASE("default scenario matches the documented layout") {
  const ScenarioConfig s = default_scenario();
  REQUIRE(s.fc == 28e9);
  REQUIRE(s.bandwidth == 100e6);
  REQUIRE(s.num_subcarriers == 32);
  REQUIRE(s.num_transmissions == 9);
  REQUIRE(s.sqrt_g() == 3);
  REQUIRE(s.p_tx == Catch::Approx(0.01).epsilon(1e-12));                     // 10 dBm
  REQUIRE(s.p_ris == Catch::Approx(dbm_to_watt(7.0)).epsilon(1e-12));        // 7 dBm
  // -174 dBm/Hz + 10 dB over 100 MHz = -84 dBm
  REQUIRE(watt_to_dbm(s.sigma0_sq) == Catch::Approx(-84.0).margin(1e-9));
  REQUIRE(s.sigmar_sq == s.sigma0_sq);
  REQUIRE(s.bs_array.spacing == Catch::Approx(0.5 * s.wavelength()));
  REQUIRE(s.ris_array.spacing == Catch::Approx(0.2 * s.wavelength()));
  REQUIRE(s.subcarrier_spacing() == Catch::Approx(3.125e6));
  REQUIRE(validate_scenario(s).empty());
}

TEST_CASE("json round trip") {
  ScenarioConfig s = default_scenario();
  s.truth.p_ue = Vec3(1.5, -2.0, 1.2);
  s.seed = 42;
  const ScenarioConfig t = scenario_from_json(scenario_to_json(s));
  REQUIRE(t.truth.p_ue == s.truth.p_ue);
  REQUIRE(t.seed == 42);
  REQUIRE(t.sigma0_sq == s.sigma0_sq);
  REQUIRE(t.bs_pose.euler == s.bs_pose.euler);
}

TEST_CASE("unit handling in scenario json") {
  nlohmann::json j;
  j["transmit_power_dbm"] = 10.0;
  j["ris_power_w"] = 0.0;
  j["noise_psd_dbm_hz"] = -174.0;
  j["noise_figure_db"] = 10.0;
  const ScenarioConfig s = scenario_from_json(j);
  REQUIRE(s.p_tx == Catch::Approx(0.01).epsilon(1e-12));
  REQUIRE(s.p_ris == 0.0);
  REQUIRE(s.sigma0_sq == Catch::Approx(dbm_to_watt(-84.0)).epsilon(1e-9));

  nlohmann::json both;
  both["transmit_power_dbm"] = 10.0;
  both["transmit_power_w"] = 0.01;
  REQUIRE_THROWS_AS(scenario_from_json(both), config_error);
}

TEST_CASE("validation rejects broken configurations") {
  ScenarioConfig s = default_scenario();
  s.num_transmissions = 8;  // not a perfect square
  REQUIRE_THROWS_AS(validate_scenario(s), config_error);

  s = default_scenario();
  s.rfc_n1 = 1;
  REQUIRE_THROWS_AS(validate_scenario(s), config_error);

  s = default_scenario();
  s.truth.clock_bias = 400e-9;  // pushes tau past 1/subcarrier spacing (320 ns)
  REQUIRE_THROWS_AS(validate_scenario(s), config_error);

  s = default_scenario();
  s.ris_array.spacing = 0.5 * s.wavelength();
  const auto warnings = validate_scenario(s);
  REQUIRE(warnings.size() == 1);
  REQUIRE(warnings[0].find("alias") != std::string::npos);
}
