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

#include "jrcup/channel.hpp"
#include "jrcup/crlb.hpp"

using namespace jrcup;

namespace {

/// shrunken layout for tests that loop a lot
ScenarioConfig small_scenario() {
  ScenarioConfig s = default_scenario();
  s.bs_array = ArrayGeometry{4, 3, 0.5 * s.wavelength()};
  s.rfc_n1 = 2;
  s.rfc_n2 = 2;
  s.ris_array = ArrayGeometry{3, 3, 0.2 * s.wavelength()};
  s.num_subcarriers = 4;
  s.num_transmissions = 4;
  return s;
}

}  // namespace

TEST_CASE("array_response") {
  ArrayGeometry geom{2, 1, 0.01};
  // element 0 at the origin always has zero phase
  const VecC a0 = array_response(geom, {0.3, -0.2}, 28e9);
  REQUIRE(a0[0] == cplx(1.0, 0.0));

  // two-element array along y, wave from (pi/2, 0): phase step 2*pi*fc*d/c
  const double fc = 28e9;
  const VecC a = array_response(geom, {pi / 2, 0}, fc);
  REQUIRE(std::arg(a[1]) ==
          Catch::Approx(wrap_angle(2.0 * pi * fc * geom.spacing / default_propagation_speed))
              .margin(1e-12));

  // boresight: direction orthogonal to the YOZ plane, all phases zero
  ArrayGeometry upa{5, 4, 0.005};
  const VecC b = array_response(upa, {0, 0}, fc);
  REQUIRE((b - VecC::Ones(20)).norm() < 1e-12);
  for (Eigen::Index i = 0; i < b.size(); ++i)
    REQUIRE(std::abs(b[i]) == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("amplification_factor") {
  REQUIRE(amplification_factor(0.0, 225, 1e-10, 4e-12) == 1.0);

  const double p_in = 3.3e-10, noise = 4.1e-12;
  REQUIRE(amplification_factor(3.0 * 225 * (p_in + noise), 225, p_in, noise) ==
          Catch::Approx(2.0).epsilon(1e-12));

  // supply -> amplification -> supply round trip
  const ScenarioConfig s = default_scenario();
  const double d_ue_ris = (s.truth.p_ris - s.truth.p_ue).norm();
  const double alpha_sq = std::pow(los_gain_magnitude(d_ue_ris, s.wavelength()), 2);
  const double incident = s.p_tx * alpha_sq;
  for (double supply : {0.0, 1e-6, 1e-3, 5e-3, dbm_to_watt(7.0)}) {
    const double p = amplification_factor(supply, s.ris_array.size(), incident, s.sigmar_sq);
    REQUIRE(p >= 1.0);
    const double back = ris_power_supply(p, s.ris_array.size(), incident, s.sigmar_sq);
    if (supply == 0.0)
      REQUIRE(back == 0.0);
    else
      REQUIRE(back == Catch::Approx(supply).epsilon(1e-9));
  }

  REQUIRE_THROWS_AS(amplification_factor(-1.0, 10, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("los and scatter gains") {
  Rng rng = make_rng(3);
  const double lambda = 0.0107;
  REQUIRE(std::abs(los_gain(lambda / (4.0 * pi), lambda, rng)) == Catch::Approx(1.0).epsilon(1e-12));
  const double g1 = std::abs(los_gain(2.0, lambda, rng));
  const double g2 = std::abs(los_gain(4.0, lambda, rng));
  REQUIRE(g1 == Catch::Approx(2.0 * g2).epsilon(1e-12));

  const ScenarioConfig s = default_scenario();
  const double expect = (s.c / 28e9) / (4.0 * pi * std::sqrt(72.0));
  REQUIRE(std::abs(los_gain(std::sqrt(72.0), s.wavelength(), rng)) ==
          Catch::Approx(expect).epsilon(1e-12));

  REQUIRE(std::abs(nlos_gain(0.0, 5.0, 5.0, lambda, rng)) == 0.0);
  const double n1 = std::abs(nlos_gain(0.5, 5.0, 5.0, lambda, rng));
  const double n2 = std::abs(nlos_gain(0.5, 10.0, 5.0, lambda, rng));
  REQUIRE(n1 == Catch::Approx(2.0 * n2).epsilon(1e-12));
  REQUIRE(n1 ==
          Catch::Approx(std::sqrt(4.0 * pi * 0.5) * lambda / (16.0 * pi * pi * 25.0)).epsilon(1e-12));

  REQUIRE_THROWS_AS(los_gain(0.0, lambda, rng), degenerate_geometry);
  REQUIRE_THROWS_AS(nlos_gain(0.5, -1.0, 2.0, lambda, rng), degenerate_geometry);
}

TEST_CASE("build_channels two-path structure") {
  const ScenarioConfig s = small_scenario();
  Rng rng = make_rng(9);
  const LosGains gains = make_los_gains(s, s.truth, rng);

  // subcarrier 0 carries no delay phase on the direct channel
  const ChannelMatrices ch0 = build_channels(s, s.truth, gains, nullptr, 0);
  const VecC expected =
      gains.ue_bs * array_response(s.bs_array, aoa_in_lcs(s.bs_pose, s.truth.p_ue), s.fc, s.c);
  REQUIRE((ch0.ue_bs - expected).norm() < 1e-12 * expected.norm());

  // reflected segment is an outer product without multipath
  Eigen::JacobiSVD<MatC> svd(ch0.ris_bs);
  REQUIRE(svd.singularValues()(1) < 1e-12 * svd.singularValues()(0));

  // frequency-flat UE->RIS segment
  const ChannelMatrices ch3 = build_channels(s, s.truth, gains, nullptr, 3);
  REQUIRE((ch3.ue_ris - ch0.ue_ris).norm() == 0.0);
  REQUIRE((ch3.ue_bs - ch0.ue_bs).norm() > 1e-9);
}

TEST_CASE("build_channels matches an independently coded path sum") {
  const ScenarioConfig s = small_scenario();
  Rng rng = make_rng(10);
  const LosGains gains = make_los_gains(s, s.truth, rng);
  MultipathSet mp;
  mp.ue_bs.push_back({Vec3(1.0, -2.0, 2.0), 0.5, 1.1});
  mp.ue_ris.push_back({Vec3(-1.0, 3.0, 1.5), 0.5, -0.4});
  mp.ris_bs.push_back({Vec3(0.5, 1.0, 2.5), 0.5, 2.7});
  const int k = 2;
  const ChannelMatrices ch = build_channels(s, s.truth, gains, &mp, k);

  // direct channel, re-derived from scratch
  const double df = s.subcarrier_spacing();
  auto phase = [&](double tau) { return std::exp(-j1i * (2.0 * pi * k * df * tau)); };
  const Vec3 sp = mp.ue_bs[0].position;
  const double d1 = (sp - s.truth.p_ue).norm(), d2 = (s.bs_pose.position - sp).norm();
  const double tau_los = (s.bs_pose.position - s.truth.p_ue).norm() / s.c + s.truth.clock_bias;
  const double tau_sp = (d1 + d2) / s.c + s.truth.clock_bias;
  const cplx sp_gain =
      std::polar(std::sqrt(4.0 * pi * 0.5) * s.wavelength() / (16.0 * pi * pi * d1 * d2), 1.1);
  const VecC expect =
      gains.ue_bs * phase(tau_los) *
          array_response(s.bs_array, aoa_in_lcs(s.bs_pose, s.truth.p_ue), s.fc, s.c) +
      sp_gain * phase(tau_sp) * array_response(s.bs_array, aoa_in_lcs(s.bs_pose, sp), s.fc, s.c);
  REQUIRE((ch.ue_bs - expect).norm() < 1e-12 * expect.norm());

  // the scatterer breaks the rank-one structure of the reflected segment
  REQUIRE(Eigen::JacobiSVD<MatC>(ch.ris_bs).singularValues()(1) > 1e-12);
}

TEST_CASE("compact reflected channel equals the explicit matrix product") {
  const ScenarioConfig s = default_scenario();
  Rng rng = make_rng(12);
  for (int trial = 0; trial < 4; ++trial) {
    LocalizationState st = s.truth;
    std::uniform_real_distribution<double> u(-4, 4);
    st.p_ue = Vec3(u(rng), u(rng), 1.0 + 0.2 * trial);
    const LosGains gains = make_los_gains(s, st, rng);
    VecC gamma(s.ris_array.size());
    for (Eigen::Index i = 0; i < gamma.size(); ++i)
      gamma[i] = std::polar(3.0, uniform_phase(rng));
    const int k = trial;

    const ChannelMatrices ch = build_channels(s, st, gains, nullptr, k);
    const VecC explicit_product = ch.ris_bs * gamma.asDiagonal() * ch.ue_ris;

    const Pose ris = st.ris_pose();
    const auto [tau_l, tau_r] = path_delays(st, s.bs_pose.position, s.c);
    (void)tau_l;
    const VecC compact = compact_ris_channel(
        s, gains.ue_ris * gains.ris_bs, aoa_in_lcs(s.bs_pose, st.p_ris), tau_r,
        aoa_in_lcs(ris, st.p_ue), aoa_in_lcs(ris, s.bs_pose.position), gamma, k);
    REQUIRE((compact - explicit_product).norm() < 1e-10 * explicit_product.norm());

    // linear in the profile
    const VecC scaled = compact_ris_channel(
        s, gains.ue_ris * gains.ris_bs, aoa_in_lcs(s.bs_pose, st.p_ris), tau_r,
        aoa_in_lcs(ris, st.p_ue), aoa_in_lcs(ris, s.bs_pose.position), (2.0 * gamma).eval(), k);
    REQUIRE((scaled - 2.0 * compact).norm() < 1e-10 * compact.norm());
  }
}

TEST_CASE("mutual coupling reflection transform") {
  Rng rng = make_rng(14);
  VecC gamma(4);
  for (int i = 0; i < 4; ++i) gamma[i] = std::polar(5.0, uniform_phase(rng));

  // no coupling: exactly the diagonal reflection
  const MatC none = mutual_coupling_reflection(gamma, MatC::Zero(4, 4));
  REQUIRE((none - MatC(gamma.asDiagonal())).norm() == 0.0);

  // scalar case, solved by hand
  VecC g1(1);
  g1[0] = cplx(2.0, 0.0);
  MatC s1(1, 1);
  s1(0, 0) = cplx(0.1, 0.05);
  const MatC r1 = mutual_coupling_reflection(g1, s1);
  REQUIRE(std::abs(r1(0, 0) - 1.0 / (1.0 / g1[0] - s1(0, 0))) < 1e-14);

  // residual check: reflect * (gamma^-1 - S) = I
  MatC s = MatC::Zero(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k)
      if (i != k) s(i, k) = complex_gaussian(rng, 1.0);
  Eigen::JacobiSVD<MatC> ssvd(s);
  s *= 1.0 / (2.0 * 5.0 * ssvd.singularValues()(0));
  const MatC reflect = mutual_coupling_reflection(gamma, s);
  MatC a = -s;
  for (int i = 0; i < 4; ++i) a(i, i) += 1.0 / gamma[i];
  REQUIRE((reflect * a - MatC::Identity(4, 4)).norm() < 1e-10);

  REQUIRE_THROWS_AS(mutual_coupling_reflection(VecC::Zero(2), MatC::Zero(2, 2)),
                    numerical_degeneracy);
}

TEST_CASE("pilots and profiles") {
  const ScenarioConfig s = default_scenario();
  const double amp = 13.7;
  const ProbeDesign a = generate_pilots_and_profiles(s, amp, 99);
  const ProbeDesign b = generate_pilots_and_profiles(s, amp, 99);
  REQUIRE((a.w - b.w).norm() == 0.0);
  REQUIRE((a.pilots - b.pilots).norm() == 0.0);
  REQUIRE((a.profiles.upsilon - b.profiles.upsilon).norm() == 0.0);
  const ProbeDesign c = generate_pilots_and_profiles(s, amp, 100);
  REQUIRE((a.w - c.w).norm() > 1e-6);

  // exact Kronecker structure
  REQUIRE((a.w - kron(a.t1, a.t2)).norm() < 1e-12);
  REQUIRE((a.profiles.upsilon - amp * kron(a.profiles.t3, a.profiles.t4)).norm() < 1e-12);

  // every profile entry has modulus = amplification
  for (Eigen::Index i = 0; i < a.profiles.upsilon.rows(); ++i)
    for (Eigen::Index g = 0; g < a.profiles.upsilon.cols(); ++g)
      REQUIRE(std::abs(a.profiles.upsilon(i, g)) == Catch::Approx(amp).margin(1e-12 * amp));

  // pilot power constraint
  for (Eigen::Index g = 0; g < a.pilots.rows(); ++g)
    for (Eigen::Index k = 0; k < a.pilots.cols(); ++k)
      REQUIRE(std::abs(a.pilots(g, k)) == Catch::Approx(std::sqrt(s.p_tx)).margin(1e-15));

  // combiner columns are unit-norm
  for (Eigen::Index col = 0; col < a.w.cols(); ++col)
    REQUIRE(a.w.col(col).norm() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("noise-free synthesis matches the dense channel equation") {
  const ScenarioConfig s = small_scenario();
  Rng rng = make_rng(21);
  const LosGains gains = make_los_gains(s, s.truth, rng);
  const double amp = 2.5;
  const ProbeDesign design = generate_pilots_and_profiles(s, amp, 5);
  const SynthContext ctx = make_synth_context(s, s.truth, gains, design);
  const ObservationSet obs = synthesize_observations(ctx, 0.0, 77);

  REQUIRE((obs.y - obs.noise_free).norm() == 0.0);

  const int m = s.rfc_ports();
  for (int g = 0; g < s.num_transmissions; ++g)
    for (int k = 0; k < s.num_subcarriers; ++k) {
      const ChannelMatrices ch = build_channels(s, s.truth, gains, nullptr, k);
      const VecC gamma = design.profiles.upsilon.col(g);
      const VecC expect = design.w.adjoint() *
                          (ch.ue_bs + ch.ris_bs * gamma.asDiagonal() * ch.ue_ris) *
                          design.pilots(g, k);
      const VecC got = obs.noise_free.col(g).segment(k * m, m);
      REQUIRE((got - expect).norm() < 1e-11 * expect.norm());
    }
}

TEST_CASE("zero scattering leaves the synthesis byte-identical") {
  const ScenarioConfig s = small_scenario();
  Rng rng = make_rng(22);
  const LosGains gains = make_los_gains(s, s.truth, rng);
  const ProbeDesign design = generate_pilots_and_profiles(s, 2.0, 6);
  const MatC zero = MatC::Zero(s.ris_array.size(), s.ris_array.size());
  const SynthContext plain = make_synth_context(s, s.truth, gains, design);
  const SynthContext with_zero = make_synth_context(s, s.truth, gains, design, nullptr, &zero);
  const ObservationSet a = synthesize_observations(plain, 1.0, 123);
  const ObservationSet b = synthesize_observations(with_zero, 1.0, 123);
  REQUIRE((a.y - b.y).norm() == 0.0);
}

TEST_CASE("combined noise matches the analytic covariance") {
  const ScenarioConfig s = small_scenario();
  Rng rng = make_rng(25);
  const LosGains gains = make_los_gains(s, s.truth, rng);
  const ProbeDesign design = generate_pilots_and_profiles(s, 3.0, 7);
  const SynthContext ctx = make_synth_context(s, s.truth, gains, design);

  const int g = 1, k = 2, m = s.rfc_ports();
  const ChannelMatrices ch = build_channels(s, s.truth, gains, nullptr, k);
  const MatC gamma = MatC(design.profiles.upsilon.col(g).asDiagonal());
  const Mat cov = noise_covariance(design.w, ch.ris_bs, gamma, s.sigma0_sq, s.sigmar_sq).total();

  const int draws = 100000;
  Mat acc = Mat::Zero(2 * m, 2 * m);
  Rng noise_rng = make_rng(4242);
  for (int i = 0; i < draws; ++i) {
    const VecC n = draw_combined_noise(ctx, g, k, 1.0, noise_rng);
    Vec v(2 * m);
    v << n.real(), n.imag();
    acc.noalias() += v * v.transpose();
  }
  acc /= double(draws);

  for (int r = 0; r < 2 * m; ++r)
    for (int c = 0; c < 2 * m; ++c) {
      const double se =
          std::sqrt((cov(r, r) * cov(c, c) + cov(r, c) * cov(r, c)) / double(draws));
      REQUIRE(std::abs(acc(r, c) - cov(r, c)) < 5.0 * se + 1e-18);
    }
}

TEST_CASE("received snr behavior") {
  const ScenarioConfig s = small_scenario();
  Rng rng = make_rng(30);
  const LosGains gains = make_los_gains(s, s.truth, rng);
  const ProbeDesign design = generate_pilots_and_profiles(s, 2.0, 8);
  const SynthContext ctx = make_synth_context(s, s.truth, gains, design);
  const ObservationSet obs = synthesize_observations(ctx, 0.0, 0);

  const double snr = received_snr_db(ctx, obs.noise_free, 1.0);
  REQUIRE(std::isfinite(snr));

  // scaling the means by sqrt(10) adds 10 dB
  REQUIRE(received_snr_db(ctx, (std::sqrt(10.0) * obs.noise_free).eval(), 1.0) ==
          Catch::Approx(snr + 10.0).margin(1e-9));

  // doubling both noise variances costs 3.0103 dB
  REQUIRE(received_snr_db(ctx, obs.noise_free, 2.0) ==
          Catch::Approx(snr - 10.0 * std::log10(2.0)).margin(1e-9));

  REQUIRE(received_snr_db(ctx, MatC::Zero(obs.noise_free.rows(), obs.noise_free.cols()), 1.0) ==
          -inf);
  REQUIRE(received_snr_db(ctx, obs.noise_free, 0.0) == inf);

  // Monte-Carlo oracle: the analytic SNR of the default layout agrees with
  // the sample SNR of synthesized blocks, consistently across noise seeds
  const ScenarioConfig full = default_scenario();
  Rng grng = make_rng(full.seed, {0x6a15});
  const LosGains g2 = make_los_gains(full, full.truth, grng);
  const double p_in = full.p_tx * std::norm(g2.ue_ris);
  const double amp =
      amplification_factor(full.p_ris, full.ris_array.size(), p_in, full.sigmar_sq);
  const ProbeDesign d2 = generate_pilots_and_profiles(full, amp, full.seed);
  const SynthContext c2 = make_synth_context(full, full.truth, g2, d2);
  const ObservationSet clean = synthesize_observations(c2, 0.0, 0);
  const double analytic = received_snr_db(c2, clean.noise_free, 1.0);
  REQUIRE(std::isfinite(analytic));
  for (std::uint64_t noise_seed : {11ull, 12ull, 13ull}) {
    const ObservationSet noisy = synthesize_observations(c2, 1.0, noise_seed);
    const double empirical =
        linear_to_db(clean.noise_free.squaredNorm() / (noisy.y - noisy.noise_free).squaredNorm());
    REQUIRE(std::abs(empirical - analytic) < 1.0);
  }
}
