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
// Uplink SIMO OFDM observation synthesis: path gains, direct and
// RIS-reflected channels with optional scatter-point multipath, active-RIS
// amplification and per-element noise, optional mutual coupling, structured
// combiner/profile generation, and the received-SNR measure.

#ifndef JRCUP_CHANNEL_HPP
#define JRCUP_CHANNEL_HPP

#include <optional>
#include <vector>

#include "jrcup/arrays.hpp"
#include "jrcup/rng.hpp"
#include "jrcup/scenario.hpp"

namespace jrcup {

// ---------------------------------------------------------------------------
// path gains
// ---------------------------------------------------------------------------

inline double los_gain_magnitude(double distance, double lambda) {
  if (distance <= 0) throw degenerate_geometry("los_gain: distance must be positive");
  return lambda / (4.0 * pi * distance);
}

/// Free-space gain lambda/(4*pi*d) with a uniformly random phase.
inline cplx los_gain(double distance, double lambda, Rng& rng) {
  const double mag = los_gain_magnitude(distance, lambda);
  return std::polar(mag, uniform_phase(rng));
}

inline double nlos_gain_magnitude(double rcs, double d1, double d2, double lambda) {
  if (d1 <= 0 || d2 <= 0) throw degenerate_geometry("nlos_gain: distances must be positive");
  if (rcs < 0) throw std::invalid_argument("nlos_gain: RCS must be nonnegative");
  return std::sqrt(4.0 * pi * rcs) * lambda / (16.0 * pi * pi * d1 * d2);
}

/// Scatter-point gain sqrt(4*pi*rcs)*lambda/(16*pi^2*d1*d2), random phase.
inline cplx nlos_gain(double rcs, double d1, double d2, double lambda, Rng& rng) {
  const double mag = nlos_gain_magnitude(rcs, d1, d2, lambda);
  return std::polar(mag, uniform_phase(rng));
}

/// Amplification available from a power supply p_ris over n elements with
/// per-element incident power p_in and element noise sigmar_sq:
/// p = sqrt(p_ris / (n*(p_in + sigmar_sq)) + 1) >= 1.
inline double amplification_factor(double p_ris, int n_elements, double p_in, double sigmar_sq) {
  if (p_ris < 0 || p_in < 0 || sigmar_sq < 0 || n_elements <= 0)
    throw std::invalid_argument("amplification_factor: negative input");
  if (p_ris == 0) return 1.0;
  const double denom = n_elements * (p_in + sigmar_sq);
  if (denom <= 0) throw std::invalid_argument("amplification_factor: zero incident+noise power");
  return std::sqrt(p_ris / denom + 1.0);
}

/// Power supply required for amplification p (inverse of amplification_factor).
inline double ris_power_supply(double p, int n_elements, double p_in, double sigmar_sq) {
  return (p * p - 1.0) * n_elements * (p_in + sigmar_sq);
}

/// Line-of-sight complex gains of the three segments.
struct LosGains {
  cplx ue_bs{0, 0};   // direct link
  cplx ue_ris{0, 0};  // incident RIS segment
  cplx ris_bs{0, 0};  // reflected RIS segment
};

inline LosGains make_los_gains(const ScenarioConfig& cfg, const LocalizationState& state, Rng& rng) {
  const double lambda = cfg.wavelength();
  LosGains g;
  g.ue_bs = los_gain((cfg.bs_pose.position - state.p_ue).norm(), lambda, rng);
  g.ue_ris = los_gain((state.p_ris - state.p_ue).norm(), lambda, rng);
  g.ris_bs = los_gain((cfg.bs_pose.position - state.p_ris).norm(), lambda, rng);
  return g;
}

// ---------------------------------------------------------------------------
// multipath
// ---------------------------------------------------------------------------

struct ScatterPoint {
  Vec3 position = Vec3::Zero();
  double rcs = 0.0;  // [m^2]
  double phase = 0.0;
};

/// Scatter points per channel segment; empty lists give the two-path model.
struct MultipathSet {
  std::vector<ScatterPoint> ue_bs;
  std::vector<ScatterPoint> ue_ris;
  std::vector<ScatterPoint> ris_bs;
};

inline MultipathSet sample_multipath(int per_channel, const Vec3& box_lo, const Vec3& box_hi,
                                     double rcs, Rng& rng) {
  std::uniform_real_distribution<double> ux(box_lo[0], box_hi[0]);
  std::uniform_real_distribution<double> uy(box_lo[1], box_hi[1]);
  std::uniform_real_distribution<double> uz(box_lo[2], box_hi[2]);
  MultipathSet mp;
  for (auto* list : {&mp.ue_bs, &mp.ue_ris, &mp.ris_bs})
    for (int i = 0; i < per_channel; ++i)
      list->push_back({Vec3(ux(rng), uy(rng), uz(rng)), rcs, uniform_phase(rng)});
  return mp;
}

// ---------------------------------------------------------------------------
// dense channel matrices (reference implementation, used by tests and to
// assemble the factored synthesis context)
// ---------------------------------------------------------------------------

/// Channels of subcarrier k (0-based): direct UE->BS vector, UE->RIS vector,
/// RIS->BS matrix.
struct ChannelMatrices {
  VecC ue_bs;        // length NB
  VecC ue_ris;       // length NR
  MatC ris_bs;       // NB x NR
};

namespace detail {

struct PathTriplet {
  cplx gain;
  double tau = 0.0;
  AnglePair bs_angle;   // used by ue_bs / ris_bs entries
  AnglePair ris_angle;  // used by ue_ris / ris_bs entries
};

/// Expands LOS + scatter points into per-path gains/delays/angles.
struct PathList {
  std::vector<PathTriplet> ue_bs;   // tau used, bs_angle used
  std::vector<PathTriplet> ue_ris;  // no tau, ris_angle used
  std::vector<PathTriplet> ris_bs;  // tau used, bs_angle + ris_angle used
};

inline PathList expand_paths(const ScenarioConfig& cfg, const LocalizationState& state,
                             const LosGains& gains, const MultipathSet* mp) {
  const double lambda = cfg.wavelength();
  const Pose ris = state.ris_pose();
  const Vec3 p_b = cfg.bs_pose.position;
  PathList out;

  PathTriplet los_l;
  los_l.gain = gains.ue_bs;
  los_l.tau = (p_b - state.p_ue).norm() / cfg.c + state.clock_bias;
  los_l.bs_angle = aoa_in_lcs(cfg.bs_pose, state.p_ue);
  out.ue_bs.push_back(los_l);

  PathTriplet los_r1;
  los_r1.gain = gains.ue_ris;
  los_r1.ris_angle = aoa_in_lcs(ris, state.p_ue);
  out.ue_ris.push_back(los_r1);

  PathTriplet los_r2;
  los_r2.gain = gains.ris_bs;
  los_r2.tau = ((state.p_ris - state.p_ue).norm() + (p_b - state.p_ris).norm()) / cfg.c +
               state.clock_bias;
  los_r2.bs_angle = aoa_in_lcs(cfg.bs_pose, state.p_ris);
  los_r2.ris_angle = aoa_in_lcs(ris, p_b);
  out.ris_bs.push_back(los_r2);

  if (!mp) return out;
  for (const auto& sp : mp->ue_bs) {
    PathTriplet p;
    const double d1 = (sp.position - state.p_ue).norm();
    const double d2 = (p_b - sp.position).norm();
    p.gain = std::polar(nlos_gain_magnitude(sp.rcs, d1, d2, lambda), sp.phase);
    p.tau = (d1 + d2) / cfg.c + state.clock_bias;
    p.bs_angle = aoa_in_lcs(cfg.bs_pose, sp.position);
    out.ue_bs.push_back(p);
  }
  for (const auto& sp : mp->ue_ris) {
    PathTriplet p;
    const double d1 = (sp.position - state.p_ue).norm();
    const double d2 = (state.p_ris - sp.position).norm();
    p.gain = std::polar(nlos_gain_magnitude(sp.rcs, d1, d2, lambda), sp.phase);
    p.ris_angle = aoa_in_lcs(ris, sp.position);
    out.ue_ris.push_back(p);
  }
  for (const auto& sp : mp->ris_bs) {
    PathTriplet p;
    const double d1 = (sp.position - state.p_ris).norm();
    const double d2 = (p_b - sp.position).norm();
    p.gain = std::polar(nlos_gain_magnitude(sp.rcs, d1, d2, lambda), sp.phase);
    // reflected-segment delays carry the full UE-RIS-...-BS travel time
    p.tau = ((state.p_ris - state.p_ue).norm() + d1 + d2) / cfg.c + state.clock_bias;
    p.bs_angle = aoa_in_lcs(cfg.bs_pose, sp.position);
    p.ris_angle = aoa_in_lcs(ris, sp.position);
    out.ris_bs.push_back(p);
  }
  return out;
}

inline cplx delay_phase(double delta_f, int k, double tau) {
  return std::exp(-j1i * (2.0 * pi * k * delta_f * tau));
}

}  // namespace detail

/// Dense channels at subcarrier k (0-based). The subcarrier-dependent delay
/// phase applies to the direct and RIS->BS segments only; the UE->RIS segment
/// is frequency-flat by construction.
inline ChannelMatrices build_channels(const ScenarioConfig& cfg, const LocalizationState& state,
                                      const LosGains& gains, const MultipathSet* mp, int k) {
  const double df = cfg.subcarrier_spacing();
  const auto paths = detail::expand_paths(cfg, state, gains, mp);
  ChannelMatrices ch;
  ch.ue_bs = VecC::Zero(cfg.bs_array.size());
  ch.ue_ris = VecC::Zero(cfg.ris_array.size());
  ch.ris_bs = MatC::Zero(cfg.bs_array.size(), cfg.ris_array.size());
  for (const auto& p : paths.ue_bs)
    ch.ue_bs += p.gain * detail::delay_phase(df, k, p.tau) *
                array_response(cfg.bs_array, p.bs_angle, cfg.fc, cfg.c);
  for (const auto& p : paths.ue_ris)
    ch.ue_ris += p.gain * array_response(cfg.ris_array, p.ris_angle, cfg.fc, cfg.c);
  for (const auto& p : paths.ris_bs)
    ch.ris_bs += p.gain * detail::delay_phase(df, k, p.tau) *
                 (array_response(cfg.bs_array, p.bs_angle, cfg.fc, cfg.c) *
                  array_response(cfg.ris_array, p.ris_angle, cfg.fc, cfg.c).transpose());
  return ch;
}

/// Factored form of the LOS reflected channel:
/// alpha_ris * [(aR(phi_a) had aR(phi_d))^T gamma] * phase_k * aB(theta_ris).
/// Equals ris_bs_k * diag(gamma) * ue_ris_k for LOS-only channels.
inline VecC compact_ris_channel(const ScenarioConfig& cfg, cplx alpha_ris,
                                const AnglePair& theta_ris, double tau_ris,
                                const AnglePair& phi_arrival, const AnglePair& phi_departure,
                                const VecC& gamma, int k) {
  const VecC combined = array_response(cfg.ris_array, phi_arrival, cfg.fc, cfg.c)
                            .cwiseProduct(array_response(cfg.ris_array, phi_departure, cfg.fc, cfg.c));
  const cplx scalar = combined.transpose() * gamma;
  return alpha_ris * scalar * detail::delay_phase(cfg.subcarrier_spacing(), k, tau_ris) *
         array_response(cfg.bs_array, theta_ris, cfg.fc, cfg.c);
}

// ---------------------------------------------------------------------------
// mutual coupling
// ---------------------------------------------------------------------------

/// Effective reflection under a scattering matrix S:
/// (diag(gamma)^{-1} - S)^{-1}. S = 0 returns diag(gamma) exactly.
inline MatC mutual_coupling_reflection(const VecC& gamma, const MatC& scattering) {
  const auto n = gamma.size();
  if (scattering.rows() != n || scattering.cols() != n)
    throw std::invalid_argument("mutual_coupling_reflection: dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(gamma[i]) == 0.0)
      throw numerical_degeneracy("mutual_coupling_reflection: zero reflection coefficient");
  if (scattering.isZero(0.0)) return MatC(gamma.asDiagonal());
  MatC a = -scattering;
  for (Eigen::Index i = 0; i < n; ++i) a(i, i) += 1.0 / gamma[i];
  Eigen::FullPivLU<MatC> lu(a);
  if (!lu.isInvertible())
    throw numerical_degeneracy("mutual_coupling_reflection: singular (gamma^-1 - S)");
  return lu.inverse();
}

/// Toy scattering model for sweeps: pairwise magnitude scale*exp(-d/decay)
/// with a propagation phase -2*pi*d/lambda, zero diagonal, symmetric.
inline MatC toy_scattering_matrix(const ArrayGeometry& geom, double lambda, double scale,
                                  double decay_wavelengths = 0.3) {
  const auto pos = geom.element_positions();
  const auto n = static_cast<Eigen::Index>(pos.size());
  MatC s = MatC::Zero(n, n);
  if (scale == 0.0) return s;
  const double decay = decay_wavelengths * lambda;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = i + 1; k < n; ++k) {
      const double d = (pos[static_cast<std::size_t>(i)] - pos[static_cast<std::size_t>(k)]).norm();
      const cplx v = std::polar(scale * std::exp(-d / decay), -2.0 * pi * d / lambda);
      s(i, k) = v;
      s(k, i) = v;
    }
  return s;
}

// ---------------------------------------------------------------------------
// pilots, combiner and RIS profiles
// ---------------------------------------------------------------------------

/// RIS probing profiles: upsilon = amplification * kron(t3, t4) with
/// unit-modulus factor entries, so every profile entry has modulus p.
struct RisProfileSet {
  MatC upsilon;   // NR x G, column g = reflection coefficients of burst g
  double amplification = 1.0;
  MatC t3, t4;    // steering-structured Kronecker factors
};

struct ProbeDesign {
  MatC pilots;  // G x K, |entry| = sqrt(p_tx)
  MatC w;       // NB x M combiner, w = kron(t1, t2)
  MatC t1, t2;
  RisProfileSet profiles;
};

namespace detail {

/// Steering-vector bank: columns a(psi_j)/scale at random spatial frequencies,
/// one per stratum of [lo, hi] so the beams spread over the whole range. The
/// one-row shift of every column is a fixed per-column phase, which is what
/// the beamspace shift-invariance restoration requires.
inline MatC steering_bank(int rows, int cols, double scale, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double width = (hi - lo) / cols;
  MatC t(rows, cols);
  for (int c = 0; c < cols; ++c) {
    // jitter inside 80% of the stratum keeps neighboring beams separated
    const double psi = lo + (c + 0.1 + 0.8 * u(rng)) * width;
    t.col(c) = ula_response(rows, psi) / scale;
  }
  return t;
}

}  // namespace detail

/// Draws pilots with |x| = sqrt(p_tx), a fixed Kronecker-structured combiner
/// W = t1 kron t2 (columns unit-norm) and RIS profiles
/// upsilon = p * (t3 kron t4). Deterministic under seed.
inline ProbeDesign generate_pilots_and_profiles(const ScenarioConfig& cfg, double amplification,
                                                std::uint64_t seed) {
  if (cfg.sqrt_g() * cfg.sqrt_g() != cfg.num_transmissions)
    throw config_error("transmission count must be a perfect square");
  Rng rng = make_rng(seed, {0x9d0be});
  ProbeDesign d;
  d.t1 = detail::steering_bank(cfg.bs_array.n1, cfg.rfc_n1, std::sqrt(double(cfg.bs_array.n1)),
                               -pi, pi, rng);
  d.t2 = detail::steering_bank(cfg.bs_array.n2, cfg.rfc_n2, std::sqrt(double(cfg.bs_array.n2)),
                               -pi, pi, rng);
  d.w = kron(d.t1, d.t2);
  // profile beams only need to cover the reachable direction-cosine sums,
  // |sum| <= 2 -> |omega| <= 2 * 2*pi*fc*spacing/c
  const double w_max = std::min(pi, 2.0 * 2.0 * pi * cfg.fc * cfg.ris_array.spacing / cfg.c);
  d.profiles.t3 = detail::steering_bank(cfg.ris_array.n1, cfg.sqrt_g(), 1.0, -w_max, w_max, rng);
  d.profiles.t4 = detail::steering_bank(cfg.ris_array.n2, cfg.sqrt_g(), 1.0, -w_max, w_max, rng);
  d.profiles.amplification = amplification;
  d.profiles.upsilon = amplification * kron(d.profiles.t3, d.profiles.t4);
  d.pilots.resize(cfg.num_transmissions, cfg.num_subcarriers);
  const double amp = std::sqrt(cfg.p_tx);
  for (Eigen::Index g = 0; g < d.pilots.rows(); ++g)
    for (Eigen::Index k = 0; k < d.pilots.cols(); ++k)
      d.pilots(g, k) = std::polar(amp, uniform_phase(rng));
  return d;
}

// ---------------------------------------------------------------------------
// observation synthesis
// ---------------------------------------------------------------------------

/// Received samples of a full probing block plus everything needed to
/// interpret them. y and noise_free are (K*M) x G with row = k*M + port.
struct ObservationSet {
  MatC y;
  MatC noise_free;
  MatC pilots;  // G x K
  MatC w, t1, t2;
  RisProfileSet profiles;
  int num_subcarriers = 0;
  int ports = 0;
};

/// Precomputed factored channel state shared by synthesis, SNR evaluation and
/// the Fisher-information module. Holds per-path combined responses and the
/// per-transmission effective reflection (with mutual coupling if given).
struct SynthContext {
  struct DirectPath {
    cplx gain;
    double tau;
    VecC wa;  // W^H aB
  };
  struct InPath {
    cplx gain;
    VecC ar;  // aR(phi_arrival)
  };
  struct OutPath {
    cplx gain;
    double tau;
    VecC wa;    // W^H aB
    VecC ar_d;  // aR(phi_departure)
  };
  std::vector<DirectPath> direct;
  std::vector<InPath> ris_in;
  std::vector<OutPath> ris_out;
  std::vector<MatC> gamma_eff;          // per g, NR x NR (diagonal unless coupled)
  std::vector<std::vector<VecC>> vg;    // vg[g][o] = gamma_eff[g]^T ar_d[o]
  MatC w;                               // NB x M
  ProbeDesign design;
  double delta_f = 0.0;
  double sigma0_sq = 0.0;
  double sigmar_sq = 0.0;
  int num_subcarriers = 0;
  int num_transmissions = 0;
  bool coupled = false;
};

inline SynthContext make_synth_context(const ScenarioConfig& cfg, const LocalizationState& state,
                                       const LosGains& gains, const ProbeDesign& design,
                                       const MultipathSet* mp = nullptr,
                                       const MatC* scattering = nullptr) {
  SynthContext ctx;
  ctx.w = design.w;
  ctx.design = design;
  ctx.delta_f = cfg.subcarrier_spacing();
  ctx.sigma0_sq = cfg.sigma0_sq;
  ctx.sigmar_sq = cfg.sigmar_sq;
  ctx.num_subcarriers = cfg.num_subcarriers;
  ctx.num_transmissions = cfg.num_transmissions;

  const auto paths = detail::expand_paths(cfg, state, gains, mp);
  for (const auto& p : paths.ue_bs)
    ctx.direct.push_back({p.gain, p.tau,
                          design.w.adjoint() * array_response(cfg.bs_array, p.bs_angle, cfg.fc, cfg.c)});
  for (const auto& p : paths.ue_ris)
    ctx.ris_in.push_back({p.gain, array_response(cfg.ris_array, p.ris_angle, cfg.fc, cfg.c)});
  for (const auto& p : paths.ris_bs)
    ctx.ris_out.push_back({p.gain, p.tau,
                           design.w.adjoint() * array_response(cfg.bs_array, p.bs_angle, cfg.fc, cfg.c),
                           array_response(cfg.ris_array, p.ris_angle, cfg.fc, cfg.c)});

  ctx.coupled = scattering != nullptr && !scattering->isZero(0.0);
  ctx.gamma_eff.reserve(static_cast<std::size_t>(cfg.num_transmissions));
  for (int g = 0; g < cfg.num_transmissions; ++g) {
    const VecC gamma = design.profiles.upsilon.col(g);
    ctx.gamma_eff.push_back(ctx.coupled ? mutual_coupling_reflection(gamma, *scattering)
                                        : MatC(gamma.asDiagonal()));
  }
  ctx.vg.resize(static_cast<std::size_t>(cfg.num_transmissions));
  for (int g = 0; g < cfg.num_transmissions; ++g)
    for (const auto& o : ctx.ris_out)
      ctx.vg[static_cast<std::size_t>(g)].push_back(ctx.gamma_eff[static_cast<std::size_t>(g)].transpose() *
                                                    o.ar_d);
  return ctx;
}

/// Noise-free received mean of transmission g, subcarrier k (0-based).
inline VecC noise_free_mean(const SynthContext& ctx, int g, int k) {
  const auto m = ctx.w.cols();
  VecC mu = VecC::Zero(m);
  for (const auto& p : ctx.direct) mu += p.gain * detail::delay_phase(ctx.delta_f, k, p.tau) * p.wa;
  const auto& vg = ctx.vg[static_cast<std::size_t>(g)];
  for (std::size_t o = 0; o < ctx.ris_out.size(); ++o) {
    const auto& op = ctx.ris_out[o];
    cplx through{0, 0};
    for (const auto& ip : ctx.ris_in) through += (vg[o].transpose() * ip.ar)(0) * ip.gain;
    mu += op.gain * detail::delay_phase(ctx.delta_f, k, op.tau) * through * op.wa;
  }
  return mu * ctx.design.pilots(g, k);
}

/// One combined-noise draw W^H (H_ris_bs^k Gamma_g n_r + n_0); noise_scale
/// multiplies both variances.
inline VecC draw_combined_noise(const SynthContext& ctx, int g, int k, double noise_scale,
                                Rng& rng) {
  const auto nb = ctx.w.rows();
  const auto nr = ctx.gamma_eff.front().rows();
  VecC out = VecC::Zero(ctx.w.cols());
  if (ctx.sigmar_sq > 0 && noise_scale > 0) {
    const VecC n_r = complex_gaussian_vector(rng, nr, ctx.sigmar_sq * noise_scale);
    const auto& vg = ctx.vg[static_cast<std::size_t>(g)];
    for (std::size_t o = 0; o < ctx.ris_out.size(); ++o) {
      const auto& op = ctx.ris_out[o];
      out += op.gain * detail::delay_phase(ctx.delta_f, k, op.tau) * (vg[o].transpose() * n_r)(0) *
             op.wa;
    }
  }
  if (ctx.sigma0_sq > 0 && noise_scale > 0)
    out += ctx.w.adjoint() * complex_gaussian_vector(rng, nb, ctx.sigma0_sq * noise_scale);
  return out;
}

/// Synthesizes the full observation block. Fresh noise per (g,k); the
/// noise-free means are retained for SNR evaluation and testing.
inline ObservationSet synthesize_observations(const SynthContext& ctx, double noise_scale,
                                              std::uint64_t seed) {
  const int big_k = ctx.num_subcarriers, big_g = ctx.num_transmissions;
  const auto m = ctx.w.cols();
  ObservationSet obs;
  obs.y.resize(big_k * m, big_g);
  obs.noise_free.resize(big_k * m, big_g);
  obs.pilots = ctx.design.pilots;
  obs.w = ctx.design.w;
  obs.t1 = ctx.design.t1;
  obs.t2 = ctx.design.t2;
  obs.profiles = ctx.design.profiles;
  obs.num_subcarriers = big_k;
  obs.ports = static_cast<int>(m);
  Rng rng = make_rng(seed, {0x0b5e});
  for (int g = 0; g < big_g; ++g)
    for (int k = 0; k < big_k; ++k) {
      const VecC mu = noise_free_mean(ctx, g, k);
      obs.noise_free.col(g).segment(k * m, m) = mu;
      obs.y.col(g).segment(k * m, m) = mu + draw_combined_noise(ctx, g, k, noise_scale, rng);
    }
  return obs;
}

/// Total complex noise power E||n_{g,k}||^2 summed over all (g,k) at unit
/// noise scale.
inline double total_noise_trace(const SynthContext& ctx) {
  const double w_term = ctx.sigma0_sq * ctx.w.squaredNorm();
  double total = 0.0;
  for (int g = 0; g < ctx.num_transmissions; ++g) {
    const auto& vg = ctx.vg[static_cast<std::size_t>(g)];
    for (int k = 0; k < ctx.num_subcarriers; ++k) {
      // || sum_o c_o phi_k(tau_o) wa_o vg_o^T ||_F^2
      double r_term = 0.0;
      for (std::size_t o = 0; o < ctx.ris_out.size(); ++o)
        for (std::size_t q = 0; q < ctx.ris_out.size(); ++q) {
          const auto& po = ctx.ris_out[o];
          const auto& pq = ctx.ris_out[q];
          const cplx co = po.gain * detail::delay_phase(ctx.delta_f, k, po.tau);
          const cplx cq = pq.gain * detail::delay_phase(ctx.delta_f, k, pq.tau);
          r_term += std::real(co * std::conj(cq) * (pq.wa.dot(po.wa)) * (vg[q].dot(vg[o])));
        }
      total += w_term + ctx.sigmar_sq * r_term;
    }
  }
  return total;
}

/// Received SNR in dB: sum ||mu||^2 / sum tr(noise covariance). Returns
/// +inf when the noise vanishes and -inf when the means vanish.
inline double received_snr_db(const SynthContext& ctx, const MatC& noise_free,
                              double noise_scale) {
  const double sig = noise_free.squaredNorm();
  const double noise = total_noise_trace(ctx) * noise_scale;
  if (sig == 0.0) return -inf;
  if (noise == 0.0) return inf;
  return linear_to_db(sig / noise);
}

/// Noise scale that realizes a target received SNR for this context.
inline double noise_scale_for_snr(const SynthContext& ctx, const MatC& noise_free,
                                  double target_snr_db) {
  const double nominal = received_snr_db(ctx, noise_free, 1.0);
  if (!std::isfinite(nominal)) throw config_error("cannot rescale noise: degenerate SNR");
  return db_to_linear(nominal - target_snr_db);
}

}  // namespace jrcup

#endif  // JRCUP_CHANNEL_HPP
