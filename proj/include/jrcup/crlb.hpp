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
// Fisher information and error bounds: channel-parameter FIM under the
// colored noise of an amplifying RIS, Schur-complement reduction to the
// localization-related parameters, geometric chain rule to the state-space
// FIM, and the prior-knowledge / multi-anchor variants.
//
// Delays and the clock bias are parameterized in meters throughout this
// module (every bound on a delay-like quantity is therefore in meters).
// Only the means carry parameter information; the dependence of the noise
// covariance on the channel is deliberately not counted, matching estimators
// that do not use the noise statistics.

#ifndef JRCUP_CRLB_HPP
#define JRCUP_CRLB_HPP

#include <array>
#include <string>
#include <vector>

#include "jrcup/model.hpp"

namespace jrcup {

/// Real-composite covariance of A*n with n circular complex Gaussian of
/// variance sigma_sq: (sigma_sq/2) * [[Re(G), Im(G)^T], [Im(G), Re(G)]],
/// G = A A^H. Ordering: [Re(y); Im(y)].
inline Mat realified_covariance(const MatC& a, double sigma_sq) {
  const MatC g = a * a.adjoint();
  const auto m = g.rows();
  Mat c(2 * m, 2 * m);
  c.topLeftCorner(m, m) = g.real();
  c.bottomRightCorner(m, m) = g.real();
  c.bottomLeftCorner(m, m) = g.imag();
  c.topRightCorner(m, m) = g.imag().transpose();
  return (sigma_sq / 2.0) * c;
}

/// Receiver and RIS noise contributions for one transmission/subcarrier.
struct NoiseCovariance {
  Mat c0;  // combiner-shaped receiver noise
  Mat cr;  // reflected RIS noise
  Mat total() const { return c0 + cr; }
};

inline NoiseCovariance noise_covariance(const MatC& w, const MatC& h_ris_bs_k,
                                        const MatC& gamma_g, double sigma0_sq,
                                        double sigmar_sq) {
  NoiseCovariance out;
  out.c0 = realified_covariance(w.adjoint(), sigma0_sq);
  out.cr = realified_covariance(w.adjoint() * h_ris_bs_k * gamma_g, sigmar_sq);
  return out;
}

/// Square real FIM with named parameter axes.
struct FimMatrix {
  Mat value;
  std::vector<std::string> axes;
};

inline const std::array<const char*, 8>& eta_axis_names() {
  static const std::array<const char*, 8> names{
      "aoa_los_az", "aoa_los_el", "aoa_ris_az", "aoa_ris_el",
      "delay_los_m", "delay_ris_m", "dirsum_y", "dirsum_z"};
  return names;
}

inline const std::array<const char*, 8>& xi_axis_names() {
  static const std::array<const char*, 8> names{"ue_x", "ue_y", "ue_z", "ris_x",
                                                "ris_y", "ris_z", "ris_yaw", "clock_bias_m"};
  return names;
}

/// Everything fim_channel needs besides the evaluation point: the parametric
/// signal model and the per-transmission noise covariance (constant over
/// subcarriers for the two-path channel, whose subcarrier phase is unimodular).
struct FimContext {
  TwoPathSignalModel model;
  std::vector<Mat> cov_per_g;

  static FimContext make(const ScenarioConfig& cfg, const LocalizationState& state,
                         const LosGains& gains, const ProbeDesign& design,
                         const MatC* scattering = nullptr) {
    FimContext ctx;
    ObservationSet shape;
    shape.pilots = design.pilots;
    shape.w = design.w;
    shape.t1 = design.t1;
    shape.t2 = design.t2;
    shape.profiles = design.profiles;
    shape.num_subcarriers = cfg.num_subcarriers;
    shape.ports = cfg.rfc_ports();
    shape.y.resize(0, cfg.num_transmissions);
    ctx.model = TwoPathSignalModel::make(cfg, shape);

    const ChannelMatrices ch = build_channels(cfg, state, gains, nullptr, 0);
    ctx.cov_per_g.reserve(static_cast<std::size_t>(cfg.num_transmissions));
    for (int g = 0; g < cfg.num_transmissions; ++g) {
      const VecC gamma = design.profiles.upsilon.col(g);
      const MatC reflect = scattering != nullptr && !scattering->isZero(0.0)
                               ? mutual_coupling_reflection(gamma, *scattering)
                               : MatC(gamma.asDiagonal());
      const NoiseCovariance nc =
          noise_covariance(design.w, ch.ris_bs, reflect, cfg.sigma0_sq, cfg.sigmar_sq);
      ctx.cov_per_g.push_back(nc.total());
    }
    return ctx;
  }
};

inline FullChannelParams true_channel_params(const ScenarioConfig& cfg,
                                             const LocalizationState& state,
                                             const LosGains& gains) {
  FullChannelParams p;
  p.eta = forward_map(state, cfg.bs_pose, cfg.c);
  p.alpha_los = gains.ue_bs;
  p.alpha_ris = gains.ue_ris * gains.ris_bs;
  return p;
}

/// 12x12 FIM of the channel parameters (eta in meters-delays order, then
/// Re/Im of the two gains). noise_scale multiplies both noise variances and
/// enters the FIM exactly as 1/noise_scale.
inline FimMatrix fim_channel(const FullChannelParams& eta_ch, const FimContext& ctx,
                             double noise_scale = 1.0) {
  const auto& model = ctx.model;
  const auto ev = model.evaluate(eta_ch.eta, true);
  const int big_g = model.transmissions(), big_k = model.subcarriers(), m = model.ports();

  Mat j = Mat::Zero(12, 12);
  MatC dcols(m, 12);
  Mat d(2 * m, 12);
  for (int g = 0; g < big_g; ++g) {
    Eigen::LDLT<Mat> ldlt(ctx.cov_per_g[static_cast<std::size_t>(g)]);
    if (ldlt.info() != Eigen::Success)
      throw numerical_degeneracy("fim_channel: noise covariance not factorizable");
    for (int k = 0; k < big_k; ++k) {
      const Eigen::Index row0 = (static_cast<Eigen::Index>(g) * big_k + k) * m;
      const auto mu_l = ev.mu_direct.segment(row0, m);
      const auto mu_r = ev.mu_reflected.segment(row0, m);
      dcols.col(0) = eta_ch.alpha_los * ev.d_direct.block(row0, 0, m, 1);
      dcols.col(1) = eta_ch.alpha_los * ev.d_direct.block(row0, 1, m, 1);
      dcols.col(2) = eta_ch.alpha_ris * ev.d_reflected.block(row0, 0, m, 1);
      dcols.col(3) = eta_ch.alpha_ris * ev.d_reflected.block(row0, 1, m, 1);
      dcols.col(4) = eta_ch.alpha_los * ev.d_direct.block(row0, 2, m, 1);
      dcols.col(5) = eta_ch.alpha_ris * ev.d_reflected.block(row0, 2, m, 1);
      dcols.col(6) = eta_ch.alpha_ris * ev.d_reflected.block(row0, 3, m, 1);
      dcols.col(7) = eta_ch.alpha_ris * ev.d_reflected.block(row0, 4, m, 1);
      dcols.col(8) = mu_l;
      dcols.col(9) = j1i * mu_l;
      dcols.col(10) = mu_r;
      dcols.col(11) = j1i * mu_r;
      d.topRows(m) = dcols.real();
      d.bottomRows(m) = dcols.imag();
      j.noalias() += d.transpose() * ldlt.solve(d);
    }
  }
  FimMatrix out;
  out.value = (j + j.transpose()) / (2.0 * noise_scale);  // symmetrize rounding
  out.axes.assign(eta_axis_names().begin(), eta_axis_names().end());
  out.axes.insert(out.axes.end(),
                  {"re_alpha_los", "im_alpha_los", "re_alpha_ris", "im_alpha_ris"});
  return out;
}

/// Equivalent FIM of the leading block after eliminating the trailing
/// nuisance block by Schur complement: X - Y Z^{-1} Y^T.
inline FimMatrix efim_leading_block(const FimMatrix& fim, Eigen::Index keep) {
  const auto n = fim.value.rows();
  if (keep <= 0 || keep >= n) throw std::invalid_argument("efim_leading_block: bad block size");
  const Mat x = fim.value.topLeftCorner(keep, keep);
  const Mat y = fim.value.topRightCorner(keep, n - keep);
  const Mat z = fim.value.bottomRightCorner(n - keep, n - keep);
  Eigen::FullPivLU<Mat> lu(z);
  if (!lu.isInvertible())
    throw numerical_degeneracy("efim_leading_block: singular nuisance block");
  FimMatrix out;
  out.value = x - y * lu.solve(y.transpose());
  out.value = ((out.value + out.value.transpose()) / 2.0).eval();
  out.axes.assign(fim.axes.begin(), fim.axes.begin() + keep);
  return out;
}

/// 8x8 equivalent FIM of the localization-related channel parameters.
inline FimMatrix efim_localization_channel(const FimMatrix& fim_eta_ch) {
  return efim_leading_block(fim_eta_ch, 8);
}

/// Analytic Jacobian d(eta)/d(xi), delays and clock bias in meters.
/// xi = [p_ue, p_ris, ris_yaw, clock_bias_m].
inline Eigen::Matrix<double, 8, 8> jacobian_eta_xi(const LocalizationState& state,
                                                   const Pose& bs) {
  Eigen::Matrix<double, 8, 8> t = Eigen::Matrix<double, 8, 8>::Zero();
  const Mat3 r_bs_t = bs.rotation().transpose();

  // angle rows: d(az,el)/d(target) for an observer pose
  auto angle_block = [&](const Vec3& target) {
    const Vec3 u = r_bs_t * (target - bs.position);
    const double r2 = u.squaredNorm(), r = std::sqrt(r2);
    const double rho2 = u[0] * u[0] + u[1] * u[1];
    const double rho = std::sqrt(rho2);
    Eigen::Matrix<double, 2, 3> d_local;
    d_local.row(0) << -u[1] / rho2, u[0] / rho2, 0.0;
    // d el/du_i = (delta_i3 r^2 - u3 u_i) / (r^2 * rho)
    d_local.row(1) << -u[2] * u[0] / (r2 * rho), -u[2] * u[1] / (r2 * rho),
        (r2 - u[2] * u[2]) / (r2 * rho);
    return (d_local * r_bs_t).eval();
  };

  t.block<2, 3>(0, 0) = angle_block(state.p_ue);   // direct-path angles vs p_ue
  t.block<2, 3>(2, 3) = angle_block(state.p_ris);  // reflected-path angles vs p_ris

  const Vec3 ue_from_bs = state.p_ue - bs.position;
  const Vec3 ue_from_ris = state.p_ue - state.p_ris;
  const Vec3 ris_from_bs = state.p_ris - bs.position;
  const double d_ub = ue_from_bs.norm(), d_ur = ue_from_ris.norm(), d_rb = ris_from_bs.norm();

  t.block<1, 3>(4, 0) = ue_from_bs.transpose() / d_ub;  // delay_los_m
  t(4, 7) = 1.0;
  t.block<1, 3>(5, 0) = ue_from_ris.transpose() / d_ur;  // delay_ris_m
  t.block<1, 3>(5, 3) = (-ue_from_ris / d_ur + ris_from_bs / d_rb).transpose();
  t(5, 7) = 1.0;

  // direction-cosine sum rows
  const Vec3 euler(state.fixed_o1_o2[0], state.fixed_o1_o2[1], state.ris_yaw);
  const Mat3 r_ris = rotation_matrix(euler);
  const Mat3 dr_yaw = rotation_matrix_dz(euler);
  const Vec3 u = ue_from_ris;
  const Vec3 v = -ris_from_bs;  // bs - p_ris
  const double nu = u.norm(), nv = v.norm();
  for (int axis = 1; axis <= 2; ++axis) {
    const int row = 5 + axis;  // 6 -> dirsum_y (e2), 7 -> dirsum_z (e3)
    const Vec3 rv = r_ris.col(axis);
    auto grad_term = [&](const Vec3& x, double n) {
      return (rv / n - rv.dot(x) * x / (n * n * n)).eval();
    };
    const Vec3 gu = grad_term(u, nu);
    const Vec3 gv = grad_term(v, nv);
    t.block<1, 3>(row, 0) = gu.transpose();
    t.block<1, 3>(row, 3) = (-gu - gv).transpose();
    t(row, 6) = dr_yaw.col(axis).dot(u / nu + v / nv);
  }
  return t;
}

/// Chain rule to the localization parameters: J(xi) = T^T J(eta) T.
inline FimMatrix fim_localization(const FimMatrix& fim_eta, const LocalizationState& state,
                                  const Pose& bs) {
  if (fim_eta.value.rows() != 8)
    throw std::invalid_argument("fim_localization: expected the 8x8 channel-parameter FIM");
  const auto t = jacobian_eta_xi(state, bs);
  FimMatrix out;
  out.value = t.transpose() * fim_eta.value * t;
  out.value = ((out.value + out.value.transpose()) / 2.0).eval();
  out.axes.assign(xi_axis_names().begin(), xi_axis_names().end());
  return out;
}

/// Chain rule with a subset of localization parameters known a priori: the
/// corresponding Jacobian columns are removed before the transformation.
inline FimMatrix fim_with_priors(const FimMatrix& fim_eta, const LocalizationState& state,
                                 const Pose& bs, bool known_yaw, bool known_bias) {
  const auto t_full = jacobian_eta_xi(state, bs);
  std::vector<int> cols;
  std::vector<std::string> axes;
  for (int i = 0; i < 8; ++i) {
    if (known_yaw && i == 6) continue;
    if (known_bias && i == 7) continue;
    cols.push_back(i);
    axes.emplace_back(xi_axis_names()[static_cast<std::size_t>(i)]);
  }
  Mat t(8, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) t.col(static_cast<Eigen::Index>(c)) = t_full.col(cols[c]);
  FimMatrix out;
  out.value = t.transpose() * fim_eta.value * t;
  out.value = ((out.value + out.value.transpose()) / 2.0).eval();
  out.axes = std::move(axes);
  return out;
}

/// Element-wise sum of per-anchor FIMs over a shared parameterization.
inline FimMatrix fim_multi_bs(const std::vector<FimMatrix>& per_bs) {
  if (per_bs.empty()) throw std::invalid_argument("fim_multi_bs: empty list");
  FimMatrix out = per_bs.front();
  for (std::size_t i = 1; i < per_bs.size(); ++i) {
    if (per_bs[i].axes != out.axes)
      throw std::invalid_argument("fim_multi_bs: parameter axes mismatch");
    out.value += per_bs[i].value;
  }
  return out;
}

/// Condition-number cap beyond which a FIM is reported as blind (+inf bound).
inline constexpr double fim_condition_cap = 1e14;

/// Error bound sqrt(tr([J^{-1}]_block)) over the axes in `labels`.
/// Near-singular information returns +inf instead of a noise-dominated value.
inline double error_bound(const FimMatrix& fim, const std::vector<std::string>& labels) {
  std::vector<Eigen::Index> idx;
  for (const auto& lab : labels) {
    bool found = false;
    for (std::size_t i = 0; i < fim.axes.size(); ++i)
      if (fim.axes[i] == lab) {
        idx.push_back(static_cast<Eigen::Index>(i));
        found = true;
      }
    if (!found) throw std::invalid_argument("error_bound: unknown axis " + lab);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(fim.value);
  if (eig.info() != Eigen::Success) throw numerical_degeneracy("error_bound: eigensolver failed");
  const auto& ev = eig.eigenvalues();
  const double emax = ev.maxCoeff();
  if (!(emax > 0) || ev.minCoeff() <= emax / fim_condition_cap) return inf;
  const Mat inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  double tr = 0.0;
  for (auto i : idx) tr += inv(i, i);
  return std::sqrt(tr);
}

inline double eb_position_ue(const FimMatrix& fim_xi) {
  return error_bound(fim_xi, {"ue_x", "ue_y", "ue_z"});
}
inline double eb_position_ris(const FimMatrix& fim_xi) {
  return error_bound(fim_xi, {"ris_x", "ris_y", "ris_z"});
}
inline double eb_ris_yaw(const FimMatrix& fim_xi) { return error_bound(fim_xi, {"ris_yaw"}); }
inline double eb_clock_bias(const FimMatrix& fim_xi) {
  return error_bound(fim_xi, {"clock_bias_m"});
}
inline double eb_aoa_los(const FimMatrix& fim_eta) {
  return error_bound(fim_eta, {"aoa_los_az", "aoa_los_el"});
}
inline double eb_aoa_ris(const FimMatrix& fim_eta) {
  return error_bound(fim_eta, {"aoa_ris_az", "aoa_ris_el"});
}
inline double eb_delay_los(const FimMatrix& fim_eta) {
  return error_bound(fim_eta, {"delay_los_m"});
}
inline double eb_delay_ris(const FimMatrix& fim_eta) {
  return error_bound(fim_eta, {"delay_ris_m"});
}
inline double eb_dirsums(const FimMatrix& fim_eta) {
  return error_bound(fim_eta, {"dirsum_y", "dirsum_z"});
}

}  // namespace jrcup

#endif  // JRCUP_CRLB_HPP
