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
// Estimator-side parametric signal model: noise-free means of the direct and
// reflected paths as functions of the eight localization-related channel
// parameters, with analytic derivatives. Used by the least-squares
// refinement and by the Fisher-information module.
//
// Inside this model delays are differentiated in meters (delay * c), which
// keeps all eight coordinates comparably scaled.

#ifndef JRCUP_MODEL_HPP
#define JRCUP_MODEL_HPP

#include "jrcup/channel.hpp"

namespace jrcup {

class TwoPathSignalModel {
 public:
  /// Stacked means and derivative blocks. Vector index = (g*K + k)*M + port.
  /// Derivative columns: direct path (az, el, delay_m); reflected path
  /// (az, el, delay_m, dirsum_y, dirsum_z).
  struct Eval {
    VecC mu_direct, mu_reflected;
    MatC d_direct;     // N x 3
    MatC d_reflected;  // N x 5
  };

  static TwoPathSignalModel make(const ScenarioConfig& cfg, const ObservationSet& obs) {
    TwoPathSignalModel m;
    m.w_ = obs.w;
    m.pilots_ = obs.pilots;
    m.upsilon_ = obs.profiles.upsilon;
    m.bs_array_ = cfg.bs_array;
    m.ris_array_ = cfg.ris_array;
    m.fc_ = cfg.fc;
    m.c_ = cfg.c;
    m.delta_f_ = cfg.subcarrier_spacing();
    m.num_k_ = obs.num_subcarriers;
    m.num_g_ = static_cast<int>(obs.y.cols());
    m.ports_ = obs.ports;
    return m;
  }

  Eigen::Index dim() const { return static_cast<Eigen::Index>(num_g_) * num_k_ * ports_; }
  int transmissions() const { return num_g_; }
  int subcarriers() const { return num_k_; }
  int ports() const { return ports_; }
  double propagation_speed() const { return c_; }

  /// Restacks an observation block (K*M x G, row = k*M + port) into the
  /// model's (g, k, port) vector order.
  VecC stack_observations(const MatC& y_block) const {
    VecC y(dim());
    for (int g = 0; g < num_g_; ++g)
      for (int k = 0; k < num_k_; ++k)
        y.segment((static_cast<Eigen::Index>(g) * num_k_ + k) * ports_, ports_) =
            y_block.col(g).segment(static_cast<Eigen::Index>(k) * ports_, ports_);
    return y;
  }

  Eval evaluate(const ChannelParams& eta, bool with_derivatives = true) const {
    Eval ev;
    const Eigen::Index n = dim();
    ev.mu_direct.resize(n);
    ev.mu_reflected.resize(n);
    if (with_derivatives) {
      ev.d_direct.resize(n, 3);
      ev.d_reflected.resize(n, 5);
    }

    const double kappa = 2.0 * pi * fc_ / c_;

    // beamspace responses of the two arrival angles and their derivatives
    VecC wa_l, wa_l_az, wa_l_el, wa_r, wa_r_az, wa_r_el;
    bs_response(eta.aoa_los, wa_l, wa_l_az, wa_l_el, with_derivatives);
    bs_response(eta.aoa_ris, wa_r, wa_r_az, wa_r_el, with_derivatives);

    // per-transmission reflected amplitude through the profiles
    const Eigen::Index nr = upsilon_.rows();
    VecC rvec(nr), rvec_y(nr), rvec_z(nr);
    {
      const auto pos = ris_array_.element_positions();
      for (Eigen::Index i = 0; i < nr; ++i) {
        const double y = pos[static_cast<std::size_t>(i)][1], z = pos[static_cast<std::size_t>(i)][2];
        const cplx e = std::exp(j1i * (kappa * (y * eta.dirsum_y + z * eta.dirsum_z)));
        rvec[i] = e;
        rvec_y[i] = j1i * kappa * y * e;
        rvec_z[i] = j1i * kappa * z * e;
      }
    }
    const VecC profile_amp = upsilon_.transpose() * rvec;          // per g
    const VecC profile_amp_y = upsilon_.transpose() * rvec_y;
    const VecC profile_amp_z = upsilon_.transpose() * rvec_z;

    for (int g = 0; g < num_g_; ++g)
      for (int k = 0; k < num_k_; ++k) {
        const Eigen::Index row0 = (static_cast<Eigen::Index>(g) * num_k_ + k) * ports_;
        const cplx x = pilots_(g, k);
        const double ang = 2.0 * pi * k * delta_f_;
        const cplx ph_l = std::exp(-j1i * (ang * eta.tau_los));
        const cplx ph_r = std::exp(-j1i * (ang * eta.tau_ris));
        const cplx s_l = x * ph_l;
        const cplx s_r = x * ph_r * profile_amp[g];
        ev.mu_direct.segment(row0, ports_) = s_l * wa_l;
        ev.mu_reflected.segment(row0, ports_) = s_r * wa_r;
        if (!with_derivatives) continue;
        // delay derivative taken in meters: d/d(c*tau) = (1/c) d/d(tau)
        const cplx dtau = -j1i * (ang / c_);
        ev.d_direct.block(row0, 0, ports_, 1) = s_l * wa_l_az;
        ev.d_direct.block(row0, 1, ports_, 1) = s_l * wa_l_el;
        ev.d_direct.block(row0, 2, ports_, 1) = (dtau * s_l) * wa_l;
        ev.d_reflected.block(row0, 0, ports_, 1) = s_r * wa_r_az;
        ev.d_reflected.block(row0, 1, ports_, 1) = s_r * wa_r_el;
        ev.d_reflected.block(row0, 2, ports_, 1) = (dtau * s_r) * wa_r;
        ev.d_reflected.block(row0, 3, ports_, 1) = (x * ph_r * profile_amp_y[g]) * wa_r;
        ev.d_reflected.block(row0, 4, ports_, 1) = (x * ph_r * profile_amp_z[g]) * wa_r;
      }
    return ev;
  }

  /// Convenience: stacked total mean alpha_l*mu_l + alpha_r*mu_r.
  VecC mean(const FullChannelParams& p) const {
    const Eval ev = evaluate(p.eta, false);
    return p.alpha_los * ev.mu_direct + p.alpha_ris * ev.mu_reflected;
  }

 private:
  void bs_response(const AnglePair& a, VecC& resp, VecC& d_az, VecC& d_el, bool derivs) const {
    const double kappa = 2.0 * pi * fc_ / c_;
    const VecC full = array_response(bs_array_, a, fc_, c_);
    resp = w_.adjoint() * full;
    if (!derivs) return;
    const auto pos = bs_array_.element_positions();
    const double ca = std::cos(a.az), sa = std::sin(a.az);
    const double ce = std::cos(a.el), se = std::sin(a.el);
    VecC full_az(full.size()), full_el(full.size());
    for (Eigen::Index i = 0; i < full.size(); ++i) {
      const double y = pos[static_cast<std::size_t>(i)][1], z = pos[static_cast<std::size_t>(i)][2];
      full_az[i] = j1i * kappa * (ca * ce * y) * full[i];
      full_el[i] = j1i * kappa * (-sa * se * y + ce * z) * full[i];
    }
    d_az = w_.adjoint() * full_az;
    d_el = w_.adjoint() * full_el;
  }

  MatC w_, pilots_, upsilon_;
  ArrayGeometry bs_array_, ris_array_;
  double fc_ = 0.0, c_ = default_propagation_speed, delta_f_ = 0.0;
  int num_k_ = 0, num_g_ = 0, ports_ = 0;
};

}  // namespace jrcup

#endif  // JRCUP_MODEL_HPP
