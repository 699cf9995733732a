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
// Least-squares refinement of the eight localization-related channel
// parameters: Gauss-Newton with backtracking on the variable-projection
// objective, the two complex path gains eliminated in closed form at every
// step. The plain (unwhitened) residual is intentional: the received noise
// is colored with unknown statistics, so the estimator stays least-squares.

#ifndef JRCUP_REFINE_HPP
#define JRCUP_REFINE_HPP

#include <utility>
#include <vector>

#include "jrcup/model.hpp"

namespace jrcup {

/// Exact least-squares minimizers of ||y - a_l*mu_l - a_r*mu_r|| over the
/// complex gains. Throws numerical_degeneracy when mu_l and mu_r are
/// (near-)collinear.
inline std::pair<cplx, cplx> closed_form_gains(const VecC& y, const VecC& mu_l,
                                               const VecC& mu_r) {
  const double nl = mu_l.squaredNorm(), nr = mu_r.squaredNorm();
  const cplx cross = mu_l.dot(mu_r);  // mu_l^H mu_r
  const double denom = nl * nr - std::norm(cross);
  if (!(denom > 1e-12 * nl * nr) || nl == 0.0 || nr == 0.0)
    throw numerical_degeneracy("closed_form_gains: collinear path means");
  const cplx yl = mu_l.dot(y), yr = mu_r.dot(y);
  return {(yl * nr - yr * cross) / denom, (yr * nl - yl * std::conj(cross)) / denom};
}

struct RefineOptions {
  int max_iters = 40;
  double gradient_tol = 1e-10;  // on the gradient of the ||y||-normalized objective
  int max_backtracks = 40;
};

enum class RefineStop { max_iterations, gradient_tolerance, line_search_failure };

struct RefineResult {
  ChannelParams eta;
  cplx alpha_los{0, 0};
  cplx alpha_ris{0, 0};
  double initial_residual = 0.0;  // ||y - model||^2 at eta0
  double final_residual = 0.0;
  int iterations = 0;
  RefineStop stop = RefineStop::max_iterations;
  std::vector<double> residual_history;  // accepted iterates, non-increasing
};

namespace detail {

inline Eigen::Matrix<double, 8, 1> pack_scaled(const ChannelParams& eta, double c) {
  auto z = eta.to_vector();
  z[4] *= c;  // delays optimized in meters
  z[5] *= c;
  return z;
}

inline ChannelParams unpack_scaled(Eigen::Matrix<double, 8, 1> z, double c) {
  z[4] /= c;
  z[5] /= c;
  return ChannelParams::from_vector(z);
}

}  // namespace detail

/// Gauss-Newton refinement of eta from a stacked observation vector y
/// (model.stack_observations order).
inline RefineResult ls_refine(const ChannelParams& eta0, const TwoPathSignalModel& model,
                              const VecC& y, const RefineOptions& opts = {}) {
  const double c = model.propagation_speed();
  const double y_norm_sq = std::max(y.squaredNorm(), 1e-300);

  auto objective = [&](const Eigen::Matrix<double, 8, 1>& z,
                       std::pair<cplx, cplx>* gains_out) -> double {
    const auto ev = model.evaluate(detail::unpack_scaled(z, c), false);
    const auto gains = closed_form_gains(y, ev.mu_direct, ev.mu_reflected);
    if (gains_out) *gains_out = gains;
    return (y - gains.first * ev.mu_direct - gains.second * ev.mu_reflected).squaredNorm();
  };

  RefineResult out;
  Eigen::Matrix<double, 8, 1> z = detail::pack_scaled(eta0, c);
  std::pair<cplx, cplx> gains;
  double f = objective(z, &gains);
  out.initial_residual = f;
  out.residual_history.push_back(f);
  out.stop = RefineStop::max_iterations;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    out.iterations = iter;
    const auto ev = model.evaluate(detail::unpack_scaled(z, c), true);
    const VecC r = y - gains.first * ev.mu_direct - gains.second * ev.mu_reflected;

    MatC jac(model.dim(), 8);
    jac.col(0) = gains.first * ev.d_direct.col(0);
    jac.col(1) = gains.first * ev.d_direct.col(1);
    jac.col(2) = gains.second * ev.d_reflected.col(0);
    jac.col(3) = gains.second * ev.d_reflected.col(1);
    jac.col(4) = gains.first * ev.d_direct.col(2);
    jac.col(5) = gains.second * ev.d_reflected.col(2);
    jac.col(6) = gains.second * ev.d_reflected.col(3);
    jac.col(7) = gains.second * ev.d_reflected.col(4);

    // with the gains at their closed-form optimum the residual is orthogonal
    // to both means, so the projected-objective gradient is the plain one
    const Eigen::Matrix<double, 8, 1> grad = -2.0 * (jac.adjoint() * r).real();
    if ((grad.cwiseAbs().maxCoeff() / y_norm_sq) < opts.gradient_tol) {
      out.stop = RefineStop::gradient_tolerance;
      break;
    }

    // variable-projection step: remove the gain-reachable part of every
    // column so the normal equations see only what the gains cannot absorb
    const VecC q1 = ev.mu_direct / ev.mu_direct.norm();
    VecC q2 = ev.mu_reflected - q1 * q1.dot(ev.mu_reflected);
    q2 /= q2.norm();
    const MatC jac_proj = jac - q1 * (q1.adjoint() * jac) - q2 * (q2.adjoint() * jac);
    Eigen::Matrix<double, 8, 8> normal = (jac_proj.adjoint() * jac_proj).real();
    normal.diagonal().array() += 1e-12 * normal.trace();
    const Eigen::Matrix<double, 8, 1> step =
        normal.ldlt().solve((jac_proj.adjoint() * r).real());

    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, t *= 0.5) {
      std::pair<cplx, cplx> trial_gains;
      double f_trial;
      try {
        f_trial = objective(z + t * step, &trial_gains);
      } catch (const numerical_degeneracy&) {
        continue;  // step walked into a collinear configuration; shrink
      }
      if (f_trial < f) {
        z += t * step;
        f = f_trial;
        gains = trial_gains;
        out.residual_history.push_back(f);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.stop = RefineStop::line_search_failure;
      break;
    }
  }

  out.eta = detail::unpack_scaled(z, c);
  out.alpha_los = gains.first;
  out.alpha_ris = gains.second;
  out.final_residual = f;
  return out;
}

}  // namespace jrcup

#endif  // JRCUP_REFINE_HPP
