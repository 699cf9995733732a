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
// Element-space and beamspace (shift-invariance-restored) frequency
// estimation from CP factor matrices, and the full coarse channel-parameter
// estimator that runs it over a received probing block.

#ifndef JRCUP_ESPRIT_HPP
#define JRCUP_ESPRIT_HPP

#include <array>
#include <tuple>
#include <vector>

#include "jrcup/channel.hpp"
#include "jrcup/tensor.hpp"

namespace jrcup {

/// One-row-shift selection matrices: j1 = [I, 0], j2 = [0, I].
struct SelectionPair {
  Mat j1, j2;  // (n-1) x n

  static SelectionPair for_dim(Eigen::Index n) {
    SelectionPair s;
    s.j1 = Mat::Zero(n - 1, n);
    s.j2 = Mat::Zero(n - 1, n);
    s.j1.leftCols(n - 1).setIdentity();
    s.j2.rightCols(n - 1).setIdentity();
    return s;
  }
};

namespace detail {

/// full rank in the rectangular sense: smallest singular value well separated
inline void require_full_rank(const MatC& m, const char* what) {
  Eigen::JacobiSVD<MatC> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) < 1e-10 * sv(0))
    throw numerical_degeneracy(std::string(what) + ": rank-deficient matrix");
}

inline MatC pinv_solve(const MatC& a, const MatC& b, const char* what) {
  require_full_rank(a, what);
  return a.completeOrthogonalDecomposition().solve(b);
}

}  // namespace detail

/// Element-space shift-invariance estimator: theta = pinv(j1*u) * (j2*u).
/// For an exact harmonic subspace the eigenvalues of theta are e^{j*omega}.
inline MatC element_space_theta(const MatC& u, const SelectionPair& sel) {
  if (u.rows() < u.cols() + 1)
    throw std::invalid_argument("element_space_theta: need at least R+1 rows");
  return detail::pinv_solve(sel.j1 * u, sel.j2 * u, "element_space_theta");
}

/// Shift-invariance restoration operators for a beamspace transformation:
/// f solves j1*t = j2*t*f in least squares; q projects onto the orthogonal
/// complement of span{t_last, f^H t_first} where t_i is the i-th column of
/// t^H. Both annihilation products vanish by construction.
struct BeamspaceRestore {
  MatC q;  // J x J projector
  MatC f;  // J x J
};

inline BeamspaceRestore beamspace_restore(const MatC& t) {
  const auto rows = t.rows(), cols = t.cols();
  if (cols < 2) throw std::invalid_argument("beamspace_restore: beamspace dimension too small");
  if (rows < 2)
    throw std::invalid_argument("beamspace_restore: transformation needs at least two rows");
  BeamspaceRestore r;
  const MatC j1t = t.topRows(rows - 1);
  const MatC j2t = t.bottomRows(rows - 1);
  detail::require_full_rank(j2t, "beamspace_restore");
  r.f = j2t.completeOrthogonalDecomposition().solve(j1t);

  const VecC t_first = t.row(0).conjugate();
  const VecC t_last = t.row(rows - 1).conjugate();
  MatC span(cols, 2);
  span.col(0) = t_last;
  span.col(1) = r.f.adjoint() * t_first;
  // orthonormal basis of the span; works for any scaling of the columns
  Eigen::JacobiSVD<MatC> svd(span, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-13 * sv(0)) ++rank;
  const MatC basis = svd.matrixU().leftCols(rank);
  r.q = MatC::Identity(cols, cols) - basis * basis.adjoint();
  return r;
}

/// Beamspace estimator theta = pinv(q*u) * (q * f^H * u). With an exactly
/// shift-invariant transformation the eigenvalues are e^{j*omega}, the same
/// sign convention as the element-space estimator (verified by round-trip
/// tests against synthetic manifolds).
inline MatC beamspace_theta(const MatC& u, const BeamspaceRestore& restore) {
  return detail::pinv_solve(restore.q * u, restore.q * (restore.f.adjoint() * u),
                            "beamspace_theta");
}

/// Eigenvalue phases of a theta matrix, each in (-pi, pi].
inline std::vector<double> theta_frequencies(const MatC& theta) {
  Eigen::ComplexEigenSolver<MatC> eig(theta);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(theta.rows()));
  for (Eigen::Index i = 0; i < theta.rows(); ++i) out.push_back(std::arg(eig.eigenvalues()[i]));
  return out;
}

// ---------------------------------------------------------------------------
// coarse channel estimation over a probing block
// ---------------------------------------------------------------------------

struct CoarseEstimate {
  ChannelParams eta;
  cplx alpha_los{0, 0};
  VecC beta_ris;  // per-transmission reflected-path amplitude
  struct Diagnostics {
    double cp_residual = 0.0;
    bool cp_converged = false;
    double pairing_residual = 0.0;
    double pairing_residual_rejected = inf;
    bool ris_path_reliable = true;
    /// true when the reflected component was re-estimated from the
    /// direct-path-subtracted residuals (weak coherent profile sum)
    bool reflected_refreshed = false;
  } diagnostics;
};

namespace detail {

/// Maps an eigenphase in (-pi, pi] to the delay frequency branch (-2pi, 0].
inline double delay_branch(double phase) { return phase > 0 ? phase - 2.0 * pi : phase; }

inline AnglePair angles_from_frequencies(double w_axis1, double w_axis2, double kappa_spacing) {
  AnglePair a;
  a.el = std::asin(std::clamp(w_axis2 / kappa_spacing, -1.0, 1.0));
  const double ce = std::cos(a.el);
  a.az = ce < 1e-9 ? 0.0 : std::asin(std::clamp(w_axis1 / (kappa_spacing * ce), -1.0, 1.0));
  return a;
}

}  // namespace detail

namespace detail {

/// frequency triple of one propagation path (delay / two spatial modes)
struct ComponentFreqs {
  double w_tau = 0.0;  // in (-2pi, 0]
  double w_b1 = 0.0;
  double w_b2 = 0.0;
};

}  // namespace detail

/// Tensor-based coarse estimator: recovers all eight localization-related
/// channel parameters plus the direct-path gain and the per-transmission
/// reflected amplitudes from one probing block.
///
/// The reflected component of the summed tensor carries the coherent sum of
/// the per-transmission profile amplitudes, which can nearly cancel for
/// unlucky profile draws. When the residual-selection test prefers it, the
/// reflected component is re-estimated from the direct-path-subtracted
/// per-transmission residuals (a rank-one structure across transmissions
/// that is immune to that cancellation); the choice is recorded in the
/// diagnostics.
inline CoarseEstimate coarse_estimate(const ObservationSet& obs, const ScenarioConfig& cfg) {
  const int big_k = obs.num_subcarriers;
  const int m = obs.ports;
  const int big_g = static_cast<int>(obs.y.cols());
  const int n1 = static_cast<int>(obs.t1.cols());
  const int n2 = static_cast<int>(obs.t2.cols());
  const double kappa_b = 2.0 * pi * cfg.fc * cfg.bs_array.spacing / cfg.c;
  const double kappa_r = 2.0 * pi * cfg.fc * cfg.ris_array.spacing / cfg.c;
  const double df = cfg.subcarrier_spacing();
  const auto nan = std::numeric_limits<double>::quiet_NaN();

  // beamspace channel estimates: remove the pilots, then sum over bursts
  MatC h_hat(big_k * m, big_g);
  for (int g = 0; g < big_g; ++g)
    for (int k = 0; k < big_k; ++k) {
      const cplx x = obs.pilots(g, k);
      h_hat.col(g).segment(k * m, m) =
          obs.y.col(g).segment(k * m, m) * std::conj(x) / std::norm(x);
    }
  const VecC h_sum = h_hat.rowwise().sum();

  auto fold_vector = [&](const VecC& v) {
    ComplexTensor3 t(big_k, n1, n2);
    for (int k = 0; k < big_k; ++k)
      for (int p1 = 0; p1 < n1; ++p1)
        for (int p2 = 0; p2 < n2; ++p2) t(k, p1, p2) = v[k * m + p1 * n2 + p2];
    return t;
  };
  const ComplexTensor3 tensor = fold_vector(h_sum);

  CpOptions cp_opts;
  cp_opts.seed = derive_seed(cfg.seed, {0xc9de});
  CpResult cp = cp_decompose(tensor, 2, cp_opts);

  CoarseEstimate out;
  out.beta_ris = VecC::Zero(big_g);
  out.diagnostics.cp_residual = cp.rel_residual;
  out.diagnostics.cp_converged = cp.converged;

  const BeamspaceRestore restore1 = beamspace_restore(obs.t1);
  const BeamspaceRestore restore2 = beamspace_restore(obs.t2);
  const SelectionPair sel_k = SelectionPair::for_dim(big_k);

  // beamspace model vector of one frequency triple
  auto model_vector = [&](const detail::ComponentFreqs& f) {
    return VecC(kron(ula_response(big_k, f.w_tau),
                     kron(obs.t1.adjoint() * ula_response(cfg.bs_array.n1, f.w_b1),
                          obs.t2.adjoint() * ula_response(cfg.bs_array.n2, f.w_b2))));
  };
  auto rank1_freqs = [&](const CpFactors& f) {
    detail::ComponentFreqs c;
    c.w_tau = detail::delay_branch(theta_frequencies(element_space_theta(f.u1, sel_k))[0]);
    c.w_b1 = theta_frequencies(beamspace_theta(f.u2, restore1))[0];
    c.w_b2 = theta_frequencies(beamspace_theta(f.u3, restore2))[0];
    return c;
  };

  const bool rank_collapsed =
      cp.degenerate || std::abs(cp.factors.weights[1]) < 1e-8 * std::abs(cp.factors.weights[0]);

  detail::ComponentFreqs direct, reflected;
  bool have_reflected = false;

  if (!rank_collapsed) {
    // mode-wise frequency sets from the rank-2 factors
    const auto w_tau_set = theta_frequencies(element_space_theta(cp.factors.u1, sel_k));
    const auto w_b1_set = theta_frequencies(beamspace_theta(cp.factors.u2, restore1));
    const auto w_b2_set = theta_frequencies(beamspace_theta(cp.factors.u3, restore2));

    // cross-mode pairing: try the four mode-2/mode-3 assignments against the
    // summed beamspace channel and keep the lowest-residual combination
    const std::array<double, 2> w_tau{detail::delay_branch(w_tau_set[0]),
                                      detail::delay_branch(w_tau_set[1])};
    double best_res = inf, second_res = inf;
    std::array<int, 2> best_p1{0, 1}, best_p2{0, 1};
    Eigen::Vector2d best_energy = Eigen::Vector2d::Zero();
    for (int s1 = 0; s1 < 2; ++s1)
      for (int s2 = 0; s2 < 2; ++s2) {
        const std::array<int, 2> p1 = s1 ? std::array<int, 2>{1, 0} : std::array<int, 2>{0, 1};
        const std::array<int, 2> p2 = s2 ? std::array<int, 2>{1, 0} : std::array<int, 2>{0, 1};
        MatC basis(big_k * m, 2);
        for (int r = 0; r < 2; ++r) {
          const auto rr = static_cast<std::size_t>(r);
          basis.col(r) = model_vector({w_tau[rr],
                                       w_b1_set[static_cast<std::size_t>(p1[rr])],
                                       w_b2_set[static_cast<std::size_t>(p2[rr])]});
        }
        const VecC coef = basis.colPivHouseholderQr().solve(h_sum);
        const double res = (h_sum - basis * coef).norm();
        if (res < best_res) {
          second_res = best_res;
          best_res = res;
          best_p1 = p1;
          best_p2 = p2;
          for (int r = 0; r < 2; ++r)
            best_energy[r] = std::norm(coef[r]) * basis.col(r).squaredNorm();
        } else if (res < second_res) {
          second_res = res;
        }
      }
    out.diagnostics.pairing_residual = best_res;
    out.diagnostics.pairing_residual_rejected = second_res;

    auto freqs_of = [&](int comp) {
      const auto cc = static_cast<std::size_t>(comp);
      return detail::ComponentFreqs{w_tau[cc],
                                    w_b1_set[static_cast<std::size_t>(best_p1[cc])],
                                    w_b2_set[static_cast<std::size_t>(best_p2[cc])]};
    };
    // physical identity: the direct path arrives first -- unless the earlier
    // component carries negligible energy, in which case it is a noise
    // artifact and only the strong component is a path
    const int early = w_tau[0] >= w_tau[1] ? 0 : 1;  // larger w_tau = smaller delay
    const int late = 1 - early;
    if (best_energy[early] >= 0.0025 * best_energy[late]) {
      direct = freqs_of(early);
      reflected = freqs_of(late);
      have_reflected = true;
    } else {
      direct = freqs_of(late);
    }
  } else {
    // summed tensor is effectively rank one: take it as the direct path
    const CpResult cp1 = cp_decompose(tensor, 1, cp_opts);
    direct = rank1_freqs(cp1.factors);
  }

  // refresh candidates for the reflected component: project the estimated
  // direct path out of every transmission and factor the residual block; the
  // reflected signature rides one of the leading left singular vectors
  std::vector<detail::ComponentFreqs> refresh_candidates;
  {
    const VecC direct_basis = model_vector(direct);
    MatC residuals = h_hat;
    const double dn = direct_basis.squaredNorm();
    for (int g = 0; g < big_g; ++g)
      residuals.col(g) -= direct_basis * (direct_basis.dot(residuals.col(g)) / dn);
    Eigen::JacobiSVD<MatC> rsvd(residuals, Eigen::ComputeThinU);
    const Eigen::Index scan = std::min<Eigen::Index>(3, rsvd.matrixU().cols());
    for (Eigen::Index i = 0; i < scan; ++i) {
      // skip directions at the numerical dust level of the block
      if (rsvd.singularValues()(i) < 1e-7 * h_hat.norm()) break;
      try {
        const CpResult cp1 = cp_decompose(fold_vector(rsvd.matrixU().col(i)), 1, cp_opts);
        refresh_candidates.push_back(rank1_freqs(cp1.factors));
      } catch (const numerical_degeneracy&) {
        // this direction had no usable harmonic structure
      }
    }
  }

  // model selection between the paired estimate and the refresh: total
  // two-column fit over all transmissions, gains free per transmission
  auto total_fit = [&](const detail::ComponentFreqs& r, double* out_res, MatC* out_basis,
                       Eigen::LDLT<MatC>* out_ldlt) {
    MatC basis(big_k * m, 2);
    basis.col(0) = model_vector(direct);
    basis.col(1) = model_vector(r);
    const MatC gram = basis.adjoint() * basis;
    // a reflected column that duplicates the direct one is a split of the
    // strong direct path, not a physical second path
    const double corr_sq =
        std::norm(gram(0, 1)) / (std::real(gram(0, 0)) * std::real(gram(1, 1)));
    if (corr_sq > 0.98 * 0.98 ||
        std::abs(gram.determinant()) < 1e-12 * std::norm(gram(0, 0))) {
      *out_res = inf;
      return;
    }
    Eigen::LDLT<MatC> ldlt(gram);
    double res = 0.0;
    for (int g = 0; g < big_g; ++g) {
      const Eigen::Vector2cd sol = ldlt.solve(basis.adjoint() * h_hat.col(g));
      res += (h_hat.col(g) - basis * sol).squaredNorm();
    }
    *out_res = res;
    if (out_basis) *out_basis = basis;
    if (out_ldlt) *out_ldlt = ldlt;
  };

  double res_paired = inf;
  if (have_reflected) total_fit(reflected, &res_paired, nullptr, nullptr);
  // a refresh candidate replaces the paired estimate only on a clear fit win;
  // competing refresh candidates are compared at full strength
  double selected_res = res_paired;
  for (const auto& cand : refresh_candidates) {
    // the reflected path is physically longer than the direct one
    if (!(cand.w_tau < direct.w_tau)) continue;
    double res = inf;
    total_fit(cand, &res, nullptr, nullptr);
    const double margin = out.diagnostics.reflected_refreshed ? 1.0 : 0.67;
    if (res < margin * selected_res || (!have_reflected && res < selected_res)) {
      reflected = cand;
      selected_res = res;
      have_reflected = true;
      out.diagnostics.reflected_refreshed = true;
    }
  }

  auto direct_only_result = [&]() {
    out.eta.tau_los = -direct.w_tau / (2.0 * pi * df);
    out.eta.aoa_los = detail::angles_from_frequencies(direct.w_b1, direct.w_b2, kappa_b);
    out.eta.tau_ris = nan;
    out.eta.aoa_ris = {nan, nan};
    out.eta.dirsum_y = nan;
    out.eta.dirsum_z = nan;
    out.diagnostics.ris_path_reliable = false;
    const VecC basis = model_vector(direct);
    cplx acc{0, 0};
    for (int g = 0; g < big_g; ++g) acc += basis.dot(h_hat.col(g)) / basis.squaredNorm();
    out.alpha_los = acc / double(big_g);
    return out;
  };

  // no usable reflected component found
  if (!have_reflected || !std::isfinite(selected_res)) return direct_only_result();

  out.eta.tau_los = -direct.w_tau / (2.0 * pi * df);
  out.eta.aoa_los = detail::angles_from_frequencies(direct.w_b1, direct.w_b2, kappa_b);
  out.eta.tau_ris = -reflected.w_tau / (2.0 * pi * df);
  out.eta.aoa_ris = detail::angles_from_frequencies(reflected.w_b1, reflected.w_b2, kappa_b);

  // joint LS for the direct gain and per-transmission reflected amplitudes
  double final_res = inf;
  MatC basis;
  Eigen::LDLT<MatC> gram_ldlt;
  total_fit(reflected, &final_res, &basis, &gram_ldlt);
  if (!std::isfinite(final_res))
    throw numerical_degeneracy("coarse_estimate: direct/reflected bases collinear");
  cplx alpha_acc{0, 0};
  for (int g = 0; g < big_g; ++g) {
    const Eigen::Vector2cd sol = gram_ldlt.solve(basis.adjoint() * h_hat.col(g));
    alpha_acc += sol[0];
    out.beta_ris[g] = sol[1];
  }
  out.alpha_los = alpha_acc / double(big_g);

  // reflected-amplitude significance: both candidate sources adapt to the
  // data, so the captured energy must clear the top edge of what a pure
  // noise block can place in any single direction
  {
    const MatC gram_inv = gram_ldlt.solve(MatC::Identity(2, 2));
    const double dof = std::max(1.0, double(big_g) * (big_k * m - 2));
    const double noise_var = final_res / dof;
    const double beta_var = noise_var * std::real(gram_inv(1, 1));
    const double adaptive_edge =
        std::pow(std::sqrt(double(big_k) * m) + std::sqrt(double(big_g)), 2);
    const double threshold = std::max(9.0 * big_g, 1.2 * adaptive_edge) * beta_var;
    if (out.beta_ris.squaredNorm() < threshold) {
      out.diagnostics.ris_path_reliable = false;
      out.eta.dirsum_y = nan;
      out.eta.dirsum_z = nan;
      return out;
    }
  }

  // reflected amplitudes form a rank-one sqrt(G) x sqrt(G) matrix whose
  // factors live in the conjugated profile beamspaces
  const int rg = cfg.sqrt_g();
  MatC s_mat(rg, rg);
  for (int g1 = 0; g1 < rg; ++g1)
    for (int g2 = 0; g2 < rg; ++g2) s_mat(g1, g2) = out.beta_ris[g1 * rg + g2];
  Eigen::JacobiSVD<MatC> svd(s_mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const MatC u_col = svd.matrixU().col(0);
  const MatC v_col = svd.matrixV().col(0).conjugate();
  const BeamspaceRestore restore3 = beamspace_restore(obs.profiles.t3.conjugate());
  const BeamspaceRestore restore4 = beamspace_restore(obs.profiles.t4.conjugate());
  const double w_th2 = theta_frequencies(beamspace_theta(u_col, restore3))[0];
  const double w_th3 = theta_frequencies(beamspace_theta(v_col, restore4))[0];
  out.eta.dirsum_y = w_th2 / kappa_r;
  out.eta.dirsum_z = w_th3 / kappa_r;
  return out;
}

}  // namespace jrcup

#endif  // JRCUP_ESPRIT_HPP
