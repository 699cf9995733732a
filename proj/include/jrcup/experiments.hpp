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
// Monte-Carlo experiment driver: two-stage pipeline trials, RMSE-vs-SNR and
// refinement sweeps, multipath and mutual-coupling studies, active/passive
// power comparisons and blind-area maps with prior-information and
// multi-anchor variants. One master seed makes every output byte-identical
// for any thread count: per-trial seeds derive from (master, point, trial)
// and aggregation runs in fixed index order.

#ifndef JRCUP_EXPERIMENTS_HPP
#define JRCUP_EXPERIMENTS_HPP

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "jrcup/crlb.hpp"
#include "jrcup/esprit.hpp"
#include "jrcup/localize.hpp"
#include "jrcup/parallel.hpp"
#include "jrcup/refine.hpp"

namespace jrcup {

// ---------------------------------------------------------------------------
// result tables
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct ResultRow {
  double sweep = 0.0;
  std::string metric;
  double value = 0.0;
  long trials = 0;
  double ci_half_width = 0.0;
};

struct ResultTable {
  std::string sweep_name;
  std::vector<std::string> meta;  // "key=value" lines recorded in the header
  std::vector<ResultRow> rows;

  std::string to_csv() const {
    std::ostringstream out;
    out << "# jrcup-csv v1\n";
    for (const auto& m : meta) out << "# " << m << "\n";
    out << sweep_name << ",metric,value,trials,ci_half_width\n";
    for (const auto& r : rows)
      out << format_number(r.sweep) << ',' << r.metric << ',' << format_number(r.value) << ','
          << r.trials << ',' << format_number(r.ci_half_width) << '\n';
    return out.str();
  }
};

/// RMSE over squared errors with a delta-method 95% half-width.
class RmseAccumulator {
 public:
  void add(double squared_error) {
    ++n_;
    sum_ += squared_error;
    sum2_ += squared_error * squared_error;
  }
  long count() const { return n_; }
  double rmse() const { return n_ > 0 ? std::sqrt(sum_ / n_) : std::numeric_limits<double>::quiet_NaN(); }
  double ci_half_width() const {
    if (n_ < 2) return 0.0;
    const double mean = sum_ / n_;
    const double var = std::max(0.0, (sum2_ - n_ * mean * mean) / (n_ - 1));
    const double r = rmse();
    return r > 0 ? 1.96 * std::sqrt(var / n_) / (2.0 * r) : 0.0;
  }

 private:
  long n_ = 0;
  double sum_ = 0.0, sum2_ = 0.0;
};

// ---------------------------------------------------------------------------
// scenario realization and single trials
// ---------------------------------------------------------------------------

/// One drawn instance of a scenario: gains, amplification, probing design and
/// the LOS synthesis context, shared by all trials of an experiment point.
struct ScenarioRealization {
  ScenarioConfig cfg;
  LosGains gains;
  double amplification = 1.0;
  ProbeDesign design;
  SynthContext los_context;
  MatC noise_free;  // (K*M) x G means of the LOS model
  double nominal_snr_db = 0.0;
};

inline ScenarioRealization realize_scenario(const ScenarioConfig& cfg, std::uint64_t master_seed,
                                            const MatC* scattering = nullptr) {
  ScenarioRealization r;
  r.cfg = cfg;
  Rng rng = make_rng(master_seed, {0x6a15});
  r.gains = make_los_gains(cfg, cfg.truth, rng);
  const double p_in = cfg.p_tx * std::norm(r.gains.ue_ris);
  r.amplification = amplification_factor(cfg.p_ris, cfg.ris_array.size(), p_in, cfg.sigmar_sq);
  r.design = generate_pilots_and_profiles(cfg, r.amplification, master_seed);
  r.los_context = make_synth_context(cfg, cfg.truth, r.gains, r.design, nullptr, scattering);
  r.noise_free = synthesize_observations(r.los_context, 0.0, 0).noise_free;
  r.nominal_snr_db = received_snr_db(r.los_context, r.noise_free, 1.0);
  return r;
}

inline double scale_for_target_snr(const ScenarioRealization& r, double target_snr_db) {
  return noise_scale_for_snr(r.los_context, r.noise_free, target_snr_db);
}

/// Channel-parameter and localization bounds of a realization at one noise
/// scale, with the intermediate FIMs retained.
struct BoundsReport {
  double noise_scale = 1.0;
  FimMatrix fim_eta_ch;  // 12x12
  FimMatrix fim_eta;     // 8x8
  FimMatrix fim_xi;      // 8x8
  double eb_p_ue = 0.0, eb_p_ris = 0.0, eb_ris_yaw_rad = 0.0, eb_clock_bias_m = 0.0;
  double eb_aoa_los_rad = 0.0, eb_aoa_ris_rad = 0.0;
  double eb_delay_los_m = 0.0, eb_delay_ris_m = 0.0, eb_dirsum = 0.0;
};

inline BoundsReport compute_bounds(const ScenarioRealization& r, double noise_scale,
                                   const MatC* scattering = nullptr) {
  BoundsReport b;
  b.noise_scale = noise_scale;
  const FimContext ctx = FimContext::make(r.cfg, r.cfg.truth, r.gains, r.design, scattering);
  b.fim_eta_ch = fim_channel(true_channel_params(r.cfg, r.cfg.truth, r.gains), ctx, noise_scale);
  b.fim_eta = efim_localization_channel(b.fim_eta_ch);
  b.fim_xi = fim_localization(b.fim_eta, r.cfg.truth, r.cfg.bs_pose);
  b.eb_p_ue = eb_position_ue(b.fim_xi);
  b.eb_p_ris = eb_position_ris(b.fim_xi);
  b.eb_ris_yaw_rad = eb_ris_yaw(b.fim_xi);
  b.eb_clock_bias_m = eb_clock_bias(b.fim_xi);
  b.eb_aoa_los_rad = eb_aoa_los(b.fim_eta);
  b.eb_aoa_ris_rad = eb_aoa_ris(b.fim_eta);
  b.eb_delay_los_m = eb_delay_los(b.fim_eta);
  b.eb_delay_ris_m = eb_delay_ris(b.fim_eta);
  b.eb_dirsum = eb_dirsums(b.fim_eta);
  return b;
}

struct TrialOptions {
  double noise_scale = 1.0;
  int multipath_per_channel = 0;
  Vec3 multipath_box_lo{-5.0, -5.0, 0.0};
  Vec3 multipath_box_hi{5.0, 5.0, 5.0};
  double multipath_rcs = 0.5;  // [m^2]
  const MatC* scattering = nullptr;
  RefineOptions refine;
  SearchConfig search;  // bias_max = 0 -> use default_search(cfg)
};

struct TrialResult {
  bool coarse_ok = false, refine_ok = false, localize_ok = false;
  CoarseEstimate coarse;
  RefineResult refined;
  GridSearchResult localization;
  std::string failure;
};

/// Runs the full two-stage pipeline on one synthesized observation block.
/// Deterministic under (realization, seed); stage failures are recorded, not
/// rethrown.
inline TrialResult run_trial(const ScenarioRealization& r, const TrialOptions& opts,
                             std::uint64_t seed) {
  TrialResult out;
  const ScenarioConfig& cfg = r.cfg;
  try {
    const SynthContext* ctx = &r.los_context;
    SynthContext mp_ctx;
    if (opts.multipath_per_channel > 0) {
      Rng rng = make_rng(seed, {0x3b5d});
      const MultipathSet mp = sample_multipath(opts.multipath_per_channel, opts.multipath_box_lo,
                                               opts.multipath_box_hi, opts.multipath_rcs, rng);
      mp_ctx = make_synth_context(cfg, cfg.truth, r.gains, r.design, &mp, opts.scattering);
      ctx = &mp_ctx;
    } else if (opts.scattering != nullptr) {
      mp_ctx = make_synth_context(cfg, cfg.truth, r.gains, r.design, nullptr, opts.scattering);
      ctx = &mp_ctx;
    }
    const ObservationSet obs = synthesize_observations(*ctx, opts.noise_scale, seed);

    out.coarse = coarse_estimate(obs, cfg);
    out.coarse_ok = out.coarse.diagnostics.ris_path_reliable;
    if (!out.coarse_ok) {
      out.failure = "coarse: reflected path unreliable";
      return out;
    }

    const TwoPathSignalModel model = TwoPathSignalModel::make(cfg, obs);
    const VecC y = model.stack_observations(obs.y);
    out.refined = ls_refine(out.coarse.eta, model, y, opts.refine);
    out.refine_ok = true;

    const SearchConfig search =
        opts.search.bias_max > 0.0 ? opts.search : default_search(cfg);
    out.localization =
        grid_search(out.refined.eta, search, cfg.bs_pose, cfg.truth.fixed_o1_o2, cfg.c);
    out.localize_ok = true;
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// error bookkeeping
// ---------------------------------------------------------------------------

namespace detail {

inline double sq(double x) { return x * x; }

inline double angle_pair_sq_error(const AnglePair& est, const AnglePair& truth) {
  return sq(wrap_angle(est.az - truth.az)) + sq(wrap_angle(est.el - truth.el));
}

struct TrialErrors {
  bool coarse_ok = false, refine_ok = false, localize_ok = false;
  double coarse_aoa_los = 0, coarse_aoa_ris = 0, coarse_delay_los = 0, coarse_delay_ris = 0,
         coarse_dirsum = 0;
  double aoa_los = 0, aoa_ris = 0, delay_los = 0, delay_ris = 0, dirsum = 0;
  std::vector<double> p_ue, p_ris, yaw, bias;  // per refinement round, squared
};

inline TrialErrors measure_trial(const TrialResult& t, const ScenarioConfig& cfg) {
  TrialErrors e;
  const ChannelParams truth_eta = forward_map(cfg.truth, cfg.bs_pose, cfg.c);
  e.coarse_ok = t.coarse_ok;
  e.refine_ok = t.refine_ok;
  e.localize_ok = t.localize_ok;
  if (t.coarse_ok) {
    e.coarse_aoa_los = angle_pair_sq_error(t.coarse.eta.aoa_los, truth_eta.aoa_los);
    e.coarse_aoa_ris = angle_pair_sq_error(t.coarse.eta.aoa_ris, truth_eta.aoa_ris);
    e.coarse_delay_los = sq(cfg.c * (t.coarse.eta.tau_los - truth_eta.tau_los));
    e.coarse_delay_ris = sq(cfg.c * (t.coarse.eta.tau_ris - truth_eta.tau_ris));
    e.coarse_dirsum = sq(t.coarse.eta.dirsum_y - truth_eta.dirsum_y) +
                      sq(t.coarse.eta.dirsum_z - truth_eta.dirsum_z);
  }
  if (t.refine_ok) {
    e.aoa_los = angle_pair_sq_error(t.refined.eta.aoa_los, truth_eta.aoa_los);
    e.aoa_ris = angle_pair_sq_error(t.refined.eta.aoa_ris, truth_eta.aoa_ris);
    e.delay_los = sq(cfg.c * (t.refined.eta.tau_los - truth_eta.tau_los));
    e.delay_ris = sq(cfg.c * (t.refined.eta.tau_ris - truth_eta.tau_ris));
    e.dirsum = sq(t.refined.eta.dirsum_y - truth_eta.dirsum_y) +
               sq(t.refined.eta.dirsum_z - truth_eta.dirsum_z);
  }
  if (t.localize_ok) {
    for (const auto& w : t.localization.round_winners) {
      e.p_ue.push_back((w.p_ue - cfg.truth.p_ue).squaredNorm());
      e.p_ris.push_back((w.p_ris - cfg.truth.p_ris).squaredNorm());
      e.yaw.push_back(sq(wrap_angle(w.ris_yaw - cfg.truth.ris_yaw)));
      e.bias.push_back(sq(cfg.c * (w.clock_bias - cfg.truth.clock_bias)));
    }
  }
  return e;
}

inline void append_bounds_rows(ResultTable& table, double sweep, const BoundsReport& b) {
  auto put = [&](const std::string& name, double v) {
    table.rows.push_back({sweep, name, v, 0, 0.0});
  };
  put("eb_p_ue_m", b.eb_p_ue);
  put("eb_p_ris_m", b.eb_p_ris);
  put("eb_ris_yaw_deg", rad_to_deg(b.eb_ris_yaw_rad));
  put("eb_clock_bias_m", b.eb_clock_bias_m);
  put("eb_aoa_los_deg", rad_to_deg(b.eb_aoa_los_rad));
  put("eb_aoa_ris_deg", rad_to_deg(b.eb_aoa_ris_rad));
  put("eb_delay_los_m", b.eb_delay_los_m);
  put("eb_delay_ris_m", b.eb_delay_ris_m);
  put("eb_dirsum", b.eb_dirsum);
}

inline void append_rmse_rows(ResultTable& table, double sweep,
                             const std::vector<TrialErrors>& errors, int rounds) {
  std::map<std::string, RmseAccumulator> acc;
  long coarse_fail = 0, total_fail = 0;
  for (const auto& e : errors) {
    if (e.coarse_ok) {
      acc["rmse_coarse_aoa_los_deg"].add(e.coarse_aoa_los);
      acc["rmse_coarse_aoa_ris_deg"].add(e.coarse_aoa_ris);
      acc["rmse_coarse_delay_los_m"].add(e.coarse_delay_los);
      acc["rmse_coarse_delay_ris_m"].add(e.coarse_delay_ris);
      acc["rmse_coarse_dirsum"].add(e.coarse_dirsum);
    } else {
      ++coarse_fail;
    }
    if (e.refine_ok) {
      acc["rmse_aoa_los_deg"].add(e.aoa_los);
      acc["rmse_aoa_ris_deg"].add(e.aoa_ris);
      acc["rmse_delay_los_m"].add(e.delay_los);
      acc["rmse_delay_ris_m"].add(e.delay_ris);
      acc["rmse_dirsum"].add(e.dirsum);
    }
    if (e.localize_ok) {
      for (int q = 0; q <= rounds && q < static_cast<int>(e.p_ue.size()); ++q) {
        const std::string suffix = "_q" + std::to_string(q);
        acc["rmse_p_ue_m" + suffix].add(e.p_ue[static_cast<std::size_t>(q)]);
        acc["rmse_p_ris_m" + suffix].add(e.p_ris[static_cast<std::size_t>(q)]);
        acc["rmse_ris_yaw_deg" + suffix].add(e.yaw[static_cast<std::size_t>(q)]);
        acc["rmse_clock_bias_m" + suffix].add(e.bias[static_cast<std::size_t>(q)]);
      }
      acc["rmse_p_ue_m"].add(e.p_ue.back());
      acc["rmse_p_ris_m"].add(e.p_ris.back());
      acc["rmse_ris_yaw_deg"].add(e.yaw.back());
      acc["rmse_clock_bias_m"].add(e.bias.back());
    } else {
      ++total_fail;
    }
  }
  for (const auto& [name, a] : acc) {
    const bool degrees = name.find("_deg") != std::string::npos;
    const double scale = degrees ? rad_to_deg(1.0) : 1.0;
    table.rows.push_back({sweep, name, scale * a.rmse(), a.count(), scale * a.ci_half_width()});
  }
  table.rows.push_back({sweep, "failed_trials", double(total_fail), long(errors.size()), 0.0});
  table.rows.push_back({sweep, "coarse_failed_trials", double(coarse_fail), long(errors.size()), 0.0});
}

}  // namespace detail

// ---------------------------------------------------------------------------
// experiments
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  ScenarioConfig cfg;
  std::vector<double> sweep;  // axis values; meaning depends on the experiment
  int trials = 100;
  int rounds = 3;             // grid-search refinement rounds
  double snr_db = 30.0;       // fixed-SNR experiments
  std::uint64_t master_seed = 1;
  int threads = 0;            // 0 = auto (JRCUP_THREADS env or hardware)
  RefineOptions refine;
  // multipath experiment
  double multipath_rcs = 0.5;
  Vec3 multipath_box_lo{-5.0, -5.0, 0.0};
  Vec3 multipath_box_hi{5.0, 5.0, 5.0};
  // mutual-coupling experiment
  std::vector<double> coupling_ris_power_dbm{-20.0, -10.0, 0.0};
  double coupling_scale = 0.002;
};

namespace detail {

inline std::vector<TrialErrors> run_point_trials(const ScenarioRealization& real,
                                                 const TrialOptions& opts, int trials,
                                                 std::uint64_t master_seed, std::uint64_t point,
                                                 int threads) {
  std::vector<TrialErrors> errors(static_cast<std::size_t>(trials));
  parallel_for(trials, threads, [&](long t) {
    const std::uint64_t seed = derive_seed(master_seed, {point, static_cast<std::uint64_t>(t)});
    const TrialResult res = run_trial(real, opts, seed);
    errors[static_cast<std::size_t>(t)] = measure_trial(res, real.cfg);
  });
  return errors;
}

}  // namespace detail

/// RMSE of every channel and localization parameter versus received SNR,
/// with per-refinement-round localization columns and matching bounds.
inline ResultTable experiment_rmse_vs_snr(const ExperimentSpec& spec) {
  ResultTable table;
  table.sweep_name = "snr_db";
  table.meta = {"kind=rmse-vs-snr", "master_seed=" + std::to_string(spec.master_seed),
                "trials=" + std::to_string(spec.trials),
                "rounds=" + std::to_string(spec.rounds)};
  const ScenarioRealization real = realize_scenario(spec.cfg, spec.master_seed);
  for (std::size_t p = 0; p < spec.sweep.size(); ++p) {
    const double snr = spec.sweep[p];
    const double scale = scale_for_target_snr(real, snr);
    TrialOptions opts;
    opts.noise_scale = scale;
    opts.refine = spec.refine;
    opts.search = default_search(spec.cfg);
    opts.search.rounds = spec.rounds;
    const auto errors =
        detail::run_point_trials(real, opts, spec.trials, spec.master_seed, p, spec.threads);
    detail::append_rmse_rows(table, snr, errors, spec.rounds);
    detail::append_bounds_rows(table, snr, compute_bounds(real, scale));
  }
  return table;
}

/// Bound comparison of an amplifying RIS (supply = sweep value) against a
/// passive RIS given the same extra power budget at the transmitter.
inline ResultTable experiment_active_vs_passive(const ExperimentSpec& spec) {
  ResultTable table;
  table.sweep_name = "p_var_dbm";
  table.meta = {"kind=active-vs-passive", "master_seed=" + std::to_string(spec.master_seed)};

  // passive reference: no amplification, no RIS noise, baseline transmitter
  ScenarioConfig passive_cfg = spec.cfg;
  passive_cfg.p_ris = 0.0;
  passive_cfg.sigmar_sq = 0.0;
  const ScenarioRealization passive_base = realize_scenario(passive_cfg, spec.master_seed);
  const double eb_passive_base = compute_bounds(passive_base, 1.0).eb_p_ue;

  for (double p_var_dbm : spec.sweep) {
    const double p_var = dbm_to_watt(p_var_dbm);
    ScenarioConfig active_cfg = spec.cfg;
    active_cfg.p_ris = p_var;
    const ScenarioRealization active = realize_scenario(active_cfg, spec.master_seed);
    const double eb_active = compute_bounds(active, 1.0).eb_p_ue;
    // allocating the budget to the transmitter scales the bound with the
    // inverse of the total allocated power
    const double eb_passive = eb_passive_base * spec.cfg.p_tx / (spec.cfg.p_tx + p_var);
    table.rows.push_back({p_var_dbm, "eb_p_ue_active_m", eb_active, 0, 0.0});
    table.rows.push_back({p_var_dbm, "eb_p_ue_passive_m", eb_passive, 0, 0.0});
    table.rows.push_back({p_var_dbm, "amplification", active.amplification, 0, 0.0});
  }
  return table;
}

/// RMSE versus scatter-point count per channel segment at fixed received SNR.
/// Scatter layouts are redrawn every trial; the estimators stay two-path.
inline ResultTable experiment_multipath(const ExperimentSpec& spec) {
  ResultTable table;
  table.sweep_name = "scatterers_per_channel";
  table.meta = {"kind=multipath", "master_seed=" + std::to_string(spec.master_seed),
                "trials=" + std::to_string(spec.trials),
                "snr_db=" + format_number(spec.snr_db),
                "rcs_m2=" + format_number(spec.multipath_rcs)};
  const ScenarioRealization real = realize_scenario(spec.cfg, spec.master_seed);
  const double scale = scale_for_target_snr(real, spec.snr_db);
  const BoundsReport bounds = compute_bounds(real, scale);
  for (std::size_t p = 0; p < spec.sweep.size(); ++p) {
    TrialOptions opts;
    opts.noise_scale = scale;
    opts.refine = spec.refine;
    opts.search = default_search(spec.cfg);
    opts.search.rounds = spec.rounds;
    opts.multipath_per_channel = static_cast<int>(spec.sweep[p]);
    opts.multipath_rcs = spec.multipath_rcs;
    opts.multipath_box_lo = spec.multipath_box_lo;
    opts.multipath_box_hi = spec.multipath_box_hi;
    const auto errors =
        detail::run_point_trials(real, opts, spec.trials, spec.master_seed, p, spec.threads);
    detail::append_rmse_rows(table, spec.sweep[p], errors, spec.rounds);
    detail::append_bounds_rows(table, spec.sweep[p], bounds);
  }
  return table;
}

/// RMSE versus RIS element spacing (sweep values in wavelengths) with and
/// without mutual coupling in the synthesis, for several RIS supply levels.
/// Trials are seed-paired between the coupled and uncoupled arms, and the
/// noise scale is anchored on the coupling-free model.
inline ResultTable experiment_mutual_coupling(const ExperimentSpec& spec) {
  ResultTable table;
  table.sweep_name = "spacing_wavelengths";
  table.meta = {"kind=mutual-coupling", "master_seed=" + std::to_string(spec.master_seed),
                "trials=" + std::to_string(spec.trials),
                "snr_db=" + format_number(spec.snr_db),
                "coupling_scale=" + format_number(spec.coupling_scale)};
  for (std::size_t p = 0; p < spec.sweep.size(); ++p) {
    const double spacing_wl = spec.sweep[p];
    for (std::size_t q = 0; q < spec.coupling_ris_power_dbm.size(); ++q) {
      ScenarioConfig cfg = spec.cfg;
      cfg.ris_array.spacing = spacing_wl * cfg.wavelength();
      cfg.p_ris = dbm_to_watt(spec.coupling_ris_power_dbm[q]);
      const ScenarioRealization real = realize_scenario(cfg, spec.master_seed);
      const double scale = scale_for_target_snr(real, spec.snr_db);
      const MatC scattering =
          toy_scattering_matrix(cfg.ris_array, cfg.wavelength(), spec.coupling_scale);

      TrialOptions base;
      base.noise_scale = scale;
      base.refine = spec.refine;
      base.search = default_search(cfg);
      base.search.rounds = spec.rounds;
      TrialOptions coupled = base;
      coupled.scattering = &scattering;

      const std::uint64_t point = p * 1000 + q;
      const auto err_free =
          detail::run_point_trials(real, base, spec.trials, spec.master_seed, point, spec.threads);
      const auto err_mc = detail::run_point_trials(real, coupled, spec.trials, spec.master_seed,
                                                   point, spec.threads);
      auto rmse_p_ue = [](const std::vector<detail::TrialErrors>& errs) {
        RmseAccumulator a;
        for (const auto& e : errs)
          if (e.localize_ok) a.add(e.p_ue.back());
        return a;
      };
      const auto a0 = rmse_p_ue(err_free);
      const auto a1 = rmse_p_ue(err_mc);
      const std::string tag = "_pris" + format_number(spec.coupling_ris_power_dbm[q]) + "dbm";
      table.rows.push_back({spacing_wl, "rmse_p_ue_m_without_mc" + tag, a0.rmse(), a0.count(),
                            a0.ci_half_width()});
      table.rows.push_back(
          {spacing_wl, "rmse_p_ue_m_with_mc" + tag, a1.rmse(), a1.count(), a1.ci_half_width()});
      table.rows.push_back({spacing_wl, "eb_p_ue_m" + tag, compute_bounds(real, scale).eb_p_ue, 0,
                            0.0});
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// blind-area maps
// ---------------------------------------------------------------------------

enum class BlindMapVariant { baseline, known_yaw, known_bias, two_bs, three_bs };

inline const char* to_string(BlindMapVariant v) {
  switch (v) {
    case BlindMapVariant::baseline: return "baseline";
    case BlindMapVariant::known_yaw: return "known-yaw";
    case BlindMapVariant::known_bias: return "known-bias";
    case BlindMapVariant::two_bs: return "two-bs";
    case BlindMapVariant::three_bs: return "three-bs";
  }
  return "?";
}

inline std::optional<BlindMapVariant> blind_map_variant_from_string(const std::string& s) {
  for (auto v : {BlindMapVariant::baseline, BlindMapVariant::known_yaw,
                 BlindMapVariant::known_bias, BlindMapVariant::two_bs, BlindMapVariant::three_bs})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

struct BlindMapSpec {
  ScenarioConfig cfg;
  BlindMapVariant variant = BlindMapVariant::baseline;
  int grid_n = 50;
  double x_min = -5.0, x_max = 5.0, y_min = -5.0, y_max = 5.0;
  double ue_height = 1.0;
  double noise_scale = 1.0;
  double blind_threshold = 1.0;  // [m] EB above this counts as blind
  double cap = 1e6;              // [m] reported in place of near-singular cells
  std::uint64_t master_seed = 1;
  int threads = 0;
  /// poses of the additional anchors used by the two-bs / three-bs variants
  std::vector<Pose> extra_bs{Pose{Vec3(0, -5, 3), Vec3(0, 0, pi / 2)},
                             Pose{Vec3(5, 0, 3), Vec3(0, 0, pi)}};
};

struct BlindMapResult {
  std::vector<double> xs, ys;
  Mat eb;           // (y index, x index), +inf already capped
  double blind_fraction = 0.0;
  double dynamic_range = 0.0;  // max/min over the capped map
  double p5 = 0.0, p50 = 0.0, p95 = 0.0;

  std::string to_csv() const {
    std::ostringstream out;
    out << "# jrcup-csv v1\n";
    out << "# blind_fraction=" << format_number(blind_fraction)
        << "; dynamic_range=" << format_number(dynamic_range) << "; p95=" << format_number(p95)
        << "\n";
    out << "x_m,y_m,eb_p_ue_m\n";
    for (Eigen::Index r = 0; r < eb.rows(); ++r)
      for (Eigen::Index c = 0; c < eb.cols(); ++c)
        out << format_number(xs[static_cast<std::size_t>(c)]) << ','
            << format_number(ys[static_cast<std::size_t>(r)]) << ','
            << format_number(eb(r, c)) << '\n';
    return out.str();
  }
};

/// EB(p_ue) of one UE position for the requested variant. Extra anchors share
/// the RIS profile sequence and pilots; their combiners are drawn separately.
inline double blind_map_cell_eb(const BlindMapSpec& spec, const Vec3& ue,
                                std::uint64_t cell_seed) {
  LocalizationState state = spec.cfg.truth;
  state.p_ue = ue;

  int n_bs = 1;
  if (spec.variant == BlindMapVariant::two_bs) n_bs = 2;
  if (spec.variant == BlindMapVariant::three_bs) n_bs = 3;

  std::vector<FimMatrix> parts;
  std::optional<RisProfileSet> shared_profiles;
  for (int b = 0; b < n_bs; ++b) {
    ScenarioConfig cfg = spec.cfg;
    if (b > 0) cfg.bs_pose = spec.extra_bs[static_cast<std::size_t>(b - 1)];
    Rng rng = make_rng(cell_seed, {0x91f0, static_cast<std::uint64_t>(b)});
    const LosGains gains = make_los_gains(cfg, state, rng);
    const double p_in = cfg.p_tx * std::norm(gains.ue_ris);
    const double amp = amplification_factor(cfg.p_ris, cfg.ris_array.size(), p_in, cfg.sigmar_sq);
    ProbeDesign design = generate_pilots_and_profiles(
        cfg, amp, derive_seed(spec.master_seed, {static_cast<std::uint64_t>(b)}));
    if (b == 0)
      shared_profiles = design.profiles;
    else
      design.profiles = *shared_profiles;  // one physical RIS drives every anchor

    const FimContext ctx = FimContext::make(cfg, state, gains, design);
    const FimMatrix j_ch =
        fim_channel(true_channel_params(cfg, state, gains), ctx, spec.noise_scale);
    const FimMatrix j_eta = efim_localization_channel(j_ch);
    if (spec.variant == BlindMapVariant::known_yaw)
      parts.push_back(fim_with_priors(j_eta, state, cfg.bs_pose, true, false));
    else if (spec.variant == BlindMapVariant::known_bias)
      parts.push_back(fim_with_priors(j_eta, state, cfg.bs_pose, false, true));
    else
      parts.push_back(fim_localization(j_eta, state, cfg.bs_pose));
  }
  return error_bound(fim_multi_bs(parts), {"ue_x", "ue_y", "ue_z"});
}

inline BlindMapResult experiment_blind_map(const BlindMapSpec& spec) {
  BlindMapResult out;
  const int n = spec.grid_n;
  out.xs.resize(static_cast<std::size_t>(n));
  out.ys.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.xs[static_cast<std::size_t>(i)] = spec.x_min + (i + 0.5) * (spec.x_max - spec.x_min) / n;
    out.ys[static_cast<std::size_t>(i)] = spec.y_min + (i + 0.5) * (spec.y_max - spec.y_min) / n;
  }
  out.eb.resize(n, n);
  parallel_for(static_cast<long>(n) * n, spec.threads, [&](long cell) {
    const int r = static_cast<int>(cell / n), c = static_cast<int>(cell % n);
    const Vec3 ue(out.xs[static_cast<std::size_t>(c)], out.ys[static_cast<std::size_t>(r)],
                  spec.ue_height);
    double eb;
    try {
      eb = blind_map_cell_eb(spec, ue, derive_seed(spec.master_seed, {static_cast<std::uint64_t>(cell)}));
    } catch (const std::exception&) {
      eb = inf;
    }
    out.eb(r, c) = std::min(eb, spec.cap);
  });

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n) * n);
  long blind = 0;
  double lo = inf, hi = 0.0;
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      const double v = out.eb(r, c);
      values.push_back(v);
      if (v > spec.blind_threshold) ++blind;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  std::sort(values.begin(), values.end());
  auto pct = [&](double q) {
    const auto idx = static_cast<std::size_t>(q * (values.size() - 1));
    return values[idx];
  };
  out.blind_fraction = double(blind) / double(values.size());
  out.dynamic_range = hi / lo;
  out.p5 = pct(0.05);
  out.p50 = pct(0.50);
  out.p95 = pct(0.95);
  return out;
}

}  // namespace jrcup

#endif  // JRCUP_EXPERIMENTS_HPP
