#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pemfreq/aggregator.hpp"
#include "pemfreq/fleet.hpp"
#include "pemfreq/grid.hpp"
#include "pemfreq/scenario.hpp"

namespace pemfreq {

struct StepRecord {
  double t_s = 0.0;
  std::vector<double> df_hz;   // per area
  std::vector<double> gen_mw;  // per area
  double p_pem_mw = 0.0;       // fleet accounting power
  double eta = 0.0;
  std::int64_t n_on = 0;  // consuming packets
  std::int64_t n_interrupted = 0;
  std::int64_t n_completed = 0;
  std::int64_t n_requests = 0;
  std::int64_t n_accepted = 0;
  double tie_flow_mw = 0.0;  // area 0 -> area 1 in the two-area layout
};

struct TimeSeries {
  double dt_s = 0.1;
  std::size_t n_areas = 0;
  std::vector<StepRecord> steps;  // steps[0] is the t=0 state
};

struct HistogramSnapshot {
  double t_s = 0.0;
  std::vector<std::int64_t> bins;
};

struct Metrics {
  double rocof_mhz_per_s = 0.0;  ///< mean slope over the ROCOF window
  double nadir_mhz = 0.0;        ///< extremal system deviation (signed)
  double f_inf_mhz = 0.0;        ///< mean over the final window (signed)
  double d_pem_est_mw_per_hz = 0.0;
  double d_pem_actual_mw_per_hz = 0.0;
  double estimation_error_pct = 0.0;
  double rmse_mhz = 0.0;  ///< vs the proportional comparison trace
  bool has_estimate = false;
  bool has_rmse = false;
  DampingRegime regime = DampingRegime::kDeadband;
};

struct WarmupStats {
  double xbar_nom = 0.0;           ///< mean bin count, frozen at event onset
  double p_pem_baseline_mw = 0.0;  ///< fleet power entering the event
  double mean_temp_c = 0.0;
  long steps = 0;
  AssumptionDiagnostics diagnostics;
};

/// Snapshot of the warmed-up fleet/aggregator pair; sweep rows reuse one
/// snapshot so paired runs differ only through post-event control.
struct WarmState {
  Fleet fleet;
  Aggregator aggregator;
  std::int64_t accepted_prev = 0;
  WarmupStats stats;
};

struct RunHooks {
  /// Called after each event step with the live fleet and aggregator.
  std::function<void(long step_index, const Fleet&, const Aggregator&)>
      on_event_step;
};

struct RunResult {
  TimeSeries series;
  Metrics metrics;
  DampingEstimate estimate;
  WarmupStats warmup;
  double df_nadir_fleet_hz = 0.0;  ///< nadir as sensed by the devices
  std::int64_t optout_activations = 0;
  std::vector<HistogramSnapshot> histogram_snapshots;
};

/// Run the warm-up phase (or the fast-forward initializer) and freeze the
/// nominal bin occupancy.
WarmState run_warmup(const Scenario& s);

/// Run the event horizon from a warm state. Metrics cover the event
/// window; the proportional comparison is computed when the estimate has
/// a nonzero damping.
RunResult run_event(const Scenario& s, const WarmState& warm,
                    const RunHooks* hooks = nullptr);

/// warm-up + event in one call.
RunResult run_scenario(const Scenario& s, const RunHooks* hooks = nullptr);

/// The same grid with the fleet replaced by a latched proportional load
/// of gain d_pem acting beyond the dead-band.
TimeSeries run_proportional_model(const Scenario& s, double d_pem_mw_per_hz);

/// ROCOF / nadir / steady-state deviation / RMSE between aligned traces.
/// `prop` may be null; est may be null when no fleet ran.
Metrics compute_metrics(const TimeSeries& full, const TimeSeries* prop,
                        const Scenario& s, const DampingEstimate* est);

/// Inertia-weighted system frequency deviation of one record.
double system_freq_dev_hz(const StepRecord& rec, const NetworkModel& net);

struct SweepRow {
  double eta_max = 0.0;
  Metrics metrics;
  DampingEstimate estimate;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  WarmupStats warmup;
  std::vector<RunResult> runs;              // one per eta_max
  std::vector<TimeSeries> proportional;     // empty series when unused
};

/// Paired eta_max sweep: one warm-up, identical seeds, per-row event runs
/// plus proportional comparison models.
SweepResult sweep(const Scenario& s, std::span<const double> eta_max_values);

/// Frozen column order:
/// t,df_area1_hz,df_area2_hz,dPg1_mw,dPg2_mw,p_pem_mw,eta,n_on,
/// n_interrupted,n_completed,n_requests,n_accepted,tie_flow_mw
std::string timeseries_csv(const TimeSeries& ts);

/// Long-format snapshot dump: t_s,bin,count (zero bins skipped).
std::string histogram_csv(std::span<const HistogramSnapshot> snaps);

}  // namespace pemfreq
