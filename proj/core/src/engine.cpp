#include "pemfreq/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

#include "pemfreq/errors.hpp"

namespace pemfreq {

namespace {

long steps_of(double seconds, double dt_s) {
  return std::lround(seconds / dt_s);
}

void append_num(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  out += buf;
}

double area_or_zero(const std::vector<double>& v, std::size_t i) {
  return i < v.size() ? v[i] : 0.0;
}

}  // namespace

double system_freq_dev_hz(const StepRecord& rec, const NetworkModel& net) {
  double m_sum = 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < net.size() && j < rec.df_hz.size(); ++j) {
    const double m = net.areas[j].inertia_mw_s_per_hz(net.f0_hz);
    m_sum += m;
    acc += m * rec.df_hz[j];
  }
  return m_sum > 0.0 ? acc / m_sum : 0.0;
}

WarmState run_warmup(const Scenario& s) {
  s.validate();
  const int n_p = s.fleet.n_p();
  const double dt = s.sim.dt_s;
  const double p_ref = s.p_ref_mw();

  WarmState warm{Fleet(s.fleet, s.policy, s.sim.seed),
                 Aggregator(n_p, s.fleet.packet_power_mw), 0, {}};
  warm.fleet.set_threads(s.sim.threads);

  if (s.sim.fast_init) {
    warm.fleet.init_uniform(p_ref);
    std::vector<std::int64_t> bins(static_cast<std::size_t>(n_p), 0);
    const auto timers = warm.fleet.timers();
    const auto modes = warm.fleet.modes();
    for (std::size_t i = 0; i < timers.size(); ++i) {
      if (static_cast<DeviceMode>(modes[i]) == DeviceMode::kOn &&
          timers[i] >= 1)
        ++bins[static_cast<std::size_t>(timers[i] - 1)];
    }
    warm.aggregator.histogram() = TimerHistogram::from_bins(bins);
    warm.stats.xbar_nom = warm.aggregator.xbar();
    warm.stats.p_pem_baseline_mw = warm.aggregator.pem_power_mw();
    warm.stats.mean_temp_c = warm.fleet.mean_temp_c();
    warm.stats.steps = 0;
    warm.stats.diagnostics =
        assumption_monitor(warm.aggregator.histogram(), {}, s.fleet.epoch_s);
    return warm;
  }

  const long n_steps = steps_of(s.sim.warmup_s, dt);
  const std::vector<double> df_zero(s.network.size(), 0.0);
  std::vector<double> xbar_tail;
  const long tail_start = std::max<long>(0, n_steps - n_p);
  xbar_tail.reserve(static_cast<std::size_t>(n_steps - tail_start));

  double xbar_sum = 0.0;
  long xbar_count = 0;
  for (long k = 0; k < n_steps; ++k) {
    warm.aggregator.advance(warm.accepted_prev, /*blocked=*/false, 0.0);
    const FleetStepResult res = warm.fleet.step(df_zero, k, true);
    warm.aggregator.remove_exits(res.optout_exit_timers, false, n_p + 1);
    // ramp the reference over the first epoch so the histogram fills one
    // bin layer at a time instead of synchronizing in bin 1
    const double ramp = std::min(1.0, static_cast<double>(k + 1) / n_p);
    const std::int64_t quota =
        accept_requests(res.requests, p_ref * ramp,
                        warm.aggregator.pem_power_mw(),
                        s.fleet.packet_power_mw);
    warm.accepted_prev = warm.fleet.commit_accepts(quota);
    if (k >= tail_start) {
      const double xb = warm.aggregator.xbar();
      xbar_tail.push_back(xb);
      xbar_sum += xb;
      ++xbar_count;
    }
  }

  warm.stats.steps = n_steps;
  warm.stats.xbar_nom =
      xbar_count > 0 ? xbar_sum / xbar_count : warm.aggregator.xbar();
  warm.stats.p_pem_baseline_mw = warm.aggregator.pem_power_mw();
  warm.stats.mean_temp_c = warm.fleet.mean_temp_c();
  warm.stats.diagnostics =
      assumption_monitor(warm.aggregator.histogram(), xbar_tail,
                         s.fleet.epoch_s);
  return warm;
}

TimeSeries run_proportional_model(const Scenario& s, double d_pem_mw_per_hz) {
  s.validate();
  const double dt = s.sim.dt_s;
  const long n_steps = steps_of(s.sim.horizon_s, dt);
  const long k0 = steps_of(s.disturbance.onset_s, dt);
  const std::size_t n_areas = s.network.size();

  GridState grid = GridState::zero(n_areas, dt);
  TimeSeries ts;
  ts.dt_s = dt;
  ts.n_areas = n_areas;
  ts.steps.reserve(static_cast<std::size_t>(n_steps + 1));

  StepRecord rec;
  rec.df_hz.assign(n_areas, 0.0);
  rec.gen_mw.assign(n_areas, 0.0);
  ts.steps.push_back(rec);

  std::vector<double> load(n_areas, 0.0);
  std::vector<double> pem(n_areas, 0.0);
  double latched_mw = 0.0;  // shed load never re-energizes inside an epoch
  const ControlPolicy& pol = s.policy;

  // same moving-average frequency estimator as the device fleet
  const long wm = std::max<long>(1, steps_of(s.sim.freq_meas_window_s, dt));
  std::vector<double> meas(static_cast<std::size_t>(wm), 0.0);
  std::size_t meas_pos = 0;

  for (long j = 1; j <= n_steps; ++j) {
    const bool active = (j - 1) >= k0 && s.disturbance.magnitude_mw != 0.0;
    std::fill(load.begin(), load.end(), 0.0);
    std::fill(pem.begin(), pem.end(), 0.0);
    if (active)
      load[static_cast<std::size_t>(s.disturbance.area)] =
          -s.disturbance.magnitude_mw;

    // sensed frequency at the fleet bus (one-step-lagged moving average)
    double meas_sum = 0.0;
    for (double v : meas) meas_sum += v;
    const double df_sens = meas_sum / static_cast<double>(wm);
    if (active && df_sens <= pol.deadband_hz) {
      const double target = d_pem_mw_per_hz * (df_sens - pol.deadband_hz);
      latched_mw = std::min(latched_mw, target);
    }
    if (active) pem[static_cast<std::size_t>(s.fleet.area)] = latched_mw;

    swing_turbine_step(grid, s.network, load, pem, s.sim.grid_substeps);
    meas[meas_pos] = grid.freq_hz[static_cast<std::size_t>(s.fleet.area)];
    meas_pos = (meas_pos + 1) % meas.size();

    rec = StepRecord();
    rec.t_s = static_cast<double>(j) * dt;
    rec.df_hz = grid.freq_hz;
    rec.gen_mw = grid.gen_mw;
    rec.p_pem_mw = latched_mw;
    const std::vector<double> flows = tie_line_flows(grid, s.network);
    rec.tie_flow_mw = n_areas > 1 ? -flows[0] : 0.0;
    ts.steps.push_back(std::move(rec));
  }
  return ts;
}

Metrics compute_metrics(const TimeSeries& full, const TimeSeries* prop,
                        const Scenario& s, const DampingEstimate* est) {
  Metrics m;
  if (full.steps.empty()) return m;
  const double dt = full.dt_s;
  const long k0 = steps_of(s.disturbance.onset_s, dt);
  const long last = static_cast<long>(full.steps.size()) - 1;

  // all frequency metrics are evaluated at the fleet bus, the
  // measurement point of the aggregator
  const auto fa = static_cast<std::size_t>(s.fleet.area);
  auto coi = [&](long j) {
    return full.steps[static_cast<std::size_t>(j)].df_hz[fa];
  };

  // ROCOF: secant slope over the window following the onset
  const long w = std::max<long>(1, steps_of(s.sim.rocof_window_s, dt));
  const long k1 = std::min(k0 + w, last);
  if (k1 > k0)
    m.rocof_mhz_per_s = (coi(k1) - coi(k0)) / ((k1 - k0) * dt) * 1e3;

  // nadir: extremal deviation after the onset
  double nadir = 0.0;
  for (long j = k0; j <= last; ++j)
    if (std::abs(coi(j)) > std::abs(nadir)) nadir = coi(j);
  m.nadir_mhz = nadir * 1e3;

  // steady-state deviation: mean over the trailing window
  const long wf = std::max<long>(1, steps_of(s.sim.f_inf_window_s, dt));
  const long f0 = std::max<long>(k0, last - wf + 1);
  double acc = 0.0;
  for (long j = f0; j <= last; ++j) acc += coi(j);
  const double f_inf_hz = acc / static_cast<double>(last - f0 + 1);
  m.f_inf_mhz = f_inf_hz * 1e3;

  if (est) {
    m.has_estimate = true;
    m.d_pem_est_mw_per_hz = est->d_pem_mw_per_hz;
    m.regime = est->regime;
    // the closed-form inversion assumes the symmetric two-area layout
    if (s.network.size() == 2 && f_inf_hz != 0.0 &&
        s.disturbance.magnitude_mw != 0.0) {
      const AreaParams& a = s.network.areas[0];
      m.d_pem_actual_mw_per_hz =
          actual_pem_damping(f_inf_hz, s.disturbance.magnitude_mw,
                             a.damping_mw_per_hz, a.droop_hz_per_mw);
      if (m.d_pem_actual_mw_per_hz != 0.0)
        m.estimation_error_pct =
            (m.d_pem_est_mw_per_hz - m.d_pem_actual_mw_per_hz) /
            m.d_pem_actual_mw_per_hz * 100.0;
    }
  }

  if (prop && prop->steps.size() == full.steps.size()) {
    m.has_rmse = true;
    double sq = 0.0;
    long n = 0;
    for (long j = k0; j <= last; ++j) {
      const double d =
          coi(j) - prop->steps[static_cast<std::size_t>(j)].df_hz[fa];
      sq += d * d;
      ++n;
    }
    m.rmse_mhz = n > 0 ? std::sqrt(sq / n) * 1e3 : 0.0;
  }
  return m;
}

RunResult run_event(const Scenario& s, const WarmState& warm,
                    const RunHooks* hooks) {
  s.validate();
  const double dt = s.sim.dt_s;
  const int n_p = s.fleet.n_p();
  const long n_steps = steps_of(s.sim.horizon_s, dt);
  const long k0 = steps_of(s.disturbance.onset_s, dt);
  const std::size_t n_areas = s.network.size();
  const double p_ref = s.p_ref_mw();

  RunResult r;
  r.warmup = warm.stats;

  Fleet fleet = warm.fleet;
  Aggregator agg = warm.aggregator;
  std::int64_t accepted_prev = warm.accepted_prev;
  fleet.set_eta_max(s.policy.eta_max);
  fleet.set_threads(s.sim.threads);
  const ControlPolicy& pol = s.policy;

  GridState grid = GridState::zero(n_areas, dt);
  r.series.dt_s = dt;
  r.series.n_areas = n_areas;
  r.series.steps.reserve(static_cast<std::size_t>(n_steps + 1));

  StepRecord rec;
  rec.df_hz.assign(n_areas, 0.0);
  rec.gen_mw.assign(n_areas, 0.0);
  rec.p_pem_mw = agg.pem_power_mw();
  rec.n_on = agg.histogram().total();
  r.series.steps.push_back(rec);

  const long snap_every =
      s.output.histogram_interval_s > 0.0
          ? steps_of(s.output.histogram_interval_s, dt)
          : 0;
  if (snap_every > 0)
    r.histogram_snapshots.push_back({0.0, agg.histogram().bins()});

  std::vector<double> load(n_areas, 0.0);
  std::vector<double> pem(n_areas, 0.0);
  const auto fleet_area = static_cast<std::size_t>(s.fleet.area);
  const auto dist_area = static_cast<std::size_t>(s.disturbance.area);

  double baseline_mw = agg.pem_power_mw();
  bool baseline_frozen = false;
  double df_nadir = 0.0;

  // moving-average frequency estimator at the fleet bus; the window ends
  // at the previous step, so sensing keeps its one-step lag
  const long wm = std::max<long>(1, steps_of(s.sim.freq_meas_window_s, dt));
  std::vector<double> meas(static_cast<std::size_t>(wm), 0.0);
  std::size_t meas_pos = 0;
  std::vector<double> sensed_freq(n_areas, 0.0);

  for (long j = 1; j <= n_steps; ++j) {
    const bool active = (j - 1) >= k0 && s.disturbance.magnitude_mw != 0.0;
    if (active && !baseline_frozen) {
      baseline_mw = agg.pem_power_mw();
      baseline_frozen = true;
    }

    double meas_sum = 0.0;
    for (double v : meas) meas_sum += v;
    const double df_sens = meas_sum / static_cast<double>(wm);
    df_nadir = std::min(df_nadir, df_sens);
    const bool blocked = df_sens <= pol.deadband_hz;
    const double eta_val = eta(df_sens, pol);

    const auto agg_res = agg.advance(accepted_prev, blocked, eta_val);
    sensed_freq = grid.freq_hz;
    sensed_freq[fleet_area] = df_sens;
    const FleetStepResult res =
        fleet.step(sensed_freq, warm.stats.steps + (j - 1),
                   s.fleet.draws_during_event);
    agg.remove_exits(res.optout_exit_timers, blocked && eta_val > 0.0,
                     interrupt_threshold_steps(eta_val, n_p));

    if (agg.histogram().total() != fleet.consuming_count())
      throw NumericalError(
          "aggregator histogram diverged from the fleet at step " +
          std::to_string(j));

    const std::int64_t quota = accept_requests(
        res.requests, p_ref, agg.pem_power_mw(), s.fleet.packet_power_mw);
    accepted_prev = fleet.commit_accepts(quota);

    std::fill(load.begin(), load.end(), 0.0);
    std::fill(pem.begin(), pem.end(), 0.0);
    if (active) {
      load[dist_area] = -s.disturbance.magnitude_mw;
      pem[fleet_area] = agg.pem_power_mw() - baseline_mw;
    }
    swing_turbine_step(grid, s.network, load, pem, s.sim.grid_substeps);
    meas[meas_pos] = grid.freq_hz[fleet_area];
    meas_pos = (meas_pos + 1) % meas.size();

    rec = StepRecord();
    rec.t_s = static_cast<double>(j) * dt;
    rec.df_hz = grid.freq_hz;
    rec.gen_mw = grid.gen_mw;
    rec.p_pem_mw = agg.pem_power_mw();
    rec.eta = eta_val;
    rec.n_on = agg.histogram().total();
    rec.n_interrupted = res.interruptions;
    rec.n_completed = agg_res.completions;
    rec.n_requests = res.requests;
    rec.n_accepted = accepted_prev;
    const std::vector<double> flows = tie_line_flows(grid, s.network);
    rec.tie_flow_mw = n_areas > 1 ? -flows[0] : 0.0;
    r.series.steps.push_back(std::move(rec));

    r.optout_activations += res.optout_activations;
    if (snap_every > 0 && j % snap_every == 0)
      r.histogram_snapshots.push_back(
          {static_cast<double>(j) * dt, agg.histogram().bins()});
    if (hooks && hooks->on_event_step) hooks->on_event_step(j, fleet, agg);
  }

  r.df_nadir_fleet_hz = df_nadir;
  r.estimate = damping_estimate_uniform(pol, s.fleet.packet_power_mw, n_p,
                                        warm.stats.xbar_nom, df_nadir);

  if (r.estimate.d_pem_mw_per_hz > 0.0 && s.disturbance.magnitude_mw != 0.0) {
    const TimeSeries prop =
        run_proportional_model(s, r.estimate.d_pem_mw_per_hz);
    r.metrics = compute_metrics(r.series, &prop, s, &r.estimate);
  } else {
    r.metrics = compute_metrics(r.series, nullptr, s, &r.estimate);
  }
  return r;
}

RunResult run_scenario(const Scenario& s, const RunHooks* hooks) {
  const WarmState warm = run_warmup(s);
  return run_event(s, warm, hooks);
}

SweepResult sweep(const Scenario& s, std::span<const double> eta_max_values) {
  if (eta_max_values.empty())
    throw ConfigError("sweep needs at least one eta_max value");
  const WarmState warm = run_warmup(s);

  SweepResult out;
  out.warmup = warm.stats;
  for (double e : eta_max_values) {
    Scenario row = s;
    row.policy.eta_max = e;
    RunResult r = run_event(row, warm);
    out.rows.push_back({e, r.metrics, r.estimate});
    if (r.estimate.d_pem_mw_per_hz > 0.0 &&
        row.disturbance.magnitude_mw != 0.0)
      out.proportional.push_back(
          run_proportional_model(row, r.estimate.d_pem_mw_per_hz));
    else
      out.proportional.emplace_back();
    out.runs.push_back(std::move(r));
  }
  return out;
}

std::string timeseries_csv(const TimeSeries& ts) {
  std::string out =
      "t,df_area1_hz,df_area2_hz,dPg1_mw,dPg2_mw,p_pem_mw,eta,n_on,"
      "n_interrupted,n_completed,n_requests,n_accepted,tie_flow_mw\n";
  for (const StepRecord& r : ts.steps) {
    append_num(out, r.t_s);
    out += ',';
    append_num(out, area_or_zero(r.df_hz, 0));
    out += ',';
    append_num(out, area_or_zero(r.df_hz, 1));
    out += ',';
    append_num(out, area_or_zero(r.gen_mw, 0));
    out += ',';
    append_num(out, area_or_zero(r.gen_mw, 1));
    out += ',';
    append_num(out, r.p_pem_mw);
    out += ',';
    append_num(out, r.eta);
    out += ',';
    out += std::to_string(r.n_on);
    out += ',';
    out += std::to_string(r.n_interrupted);
    out += ',';
    out += std::to_string(r.n_completed);
    out += ',';
    out += std::to_string(r.n_requests);
    out += ',';
    out += std::to_string(r.n_accepted);
    out += ',';
    append_num(out, r.tie_flow_mw);
    out += '\n';
  }
  return out;
}

std::string histogram_csv(std::span<const HistogramSnapshot> snaps) {
  std::string out = "t,bin,count\n";
  for (const HistogramSnapshot& s : snaps) {
    for (std::size_t i = 0; i < s.bins.size(); ++i) {
      if (s.bins[i] == 0) continue;
      append_num(out, s.t_s);
      out += ',';
      out += std::to_string(i + 1);
      out += ',';
      out += std::to_string(s.bins[i]);
      out += '\n';
    }
  }
  return out;
}

}  // namespace pemfreq
