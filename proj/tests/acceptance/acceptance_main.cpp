// Acceptance gate: every release-blocking criterion in one binary.
// Prints exactly one PASS/FAIL line per criterion and exits non-zero if
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "pemfreq/aggregator.hpp"
#include "pemfreq/engine.hpp"
#include "pemfreq/fleet.hpp"
#include "pemfreq/grid.hpp"
#include "pemfreq/rng.hpp"
#include "pemfreq/scenario.hpp"

using namespace pemfreq;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_s() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

Scenario reference_scenario() {
  return parse_scenario_file(std::string(PEMFREQ_SCENARIO_DIR) +
                             "/tableIII.scenario")
      .scenario;
}

std::string fmt(const char* spec, double a, double b = 0.0, double c = 0.0,
                double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, spec, a, b, c, d);
  return buf;
}

// ---- criterion 1: baseline steady-state deviation ------------------------

void criterion_1() {
  const double t0 = now_s();
  Scenario s = reference_scenario();
  s.sim.horizon_s = 120.0;  // let the governors settle fully
  s.sim.f_inf_window_s = 10.0;
  const TimeSeries ts = run_proportional_model(s, 0.0);
  const Metrics m = compute_metrics(ts, nullptr, s, nullptr);
  const double wall = now_s() - t0;
  const bool ok =
      std::abs(m.f_inf_mhz - (-48.1)) <= 0.5 && wall < 5.0;
  report(1, ok,
         fmt("baseline f_inf = %.2f mHz (target -48.1 +/- 0.5), %.2f s "
             "(budget 5 s)",
             m.f_inf_mhz, wall));
}

// ---- criteria 2-4: the calibrated eta_max sweep ---------------------------

struct TableRow {
  double rocof, nadir, f_inf;  // magnitudes, mHz/s and mHz
};
const std::vector<TableRow> kReference = {
    {104.0, 83.0, 46.0},  // eta_max = 0
    {94.0, 75.0, 42.0},   // eta_max = 0.33
    {86.0, 69.0, 39.0},   // eta_max = 0.67
    {81.0, 64.0, 36.0},   // eta_max = 1
};
const std::vector<double> kEtas = {0.0, 0.33, 0.67, 1.0};

bool within(double value, double reference, double rel) {
  return std::abs(value - reference) <= rel * std::abs(reference);
}

void criteria_2_3_4() {
  // timing bound at the subsampled size first
  Scenario small = reference_scenario();
  subsample_fleet(small, 4000);
  const double t_small0 = now_s();
  sweep(small, kEtas);
  const double wall_small = now_s() - t_small0;

  const Scenario s = reference_scenario();
  const double t0 = now_s();
  const SweepResult sw = sweep(s, kEtas);
  const double wall = now_s() - t0;

  bool tol_ok = true, mono_ok = true;
  std::string worst;
  double worst_err = 0.0;
  for (std::size_t i = 0; i < sw.rows.size(); ++i) {
    const Metrics& m = sw.rows[i].metrics;
    const TableRow& ref = kReference[i];
    const double rocof = std::abs(m.rocof_mhz_per_s);
    const double nadir = std::abs(m.nadir_mhz);
    const double f_inf = std::abs(m.f_inf_mhz);
    std::printf(
        "  eta_max %.2f: rocof %.1f (ref %.0f)  nadir %.1f (ref %.0f)  "
        "f_inf %.1f (ref %.0f)  D_est %.0f  D_act %.0f  rmse %.2f\n",
        kEtas[i], rocof, ref.rocof, nadir, ref.nadir, f_inf, ref.f_inf,
        sw.rows[i].estimate.d_pem_mw_per_hz, m.d_pem_actual_mw_per_hz,
        m.rmse_mhz);
    for (auto [v, r, name] : {std::tuple{rocof, ref.rocof, "rocof"},
                              std::tuple{nadir, ref.nadir, "nadir"},
                              std::tuple{f_inf, ref.f_inf, "f_inf"}}) {
      if (!within(v, r, 0.20)) tol_ok = false;
      const double err = std::abs(v - r) / r;
      if (err > worst_err) {
        worst_err = err;
        worst = std::string(name) + fmt("@eta=%.2f off by %.0f%%", kEtas[i],
                                        err * 100.0);
      }
    }
    if (i > 0) {
      const Metrics& prev = sw.rows[i - 1].metrics;
      if (!(rocof <= std::abs(prev.rocof_mhz_per_s) + 1e-9 &&
            nadir <= std::abs(prev.nadir_mhz) + 1e-9 &&
            f_inf <= std::abs(prev.f_inf_mhz) + 1e-9))
        mono_ok = false;
    }
  }
  const bool time_ok = wall < 600.0 && wall_small < 30.0;
  report(2, tol_ok && mono_ok && time_ok,
         "sweep within 20% of the reference table (worst " + worst +
             "), monotone=" + (mono_ok ? "yes" : "NO") +
             fmt(", %.0f s at 400k (budget 600), %.1f s at 4k (budget 30)",
                 wall, wall_small));

  // criterion 3: estimator accuracy at full authority, and the error at
  // partial authority must exceed the full-authority error
  const Metrics& m033 = sw.rows[1].metrics;
  const Metrics& m100 = sw.rows[3].metrics;
  const double e033 = std::abs(m033.estimation_error_pct);
  const double e100 = std::abs(m100.estimation_error_pct);
  report(3, e100 <= 5.0 && e033 > e100,
         fmt("estimation error %.1f%% at eta_max=1 (bound 5%%), %.1f%% at "
             "eta_max=0.33 (must exceed the former)",
             e100, e033));

  // criterion 4: trajectory agreement with the proportional model
  bool rmse_ok = true;
  double worst_rmse = 0.0;
  for (std::size_t i = 1; i < sw.rows.size(); ++i) {
    const Metrics& m = sw.rows[i].metrics;
    if (!m.has_rmse || m.rmse_mhz > 1.2) rmse_ok = false;
    worst_rmse = std::max(worst_rmse, m.rmse_mhz);
  }
  report(4, rmse_ok,
         fmt("worst RMSE vs proportional model %.2f mHz over eta_max in "
             "{0.33, 0.67, 1} (bound 1.2 mHz)",
             worst_rmse));
}

// ---- criterion 5: integer-exact histogram oracle --------------------------

void criterion_5() {
  FleetParams p;
  p.n_devices = 10000;
  p.area = 0;
  ControlPolicy pol;
  Fleet fleet(p, pol, 2024);
  const int n_p = p.n_p();
  Aggregator agg(n_p, p.packet_power_mw);
  const double p_ref = 0.25 * p.n_devices * p.packet_power_mw;

  std::int64_t accepted_prev = 0;
  long mismatches = 0;
  std::vector<double> df = {0.0};
  for (long k = 0; k < 3000; ++k) {
    // three blocked excursions of different depth exercise interruption,
    // recovery, and re-entry around the epoch boundary at k = 1800
    if (k >= 700 && k < 900)
      df[0] = -0.055;
    else if (k >= 1500 && k < 1700)
      df[0] = -0.150;
    else if (k >= 2300 && k < 2500)
      df[0] = -0.030;
    else
      df[0] = 0.0;

    const bool blocked = df[0] <= pol.deadband_hz;
    const double e = eta(df[0], pol);
    agg.advance(accepted_prev, blocked, e);
    const FleetStepResult res = fleet.step(df, k, true);
    agg.remove_exits(res.optout_exit_timers, blocked && e > 0.0,
                     interrupt_threshold_steps(e, n_p));
    const std::int64_t quota = accept_requests(
        res.requests, std::min(1.0, (k + 1) / double(n_p)) * p_ref,
        agg.pem_power_mw(), p.packet_power_mw);
    accepted_prev = fleet.commit_accepts(quota);

    // integer-exact comparison, every bin, every step
    std::vector<std::int64_t> expect(static_cast<std::size_t>(n_p), 0);
    const auto timers = fleet.timers();
    const auto modes = fleet.modes();
    for (std::size_t i = 0; i < timers.size(); ++i)
      if (static_cast<DeviceMode>(modes[i]) == DeviceMode::kOn &&
          timers[i] >= 1)
        ++expect[static_cast<std::size_t>(timers[i] - 1)];
    if (agg.histogram().bins() != expect) ++mismatches;
  }
  report(5, mismatches == 0,
         "aggregator histogram integer-exact against 10000 device timers "
         "over 3000 steps (" +
             std::to_string(mismatches) + " mismatching steps)");
}

// ---- criterion 6: property suites -----------------------------------------

void criterion_6() {
  int violations = 0;
  FleetParams p;
  p.n_devices = 1;
  ControlPolicy pol;

  // eta: bounded, monotone non-increasing in df, saturates correctly
  for (int t = 0; t < 2000; ++t) {
    pol.eta_max = rng::uniform_at(1, 1, t, 0);
    const double f1 = -0.25 * rng::uniform_at(1, 2, t, 0);
    const double f2 = f1 - 0.05 * rng::uniform_at(1, 3, t, 0);
    const double e1 = eta(f1, pol), e2 = eta(f2, pol);
    if (e1 < 0.0 || e1 > pol.eta_max || e2 < e1 - 1e-12) ++violations;
    if (eta(-1.0, pol) != pol.eta_max) ++violations;
    if (eta(0.0, pol) != 0.0) ++violations;
  }

  // threshold: in [1, n_p+1], anti-monotone in eta, exact complements
  for (int t = 0; t < 2000; ++t) {
    const int n_p = 1 + static_cast<int>(rng::uniform_at(2, 1, t, 0) * 3600);
    const double ea = rng::uniform_at(2, 2, t, 0);
    const double eb = std::min(1.0, ea + rng::uniform_at(2, 3, t, 0));
    const int ta = interrupt_threshold_steps(ea, n_p);
    const int tb = interrupt_threshold_steps(eb, n_p);
    if (ta < 1 || ta > n_p + 1 || tb > ta) ++violations;
  }

  // request probability: a probability, monotone decreasing in temp
  for (int t = 0; t < 2000; ++t) {
    FleetParams q = p;
    const double a =
        q.temp_min_c + (q.temp_max_c - q.temp_min_c) *
                           rng::uniform_at(3, 1, t, 0);
    const double b = a + (q.temp_max_c - a) * rng::uniform_at(3, 2, t, 0);
    const double pa = request_probability(a, q);
    const double pb = request_probability(b, q);
    if (pa < 0.0 || pa > 1.0 || pb > pa + 1e-12) ++violations;
  }

  // histogram: shift conserves mass, completions = old last bin
  TimerHistogram h(64);
  std::int64_t in = 0, out = 0;
  for (int t = 0; t < 4000; ++t) {
    const auto q = static_cast<std::int64_t>(
        rng::uniform_at(4, 1, t, 0) * 50);
    const std::int64_t expect_done = h.bin(64);
    in += q;
    const std::int64_t done = h.advance(q);
    out += done;
    if (done != expect_done || h.total() != in - out) ++violations;
  }

  // tie-line flows: conservation on random triangles
  NetworkModel net;
  AreaParams a;
  a.base_power_mw = 1000.0;
  a.damping_mw_per_hz = 10.0;
  a.droop_hz_per_mw = 0.01;
  net.areas = {a, a, a};
  net.tie_lines = {{0, 1, 300.0}, {1, 2, 450.0}, {0, 2, 600.0}};
  GridState st = GridState::zero(3, 0.1);
  for (int t = 0; t < 2000; ++t) {
    for (int j = 0; j < 3; ++j)
      st.angle_rad[j] = rng::uniform_at(5, j + 1, t, 0) - 0.5;
    const auto flows = tie_line_flows(st, net);
    if (std::abs(flows[0] + flows[1] + flows[2]) > 1e-9) ++violations;
  }

  report(6, violations == 0,
         "property suites (eta law, thresholds, request probability, "
         "histogram recursion, tie flows): " +
             std::to_string(violations) + " violations in 12000 trials");
}

// ---- criterion 7: determinism and full-size wall clock ---------------------

void criterion_7() {
  Scenario s = reference_scenario();
  subsample_fleet(s, 4000);
  std::string first;
  bool identical = true;
  for (int threads : {1, 2, 4}) {
    s.sim.threads = threads;
    const std::string csv = timeseries_csv(run_scenario(s).series);
    if (first.empty())
      first = csv;
    else if (csv != first)
      identical = false;
  }

  const Scenario full = reference_scenario();
  const double t0 = now_s();
  run_scenario(full);
  const double wall = now_s() - t0;
  report(7, identical && wall < 60.0,
         std::string("timeseries CSV byte-identical for 1/2/4 workers: ") +
             (identical ? "yes" : "NO") +
             fmt("; 400k-device run %.1f s (budget 60 s)", wall));
}

// ---- criterion 8: device/aggregator threshold agreement --------------------

void criterion_8() {
  const int a = interrupt_threshold_steps(30.0 / 180.0, 1800);
  const int b = interrupt_threshold_steps(0.167, 1800);
  const bool ok = a == 1500 && b == 1500;
  report(8, ok,
         "interrupt threshold at eta = 30/180 is exactly bin 1500 (got " +
             std::to_string(a) + " and " + std::to_string(b) + ")");
}

}  // namespace

int main() {
  criterion_1();
  criterion_8();
  criterion_5();
  criterion_6();
  criterion_7();
  criteria_2_3_4();
  std::printf("%d of 8 criteria passed\n", 8 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
