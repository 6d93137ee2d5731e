#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pemfreq/engine.hpp"
#include "pemfreq/errors.hpp"
#include "pemfreq/scenario.hpp"

using namespace pemfreq;

namespace {

Scenario test_scenario(std::int64_t n_devices) {
  ParsedScenario p = parse_scenario_file(
      std::string(PEMFREQ_SCENARIO_DIR) + "/tableIII.scenario");
  subsample_fleet(p.scenario, n_devices);
  p.scenario.sim.seed = 7;
  return p.scenario;
}

}  // namespace

TEST_CASE("zero disturbance leaves the grid untouched") {
  Scenario s = test_scenario(2000);
  s.disturbance.magnitude_mw = 0.0;
  s.sim.warmup_s = 60.0;
  s.sim.horizon_s = 10.0;
  s.disturbance.onset_s = 5.0;

  const RunResult r = run_scenario(s);
  for (const StepRecord& rec : r.series.steps) {
    CHECK(rec.df_hz[0] == 0.0);
    CHECK(rec.df_hz[1] == 0.0);
    CHECK(rec.gen_mw[0] == 0.0);
    CHECK(rec.eta == 0.0);
    CHECK(rec.n_interrupted == 0);
  }
  CHECK(r.metrics.nadir_mhz == 0.0);
}

TEST_CASE("timeseries CSV is byte-identical across worker counts") {
  Scenario s = test_scenario(4000);
  s.sim.warmup_s = 90.0;

  s.sim.threads = 1;
  const std::string csv1 = timeseries_csv(run_scenario(s).series);
  s.sim.threads = 3;
  const std::string csv3 = timeseries_csv(run_scenario(s).series);
  CHECK(csv1 == csv3);
  CHECK(csv1.rfind("t,df_area1_hz,df_area2_hz,dPg1_mw,dPg2_mw,p_pem_mw,eta,"
                   "n_on,n_interrupted,n_completed,n_requests,n_accepted,"
                   "tie_flow_mw\n",
                   0) == 0);
}

TEST_CASE("warm-up reaches the reference power with a spread histogram") {
  const Scenario s = test_scenario(4000);
  const WarmState warm = run_warmup(s);

  // fleet consumption should sit just below the 200 MW reference
  CHECK(warm.stats.p_pem_baseline_mw > 0.85 * 200.0);
  CHECK(warm.stats.p_pem_baseline_mw <= 200.0 + 1e-9);
  const double xbar_expect =
      200.0 / (s.fleet.packet_power_mw * s.fleet.n_p());
  CHECK(warm.stats.xbar_nom > 0.8 * xbar_expect);
  CHECK(warm.stats.xbar_nom < 1.1 * xbar_expect);
  CHECK(warm.fleet.consuming_count() == warm.aggregator.histogram().total());
}

TEST_CASE("aggregator histogram mirrors device timers bin by bin") {
  Scenario s = test_scenario(1000);
  s.sim.warmup_s = 30.0;
  s.sim.horizon_s = 15.0;

  const WarmState warm = run_warmup(s);
  long checked = 0;
  RunHooks hooks;
  hooks.on_event_step = [&](long, const Fleet& fleet, const Aggregator& agg) {
    const int n_p = fleet.params().n_p();
    std::vector<std::int64_t> expect(static_cast<std::size_t>(n_p), 0);
    const auto timers = fleet.timers();
    const auto modes = fleet.modes();
    for (std::size_t i = 0; i < timers.size(); ++i)
      if (static_cast<DeviceMode>(modes[i]) == DeviceMode::kOn &&
          timers[i] >= 1)
        ++expect[static_cast<std::size_t>(timers[i] - 1)];
    const auto got = agg.histogram().bins();
    REQUIRE(got == expect);
    ++checked;
  };
  run_event(s, warm, &hooks);
  CHECK(checked == 150);
}

TEST_CASE("a generation-loss event draws the expected response") {
  Scenario s = test_scenario(4000);
  const RunResult r = run_scenario(s);

  CHECK(r.metrics.nadir_mhz < -20.0);           // beyond the dead-band
  CHECK(r.metrics.nadir_mhz > -120.0);
  CHECK(r.metrics.f_inf_mhz < 0.0);
  // the responsive fleet must beat the no-fleet steady state (-48.1 mHz)
  CHECK(r.metrics.f_inf_mhz > -48.1);
  CHECK(r.metrics.rocof_mhz_per_s < 0.0);
  CHECK(r.estimate.regime != DampingRegime::kDeadband);
  CHECK(r.metrics.has_rmse);
  CHECK(r.metrics.rmse_mhz >= 0.0);
  CHECK(r.df_nadir_fleet_hz < -0.020);

  // interruption activity shows up in the record
  std::int64_t interrupted = 0;
  double max_eta = 0.0;
  for (const StepRecord& rec : r.series.steps) {
    interrupted += rec.n_interrupted;
    max_eta = std::max(max_eta, rec.eta);
  }
  CHECK(interrupted > 0);
  CHECK(max_eta > 0.0);
}

TEST_CASE("fast init produces a consistent warm state") {
  Scenario s = test_scenario(4000);
  s.sim.fast_init = true;

  const WarmState warm = run_warmup(s);
  CHECK(warm.stats.steps == 0);
  CHECK(warm.aggregator.histogram().total() ==
        warm.fleet.consuming_count());
  CHECK(warm.stats.p_pem_baseline_mw ==
        doctest::Approx(200.0).epsilon(0.01));

  const RunResult r = run_event(s, warm);
  CHECK(r.metrics.nadir_mhz < -20.0);
}

TEST_CASE("proportional comparison model latches its load relief") {
  const Scenario s = test_scenario(4000);
  const TimeSeries ts = run_proportional_model(s, 3500.0);
  double prev = 0.0;
  for (const StepRecord& rec : ts.steps) {
    if (rec.t_s <= s.disturbance.onset_s) CHECK(rec.p_pem_mw == 0.0);
    CHECK(rec.p_pem_mw <= prev + 1e-12);  // relief never un-sheds
    prev = rec.p_pem_mw;
  }
  // steady state obeys the closed form with the proportional damping
  const Metrics m = compute_metrics(ts, nullptr, s, nullptr);
  CHECK(m.f_inf_mhz < -30.0);
  CHECK(m.f_inf_mhz > -48.1);
}

TEST_CASE("no-fleet baseline settles at the closed-form deviation") {
  Scenario s = test_scenario(4000);
  s.sim.horizon_s = 120.0;     // let the governors settle fully
  s.sim.f_inf_window_s = 10.0;
  const TimeSeries ts = run_proportional_model(s, 0.0);
  const Metrics m = compute_metrics(ts, nullptr, s, nullptr);
  const double expect_mhz =
      steady_state_deviation(-500.0, 200.0, 0.0002, 0.0) * 1e3;
  CHECK(m.f_inf_mhz == doctest::Approx(expect_mhz).epsilon(0.01));
}

TEST_CASE("sweep pairs rows against one shared warm-up") {
  Scenario s = test_scenario(2000);
  s.sim.warmup_s = 120.0;
  const std::vector<double> etas = {0.0, 0.5, 1.0};
  const SweepResult sw = sweep(s, etas);
  REQUIRE(sw.rows.size() == 3);

  // eta_max = 0: no interruption capacity, estimate is zero
  CHECK(sw.rows[0].estimate.d_pem_mw_per_hz == 0.0);
  // more authority gives a shallower steady-state deviation
  CHECK(std::abs(sw.rows[2].metrics.f_inf_mhz) <
        std::abs(sw.rows[0].metrics.f_inf_mhz));
  CHECK(std::abs(sw.rows[1].metrics.f_inf_mhz) <=
        std::abs(sw.rows[0].metrics.f_inf_mhz) + 1e-9);
  // the estimate grows with authority
  CHECK(sw.rows[2].estimate.d_pem_mw_per_hz >
        sw.rows[1].estimate.d_pem_mw_per_hz);
}

TEST_CASE("histogram snapshots honour the output interval") {
  Scenario s = test_scenario(1000);
  s.sim.warmup_s = 30.0;
  s.sim.horizon_s = 10.0;
  s.output.histogram_interval_s = 2.0;
  const RunResult r = run_scenario(s);
  REQUIRE(r.histogram_snapshots.size() == 6);  // t = 0, 2, ..., 10
  CHECK(r.histogram_snapshots[1].t_s == doctest::Approx(2.0));
  const std::string csv = histogram_csv(r.histogram_snapshots);
  CHECK(csv.rfind("t,bin,count\n", 0) == 0);
}
