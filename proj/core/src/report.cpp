#include "pemfreq/report.hpp"

#include <cstdio>
#include <string>

#include <json.hpp>

namespace pemfreq {

using nlohmann::json;

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

json metrics_to_json(const Metrics& m) {
  json j;
  j["rocof_mhz_per_s"] = m.rocof_mhz_per_s;
  j["nadir_mhz"] = m.nadir_mhz;
  j["f_inf_mhz"] = m.f_inf_mhz;
  j["regime"] = to_string(m.regime);
  if (m.has_estimate) {
    j["d_pem_est_mw_per_hz"] = m.d_pem_est_mw_per_hz;
    j["d_pem_actual_mw_per_hz"] = m.d_pem_actual_mw_per_hz;
    j["estimation_error_pct"] = m.estimation_error_pct;
  }
  if (m.has_rmse) j["rmse_mhz"] = m.rmse_mhz;
  return j;
}

}  // namespace

std::string sweep_table_markdown(const SweepResult& sweep) {
  std::string out =
      "| eta_max | ROCOF [mHz/s] | nadir [mHz] | f_inf [mHz] | "
      "D_est [MW/Hz] | D_actual [MW/Hz] | err [%] | RMSE [mHz] | regime |\n"
      "|---:|---:|---:|---:|---:|---:|---:|---:|:---|\n";
  for (const SweepRow& r : sweep.rows) {
    const Metrics& m = r.metrics;
    out += "| " + fmt(r.eta_max, "%.2f");
    out += " | " + fmt(m.rocof_mhz_per_s, "%.1f");
    out += " | " + fmt(m.nadir_mhz, "%.1f");
    out += " | " + fmt(m.f_inf_mhz, "%.1f");
    out += " | " + fmt(m.d_pem_est_mw_per_hz, "%.0f");
    out += " | " + fmt(m.d_pem_actual_mw_per_hz, "%.0f");
    out += " | " + (m.d_pem_actual_mw_per_hz != 0.0
                        ? fmt(m.estimation_error_pct, "%.1f")
                        : std::string("-"));
    out += " | " + (m.has_rmse ? fmt(m.rmse_mhz, "%.2f") : std::string("-"));
    out += " | " + std::string(to_string(m.regime)) + " |\n";
  }
  return out;
}

std::string sweep_table_csv(const SweepResult& sweep) {
  std::string out =
      "eta_max,rocof_mhz_per_s,nadir_mhz,f_inf_mhz,d_est_mw_per_hz,"
      "d_actual_mw_per_hz,err_pct,rmse_mhz,regime\n";
  for (const SweepRow& r : sweep.rows) {
    const Metrics& m = r.metrics;
    out += fmt(r.eta_max, "%.10g");
    out += ',' + fmt(m.rocof_mhz_per_s, "%.10g");
    out += ',' + fmt(m.nadir_mhz, "%.10g");
    out += ',' + fmt(m.f_inf_mhz, "%.10g");
    out += ',' + fmt(m.d_pem_est_mw_per_hz, "%.10g");
    out += ',' + fmt(m.d_pem_actual_mw_per_hz, "%.10g");
    out += ',' + (m.d_pem_actual_mw_per_hz != 0.0
                      ? fmt(m.estimation_error_pct, "%.10g")
                      : std::string());
    out += ',' + (m.has_rmse ? fmt(m.rmse_mhz, "%.10g") : std::string());
    out += ',' + std::string(to_string(m.regime)) + '\n';
  }
  return out;
}

std::string metrics_json(const Metrics& m) {
  return metrics_to_json(m).dump(2) + "\n";
}

std::string run_report_json(const Scenario& s,
                            std::span<const std::string> defaulted,
                            const RunResult& result, double wall_seconds) {
  json j;
  j["scenario"] = json::parse(emit_scenario(s));
  j["defaulted_keys"] = json::array();
  for (const std::string& d : defaulted) j["defaulted_keys"].push_back(d);
  j["seed"] = s.sim.seed;

  json w;
  w["steps"] = result.warmup.steps;
  w["xbar_nom"] = result.warmup.xbar_nom;
  w["p_pem_baseline_mw"] = result.warmup.p_pem_baseline_mw;
  w["mean_temp_c"] = result.warmup.mean_temp_c;
  w["uniformity_ok"] = result.warmup.diagnostics.uniformity_ok;
  w["drift_ok"] = result.warmup.diagnostics.drift_ok;
  w["max_bin_rel_deviation"] = result.warmup.diagnostics.max_bin_rel_deviation;
  w["xbar_drift_rel"] = result.warmup.diagnostics.xbar_drift_rel;
  j["warmup"] = std::move(w);

  j["metrics"] = metrics_to_json(result.metrics);
  j["df_nadir_fleet_mhz"] = result.df_nadir_fleet_hz * 1e3;
  j["optout_activations"] = result.optout_activations;
  j["wall_seconds"] = wall_seconds;
  return j.dump(2) + "\n";
}

}  // namespace pemfreq
