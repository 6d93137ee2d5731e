#pragma once

#include <span>
#include <string>
#include <vector>

#include "pemfreq/engine.hpp"
#include "pemfreq/scenario.hpp"

namespace pemfreq {

/// Sweep summary table, one row per eta_max:
/// eta_max, rocof, nadir, f_inf, D_est, D_actual, err%, rmse, regime.
std::string sweep_table_markdown(const SweepResult& sweep);
std::string sweep_table_csv(const SweepResult& sweep);

/// Single-run metrics as a flat JSON object.
std::string metrics_json(const Metrics& m);

/// Full run report: scenario echo, defaulted keys, seed, warm-up stats,
/// metrics, and wall-clock timing. JSON, stable key order.
std::string run_report_json(const Scenario& s,
                            std::span<const std::string> defaulted,
                            const RunResult& result, double wall_seconds);

}  // namespace pemfreq
