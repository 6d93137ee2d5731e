#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pemfreq/fleet.hpp"
#include "pemfreq/grid.hpp"

namespace pemfreq {

struct SimulationOptions {
  double dt_s = 0.1;
  double warmup_s = 360.0;
  double horizon_s = 20.0;
  double p_ref_mw = 0.0;  ///< 0 = default: 25% of fleet rated power
  std::uint64_t seed = 1;
  int grid_substeps = 4;
  double rocof_window_s = 0.5;
  double f_inf_window_s = 1.0;
  /// devices estimate frequency as a moving average over this window;
  /// 0 means a single one-step-lagged sample
  double freq_meas_window_s = 0.0;
  bool fast_init = false;
  int threads = 0;

  bool operator==(const SimulationOptions&) const = default;
};

struct OutputOptions {
  bool timeseries = true;
  double histogram_interval_s = 0.0;  ///< 0 disables snapshots
  int device_trace_count = 0;

  bool operator==(const OutputOptions&) const = default;
};

struct Scenario {
  NetworkModel network;
  FleetParams fleet;
  ControlPolicy policy;
  Disturbance disturbance;
  SimulationOptions sim;
  OutputOptions output;

  double p_ref_mw() const;
  void validate() const;

  bool operator==(const Scenario&) const = default;
};

struct ParsedScenario {
  Scenario scenario;
  /// "section.key = value (defaulted)" for every key the file omitted
  std::vector<std::string> defaulted;
};

/// Parse and fully validate a scenario file. Unknown keys are rejected;
/// every default is resolved and echoed in `defaulted`.
ParsedScenario parse_scenario_file(const std::string& path);
ParsedScenario parse_scenario_text(const std::string& text);

/// Canonical serialization; parse_scenario_text(emit_scenario(s)) == s.
std::string emit_scenario(const Scenario& s);

/// Rescale a scenario to a smaller device count, preserving aggregate
/// fleet MW (packet power scales by the inverse subsample ratio).
void subsample_fleet(Scenario& s, std::int64_t n_devices);

}  // namespace pemfreq
