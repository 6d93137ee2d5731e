#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pemfreq {

/// Per-area generator and load constants. Frequency quantities are kept in
/// Hz throughout; the swing inertia is expressed as M = 2*H*S/f0 in
/// MW*s/Hz so the 2*pi of the rad/s formulation never appears in the
/// integrator.
struct AreaParams {
  double inertia_h_s = 5.0;          ///< inertia constant H [s]
  double base_power_mw = 0.0;        ///< system base S [MW]
  double damping_mw_per_hz = 0.0;    ///< load damping D [MW/Hz]
  double droop_hz_per_mw = 0.0;      ///< governor droop R [Hz/MW]
  double turbine_tau_s = 0.5;        ///< turbine-governor lag tau [s]

  double inertia_mw_s_per_hz(double f0_hz) const {
    return 2.0 * inertia_h_s * base_power_mw / f0_hz;
  }
  void validate(std::size_t area_index) const;
  bool operator==(const AreaParams&) const = default;
};

struct TieLine {
  int from = 0;
  int to = 0;
  double susceptance_mw_per_rad = 0.0;  ///< B_ij [MW/rad]

  bool operator==(const TieLine&) const = default;
};

struct NetworkModel {
  double f0_hz = 60.0;
  std::vector<AreaParams> areas;
  std::vector<TieLine> tie_lines;

  std::size_t size() const { return areas.size(); }
  double total_inertia_mw_s_per_hz() const;
  /// Connected graph, positive susceptances, no self loops or duplicates.
  void validate() const;
  bool operator==(const NetworkModel&) const = default;
};

/// Deviation state of the transmission network. All deviations are zero
/// before the disturbance.
struct GridState {
  std::vector<double> angle_rad;      ///< per-area angle deviation
  std::vector<double> freq_hz;        ///< per-area frequency deviation
  std::vector<double> gen_mw;         ///< per-area generation deviation
  std::vector<double> setpoint_mw;    ///< per-area set-point deviation
  long step = 0;
  double dt_s = 0.1;

  static GridState zero(std::size_t n_areas, double dt_s);
  bool is_zero() const;
};

struct Disturbance {
  int area = 0;
  double magnitude_mw = 0.0;  ///< negative = generation loss
  double onset_s = 0.0;

  bool operator==(const Disturbance&) const = default;
};

/// Tie-line injection for each area: sum_i B_ij (theta_i - theta_j).
/// Injections over all areas sum to zero.
std::vector<double> tie_line_flows(const GridState& state,
                                   const NetworkModel& net);

/// One forward-Euler step of the swing + turbine-governor equations over
/// dt_s, optionally split into `substeps` equal sub-steps. `load_mw` and
/// `pem_mw` are per-area power deviations held constant over the step.
void swing_turbine_step(GridState& state, const NetworkModel& net,
                        std::span<const double> load_mw,
                        std::span<const double> pem_mw, int substeps = 4);

/// Steady-state frequency deviation of the symmetric two-area system:
/// dP_G / (D_PEM + 2*(D + 1/R)).
double steady_state_deviation(double delta_p_g_mw, double damping_mw_per_hz,
                              double droop_hz_per_mw,
                              double d_pem_mw_per_hz);

/// Inverse of steady_state_deviation: dP_G/df_inf - 2*(D + 1/R).
double actual_pem_damping(double df_inf_hz, double delta_p_g_mw,
                          double damping_mw_per_hz, double droop_hz_per_mw);

}  // namespace pemfreq
