#include "pemfreq/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pemfreq/errors.hpp"

namespace pemfreq {

void AreaParams::validate(std::size_t area_index) const {
  auto bad = [&](const char* field) {
    throw ConfigError("area " + std::to_string(area_index) + ": " + field +
                      " must be strictly positive");
  };
  if (!(inertia_h_s > 0.0)) bad("inertia_h_s");
  if (!(base_power_mw > 0.0)) bad("base_power_mw");
  if (!(damping_mw_per_hz > 0.0)) bad("damping_mw_per_hz");
  if (!(droop_hz_per_mw > 0.0)) bad("droop_hz_per_mw");
  if (!(turbine_tau_s > 0.0)) bad("turbine_tau_s");
}

double NetworkModel::total_inertia_mw_s_per_hz() const {
  double m = 0.0;
  for (const auto& a : areas) m += a.inertia_mw_s_per_hz(f0_hz);
  return m;
}

void NetworkModel::validate() const {
  if (areas.empty()) throw ConfigError("network has no areas");
  if (!(f0_hz > 0.0)) throw ConfigError("f0_hz must be positive");
  for (std::size_t j = 0; j < areas.size(); ++j) areas[j].validate(j);

  const int n = static_cast<int>(areas.size());
  std::vector<std::vector<int>> seen(areas.size(), std::vector<int>(n, 0));
  for (const auto& t : tie_lines) {
    if (t.from < 0 || t.from >= n || t.to < 0 || t.to >= n)
      throw ConfigError("tie line references unknown area");
    if (t.from == t.to) throw ConfigError("tie line is a self-loop");
    if (!(t.susceptance_mw_per_rad > 0.0))
      throw ConfigError("tie line susceptance must be positive");
    if (seen[t.from][t.to]++ || seen[t.to][t.from]++)
      throw ConfigError("duplicate tie line between areas " +
                        std::to_string(t.from) + " and " +
                        std::to_string(t.to));
  }

  // connectivity via union-find
  if (n > 1) {
    std::vector<int> parent(areas.size());
    for (int i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](int i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    for (const auto& t : tie_lines) parent[find(t.from)] = find(t.to);
    for (int i = 1; i < n; ++i)
      if (find(i) != find(0)) throw ConfigError("network graph is not connected");
  }
}

GridState GridState::zero(std::size_t n_areas, double dt_s) {
  GridState s;
  s.angle_rad.assign(n_areas, 0.0);
  s.freq_hz.assign(n_areas, 0.0);
  s.gen_mw.assign(n_areas, 0.0);
  s.setpoint_mw.assign(n_areas, 0.0);
  s.dt_s = dt_s;
  return s;
}

bool GridState::is_zero() const {
  for (double v : angle_rad)
    if (v != 0.0) return false;
  for (double v : freq_hz)
    if (v != 0.0) return false;
  for (double v : gen_mw)
    if (v != 0.0) return false;
  for (double v : setpoint_mw)
    if (v != 0.0) return false;
  return true;
}

std::vector<double> tie_line_flows(const GridState& state,
                                   const NetworkModel& net) {
  if (state.angle_rad.size() != net.size())
    throw ConfigError("grid state dimension does not match network model");
  std::vector<double> flows(net.size(), 0.0);
  for (const auto& t : net.tie_lines) {
    const double f =
        t.susceptance_mw_per_rad *
        (state.angle_rad[t.from] - state.angle_rad[t.to]);
    flows[t.to] += f;
    flows[t.from] -= f;
  }
  return flows;
}

void swing_turbine_step(GridState& state, const NetworkModel& net,
                        std::span<const double> load_mw,
                        std::span<const double> pem_mw, int substeps) {
  const std::size_t n = net.size();
  if (state.freq_hz.size() != n || load_mw.size() != n || pem_mw.size() != n)
    throw ConfigError("swing_turbine_step: dimension mismatch");
  if (substeps < 1) throw ConfigError("substeps must be >= 1");
  if (!(state.dt_s > 0.0)) throw ConfigError("dt must be positive");

  const double h = state.dt_s / substeps;
  std::vector<double> dfreq(n), dgen(n);
  for (int s = 0; s < substeps; ++s) {
    const std::vector<double> flows = tie_line_flows(state, net);
    for (std::size_t j = 0; j < n; ++j) {
      const AreaParams& a = net.areas[j];
      const double m = a.inertia_mw_s_per_hz(net.f0_hz);
      dfreq[j] = (state.gen_mw[j] - load_mw[j] - pem_mw[j] -
                  a.damping_mw_per_hz * state.freq_hz[j] + flows[j]) /
                 m;
      dgen[j] = (state.setpoint_mw[j] - state.gen_mw[j] -
                 state.freq_hz[j] / a.droop_hz_per_mw) /
                a.turbine_tau_s;
    }
    for (std::size_t j = 0; j < n; ++j) {
      // semi-implicit Euler: advance the angle with the updated frequency
      // so the tie-line oscillation stays neutrally stable
      state.freq_hz[j] += h * dfreq[j];
      state.gen_mw[j] += h * dgen[j];
      state.angle_rad[j] += h * 2.0 * std::numbers::pi * state.freq_hz[j];
    }
  }
  ++state.step;
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(state.freq_hz[j]) || !std::isfinite(state.angle_rad[j]) ||
        !std::isfinite(state.gen_mw[j]))
      throw NumericalError("non-finite grid state in area " +
                           std::to_string(j) + " at step " +
                           std::to_string(state.step));
  }
}

double steady_state_deviation(double delta_p_g_mw, double damping_mw_per_hz,
                              double droop_hz_per_mw,
                              double d_pem_mw_per_hz) {
  const double denom =
      d_pem_mw_per_hz +
      2.0 * (damping_mw_per_hz + 1.0 / droop_hz_per_mw);
  if (!(denom > 0.0))
    throw ConfigError("steady_state_deviation: non-positive denominator");
  return delta_p_g_mw / denom;
}

double actual_pem_damping(double df_inf_hz, double delta_p_g_mw,
                          double damping_mw_per_hz, double droop_hz_per_mw) {
  if (df_inf_hz == 0.0)
    throw ConfigError("actual_pem_damping: zero steady-state deviation");
  return delta_p_g_mw / df_inf_hz -
         2.0 * (damping_mw_per_hz + 1.0 / droop_hz_per_mw);
}

}  // namespace pemfreq
