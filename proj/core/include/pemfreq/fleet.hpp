#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pemfreq/errors.hpp"
#include "pemfreq/rng.hpp"

namespace pemfreq {

enum class DeviceMode : std::uint8_t {
  kStandby = 0,
  kOn = 1,
  kInterrupted = 2,
  kOptedOutHot = 3,   // above comfort band, forced OFF
  kOptedOutCold = 4,  // below comfort band, heating outside PEM accounting
};

inline bool is_opted_out(DeviceMode m) {
  return m == DeviceMode::kOptedOutHot || m == DeviceMode::kOptedOutCold;
}

/// Local frequency-responsive interruption law. Thresholds are stored as
/// negative (under-frequency) deviations: max_dev_hz < deadband_hz < 0.
struct ControlPolicy {
  double eta_max = 1.0;
  double deadband_hz = -0.020;
  double max_dev_hz = -0.100;

  void validate() const;
  bool operator==(const ControlPolicy&) const = default;
};

struct FleetParams {
  std::int64_t n_devices = 0;
  int area = 0;

  /// Accounting power of one packet [MW]. Rescaled when the fleet is
  /// subsampled so aggregate MW is preserved.
  double packet_power_mw = 0.0045;
  /// Physical heating element rating [kW]; drives the thermal model only.
  double element_power_kw = 4.5;

  double epoch_s = 180.0;  ///< packet duration delta
  double dt_s = 0.1;
  double mttr_s = 180.0;   ///< mean time-to-request at the set point

  double temp_set_c = 52.0;
  double temp_min_c = 48.8;
  double temp_max_c = 55.2;

  // one-node tank model
  double tank_capacity_kwh_per_c = 0.335;
  double loss_coeff_kw_per_c = 0.012;
  double ambient_c = 20.0;
  double inlet_c = 18.0;

  // hot-water draws: compound Poisson, exponential volumes
  double draw_rate_per_hour = 1.0;
  double draw_mean_volume_l = 8.0;
  double tank_volume_l = 190.0;
  bool draws_during_event = false;

  int n_p() const { return static_cast<int>(std::floor(epoch_s / dt_s + 0.5)); }
  void validate() const;
  bool operator==(const FleetParams&) const = default;
};

/// Request rate mu(T) [1/s]. Returns +infinity at/below temp_min.
double mu_rate(double temp_c, const FleetParams& params);

/// Probability 1 - exp(-mu(T) dt) of requesting a packet this step.
double request_probability(double temp_c, const FleetParams& params);

/// Interrupted fraction eta(df) of Eq-style piecewise-linear law.
double eta(double df_hz, const ControlPolicy& policy);

/// Device-side interruption threshold in timer steps: an ON device with
/// timer_steps >= this value drops its packet. Returns n_p + 1 (never)
/// when eta_value is zero.
int interrupt_threshold_steps(double eta_value, int n_p);

/// Single-device view, used by the per-operation unit surface. The bulk
/// simulator keeps the same fields in structure-of-arrays form.
struct DeviceState {
  double temp_c = 52.0;
  int timer_steps = 0;
  DeviceMode mode = DeviceMode::kStandby;
  int cooldown_steps = 0;

  bool switch_on() const { return mode == DeviceMode::kOn; }
  double timer_s(const FleetParams& p) const { return timer_steps * p.dt_s; }
};

enum class ControlAction { kNone, kBlockRequests, kInterrupt };

/// Advance the tank temperature by one step. `heating` is the element
/// state over the elapsed interval; `draw_volume_l` is water drawn this
/// step (0 for none).
double thermal_advance(double temp_c, bool heating, double draw_volume_l,
                       const FleetParams& params);

DeviceState thermal_step(DeviceState d, double draw_volume_l,
                         const FleetParams& params);

/// Timer law: ON devices age by one step and complete after holding the
/// full epoch (the final consuming step has timer == epoch).
DeviceState timer_step(DeviceState d, const FleetParams& params,
                       bool* completed = nullptr);

DeviceState opt_out_check(DeviceState d, const FleetParams& params);

DeviceState local_control(DeviceState d, double df_hz,
                          const ControlPolicy& policy,
                          const FleetParams& params,
                          ControlAction* action = nullptr);

struct FleetCounts {
  std::int64_t standby = 0;
  std::int64_t on = 0;
  std::int64_t interrupted = 0;
  std::int64_t opted_out = 0;
};

struct FleetStepResult {
  std::int64_t requests = 0;       ///< packet requests sent this step
  std::int64_t completions = 0;    ///< packets finished naturally
  std::int64_t interruptions = 0;  ///< packets dropped by the local law
  std::int64_t optout_activations = 0;
  /// Timer values (pre-increment) of ON devices that opted out this step;
  /// lets the aggregator keep its histogram an exact mirror.
  std::vector<int> optout_exit_timers;
};

/// The device population. Updates are embarrassingly parallel; all
/// randomness is counter-based per (seed, device, step), and aggregate
/// counts are integer sums, so results are identical for any worker count.
class Fleet {
 public:
  Fleet(const FleetParams& params, const ControlPolicy& policy,
        std::uint64_t seed);

  /// Cold start: everybody standby, temperatures spread around the set
  /// point.
  void init_standby();

  /// Quasi-steady start: enough devices ON to carry `target_on_mw`,
  /// timers spread uniformly over the epoch.
  void init_uniform(double target_on_mw);

  /// One simulation step. `df_hz` holds per-area frequency deviations as
  /// sensed by the devices; `step_index` feeds the RNG counters.
  FleetStepResult step(std::span<const double> df_hz, long step_index,
                       bool draws_enabled);

  /// Turn ON the first `quota` devices (by index) that requested in the
  /// last step(). Returns the number actually energized.
  std::int64_t commit_accepts(std::int64_t quota);

  FleetCounts counts() const;
  /// Devices currently consuming a packet (timer >= 1); equals the
  /// aggregator histogram total between steps.
  std::int64_t consuming_count() const;
  std::int64_t on_count() const;
  std::int64_t forced_heating_count() const;
  double mean_temp_c() const;

  const FleetParams& params() const { return params_; }
  const ControlPolicy& policy() const { return policy_; }
  void set_eta_max(double eta_max);
  std::uint64_t seed() const { return seed_; }
  void set_threads(int n) { threads_ = n; }

  // read-only views for tests and traces
  std::span<const double> temps() const { return temps_; }
  std::span<const std::int32_t> timers() const { return timers_; }
  std::span<const std::uint8_t> modes() const { return modes_; }

  DeviceState device(std::int64_t i) const;
  void set_device(std::int64_t i, const DeviceState& d);

 private:
  FleetParams params_;
  ControlPolicy policy_;
  std::uint64_t seed_;
  int threads_ = 0;  // 0 = library default

  std::vector<double> temps_;
  std::vector<std::int32_t> timers_;
  std::vector<std::uint8_t> modes_;
  std::vector<std::int32_t> cooldowns_;

  // requester indices from the last step(), ascending
  std::vector<std::uint32_t> requesters_;

  // cached per-step constants
  int n_p_ = 0;
};

}  // namespace pemfreq
