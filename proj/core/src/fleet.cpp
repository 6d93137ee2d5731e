#include "pemfreq/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pemfreq {

namespace {
constexpr std::int64_t kChunk = 16384;
constexpr double kTwoPow32 = 4294967296.0;
}  // namespace

void ControlPolicy::validate() const {
  if (!(eta_max >= 0.0 && eta_max <= 1.0))
    throw ConfigError("eta_max must lie in [0, 1]");
  if (!(max_dev_hz < deadband_hz && deadband_hz < 0.0))
    throw ConfigError(
        "control thresholds must satisfy max_dev_hz < deadband_hz < 0");
}

void FleetParams::validate() const {
  if (n_devices < 0) throw ConfigError("n_devices must be >= 0");
  if (!(packet_power_mw > 0.0)) throw ConfigError("packet_power_mw must be > 0");
  if (!(element_power_kw > 0.0)) throw ConfigError("element_power_kw must be > 0");
  if (!(dt_s > 0.0)) throw ConfigError("dt_s must be > 0");
  if (!(epoch_s > 0.0)) throw ConfigError("epoch_s must be > 0");
  if (!(mttr_s > 0.0)) throw ConfigError("mttr_s must be > 0");
  const double ratio = epoch_s / dt_s;
  if (std::abs(ratio - std::floor(ratio + 0.5)) > 1e-9)
    throw ConfigError("epoch_s must be an integer multiple of dt_s");
  if (!(temp_min_c < temp_set_c && temp_set_c < temp_max_c))
    throw ConfigError("temperatures must satisfy temp_min_c < temp_set_c < temp_max_c");
  if (!(tank_capacity_kwh_per_c > 0.0))
    throw ConfigError("tank_capacity_kwh_per_c must be > 0");
  if (loss_coeff_kw_per_c < 0.0)
    throw ConfigError("loss_coeff_kw_per_c must be >= 0");
  if (!(tank_volume_l > 0.0)) throw ConfigError("tank_volume_l must be > 0");
  if (draw_rate_per_hour < 0.0 || draw_mean_volume_l < 0.0)
    throw ConfigError("draw process parameters must be >= 0");
}

double mu_rate(double temp_c, const FleetParams& p) {
  if (temp_c >= p.temp_max_c) return 0.0;
  if (temp_c <= p.temp_min_c) return std::numeric_limits<double>::infinity();
  const double shape = (p.temp_set_c - p.temp_min_c) / (p.temp_max_c - p.temp_set_c);
  return (1.0 / p.mttr_s) * ((p.temp_max_c - temp_c) / (temp_c - p.temp_min_c)) *
         shape;
}

double request_probability(double temp_c, const FleetParams& p) {
  const double mu = mu_rate(temp_c, p);
  if (std::isinf(mu)) return 1.0;
  const double x = mu * p.dt_s;
  if (x < 1e-3) return x * (1.0 - 0.5 * x + x * x / 6.0);
  return -std::expm1(-x);
}

double eta(double df_hz, const ControlPolicy& policy) {
  if (df_hz > policy.deadband_hz) return 0.0;
  if (df_hz < policy.max_dev_hz) return policy.eta_max;
  return policy.eta_max * (df_hz - policy.deadband_hz) /
         (policy.max_dev_hz - policy.deadband_hz);
}

int interrupt_threshold_steps(double eta_value, int n_p) {
  if (!(eta_value > 0.0)) return n_p + 1;
  // tolerate representation residue so e.g. eta = 1/6, n_p = 1800 lands
  // exactly on 1500
  const int thr =
      static_cast<int>(std::ceil((1.0 - eta_value) * n_p - 1e-9));
  return std::max(thr, 1);
}

double thermal_advance(double temp_c, bool heating, double draw_volume_l,
                       const FleetParams& p) {
  // written in the exact expression shape the bulk fleet loop uses, so
  // the two paths agree bit for bit
  const double dt_h = p.dt_s / 3600.0;
  const double heat_gain =
      dt_h * p.element_power_kw / p.tank_capacity_kwh_per_c;
  const double loss_gain =
      dt_h * p.loss_coeff_kw_per_c / p.tank_capacity_kwh_per_c;
  double t = temp_c + (heating ? heat_gain : 0.0) -
             loss_gain * (temp_c - p.ambient_c);
  if (draw_volume_l > 0.0)
    t += draw_volume_l * (1.0 / p.tank_volume_l) * (p.inlet_c - t);
  if (!std::isfinite(t))
    throw DeviceFault("non-finite tank temperature");
  return t;
}

DeviceState thermal_step(DeviceState d, double draw_volume_l,
                         const FleetParams& p) {
  if (draw_volume_l < 0.0) throw ConfigError("draw volume must be >= 0");
  d.temp_c = thermal_advance(
      d.temp_c, d.switch_on() || d.mode == DeviceMode::kOptedOutCold,
      draw_volume_l, p);
  return d;
}

DeviceState timer_step(DeviceState d, const FleetParams& p, bool* completed) {
  bool done = false;
  if (d.mode == DeviceMode::kOn) {
    if (d.timer_steps >= p.n_p()) {
      d.mode = DeviceMode::kStandby;
      d.timer_steps = 0;
      done = true;
    } else {
      ++d.timer_steps;
    }
  } else {
    d.timer_steps = 0;
  }
  if (completed) *completed = done;
  return d;
}

DeviceState opt_out_check(DeviceState d, const FleetParams& p) {
  switch (d.mode) {
    case DeviceMode::kOn:
      if (d.temp_c > p.temp_max_c) {
        d.mode = DeviceMode::kOptedOutHot;
        d.timer_steps = 0;
      }
      break;
    case DeviceMode::kOptedOutHot:
      if (d.temp_c <= p.temp_max_c) d.mode = DeviceMode::kStandby;
      break;
    case DeviceMode::kStandby:
    case DeviceMode::kInterrupted:
      if (d.temp_c < p.temp_min_c) d.mode = DeviceMode::kOptedOutCold;
      break;
    case DeviceMode::kOptedOutCold:
      if (d.temp_c >= p.temp_min_c) d.mode = DeviceMode::kStandby;
      break;
  }
  return d;
}

DeviceState local_control(DeviceState d, double df_hz,
                          const ControlPolicy& policy, const FleetParams& p,
                          ControlAction* action) {
  ControlAction a = ControlAction::kNone;
  if (df_hz <= policy.deadband_hz) {
    a = ControlAction::kBlockRequests;
    const double e = eta(df_hz, policy);
    const int thr = interrupt_threshold_steps(e, p.n_p());
    if (d.mode == DeviceMode::kOn && d.timer_steps >= thr) {
      d.mode = DeviceMode::kInterrupted;
      d.timer_steps = 0;
      a = ControlAction::kInterrupt;
    }
  } else if (d.mode == DeviceMode::kInterrupted) {
    d.mode = DeviceMode::kStandby;
    d.cooldown_steps = p.n_p();
  }
  return (action ? (*action = a, d) : d);
}

Fleet::Fleet(const FleetParams& params, const ControlPolicy& policy,
             std::uint64_t seed)
    : params_(params), policy_(policy), seed_(seed) {
  params_.validate();
  policy_.validate();
  n_p_ = params_.n_p();
  init_standby();
}

void Fleet::init_standby() {
  const auto n = static_cast<std::size_t>(params_.n_devices);
  temps_.resize(n);
  timers_.assign(n, 0);
  modes_.assign(n, static_cast<std::uint8_t>(DeviceMode::kStandby));
  cooldowns_.assign(n, 0);
  requesters_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng::uniform_at(seed_, rng::kTagInitTemp, i, 0);
    temps_[i] = params_.temp_set_c + (u - 0.5);
  }
}

void Fleet::init_uniform(double target_on_mw) {
  init_standby();
  const std::int64_t want =
      static_cast<std::int64_t>(std::floor(target_on_mw / params_.packet_power_mw));
  const std::int64_t n_on = std::min<std::int64_t>(want, params_.n_devices);
  for (std::int64_t i = 0; i < n_on; ++i) {
    modes_[i] = static_cast<std::uint8_t>(DeviceMode::kOn);
    timers_[i] = 1 + static_cast<std::int32_t>(i % n_p_);
  }
}

FleetStepResult Fleet::step(std::span<const double> df_hz, long step_index,
                            bool draws_enabled) {
  if (params_.area < 0 || static_cast<std::size_t>(params_.area) >= df_hz.size())
    throw ConfigError("fleet area index outside grid");
  const double df = df_hz[params_.area];
  const bool blocked = df <= policy_.deadband_hz;
  const double eta_val = eta(df, policy_);
  const int thr = interrupt_threshold_steps(eta_val, n_p_);

  const std::int64_t n = params_.n_devices;
  const std::int64_t n_chunks = (n + kChunk - 1) / kChunk;

  struct ChunkOut {
    std::int64_t requests = 0, completions = 0, interruptions = 0, optouts = 0;
    std::vector<std::uint32_t> requesters;
    std::vector<int> optout_exits;
  };
  std::vector<ChunkOut> outs(static_cast<std::size_t>(n_chunks));

  // thermal constants
  const double dt_h = params_.dt_s / 3600.0;
  const double heat_gain = dt_h * params_.element_power_kw / params_.tank_capacity_kwh_per_c;
  const double loss_gain = dt_h * params_.loss_coeff_kw_per_c / params_.tank_capacity_kwh_per_c;
  const double t_amb = params_.ambient_c;
  const double t_in = params_.inlet_c;
  const double inv_tank = 1.0 / params_.tank_volume_l;
  const double p_draw = params_.draw_rate_per_hour * dt_h;
  const std::uint32_t draw_thresh =
      static_cast<std::uint32_t>(std::min(p_draw, 1.0) * kTwoPow32);
  const auto step_u = static_cast<std::uint64_t>(step_index);

#ifdef _OPENMP
  const int nt = threads_ > 0 ? threads_ : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    ChunkOut& out = outs[static_cast<std::size_t>(c)];
    const std::int64_t lo = c * kChunk;
    const std::int64_t hi = std::min(lo + kChunk, n);
    for (std::int64_t i = lo; i < hi; ++i) {
      auto mode = static_cast<DeviceMode>(modes_[i]);
      double temp = temps_[i];
      std::int32_t s = timers_[i];

      const std::uint64_t h =
          rng::at(seed_, rng::kTagRequest, static_cast<std::uint64_t>(i), step_u);

      // thermal, with the element state held over the elapsed interval
      const bool heating =
          mode == DeviceMode::kOn || mode == DeviceMode::kOptedOutCold;
      temp = temp + (heating ? heat_gain : 0.0) - loss_gain * (temp - t_amb);
      if (draws_enabled &&
          static_cast<std::uint32_t>(h >> 32) < draw_thresh) {
        const double u = rng::uniform_at(seed_, rng::kTagDrawVolume,
                                         static_cast<std::uint64_t>(i), step_u);
        const double vol =
            std::min(-params_.draw_mean_volume_l * std::log(1.0 - u),
                     0.5 * params_.tank_volume_l);
        temp += vol * inv_tank * (t_in - temp);
      }

      // packet completion: the final consuming step holds timer == n_p
      if (mode == DeviceMode::kOn && s >= n_p_) {
        mode = DeviceMode::kStandby;
        s = 0;
        ++out.completions;
      }

      // comfort-band opt-out
      switch (mode) {
        case DeviceMode::kOn:
          if (temp > params_.temp_max_c) {
            out.optout_exits.push_back(s);
            mode = DeviceMode::kOptedOutHot;
            s = 0;
            ++out.optouts;
          }
          break;
        case DeviceMode::kOptedOutHot:
          if (temp <= params_.temp_max_c) mode = DeviceMode::kStandby;
          break;
        case DeviceMode::kStandby:
        case DeviceMode::kInterrupted:
          if (temp < params_.temp_min_c) {
            mode = DeviceMode::kOptedOutCold;
            ++out.optouts;
          }
          break;
        case DeviceMode::kOptedOutCold:
          if (temp >= params_.temp_min_c) mode = DeviceMode::kStandby;
          break;
      }

      // decentralized control
      if (blocked) {
        if (mode == DeviceMode::kOn && s >= thr) {
          mode = DeviceMode::kInterrupted;
          s = 0;
          ++out.interruptions;
        }
      } else if (mode == DeviceMode::kInterrupted) {
        mode = DeviceMode::kStandby;
        cooldowns_[i] = n_p_;
      }

      // timer
      if (mode == DeviceMode::kOn) {
        ++s;
      } else {
        s = 0;
      }

      // stochastic packet request
      if (mode == DeviceMode::kStandby) {
        if (cooldowns_[i] > 0) {
          --cooldowns_[i];
        } else if (!blocked) {
          double p_req;
          if (temp >= params_.temp_max_c) {
            p_req = 0.0;
          } else if (temp <= params_.temp_min_c) {
            p_req = 1.0;
          } else {
            const double shape = (params_.temp_set_c - params_.temp_min_c) /
                                 (params_.temp_max_c - params_.temp_set_c);
            const double mu = (1.0 / params_.mttr_s) *
                              ((params_.temp_max_c - temp) / (temp - params_.temp_min_c)) *
                              shape;
            const double x = mu * params_.dt_s;
            p_req = x < 1e-3 ? x * (1.0 - 0.5 * x + x * x / 6.0)
                             : -std::expm1(-x);
          }
          const auto thresh_u = static_cast<std::uint64_t>(p_req * kTwoPow32);
          if ((h & 0xffffffffull) < thresh_u) {
            out.requesters.push_back(static_cast<std::uint32_t>(i));
            ++out.requests;
          }
        }
      }

      temps_[i] = temp;
      timers_[i] = s;
      modes_[i] = static_cast<std::uint8_t>(mode);
    }
  }

  FleetStepResult result;
  requesters_.clear();
  for (const auto& out : outs) {
    result.requests += out.requests;
    result.completions += out.completions;
    result.interruptions += out.interruptions;
    result.optout_activations += out.optouts;
    requesters_.insert(requesters_.end(), out.requesters.begin(),
                       out.requesters.end());
    result.optout_exit_timers.insert(result.optout_exit_timers.end(),
                                     out.optout_exits.begin(),
                                     out.optout_exits.end());
  }
  return result;
}

std::int64_t Fleet::commit_accepts(std::int64_t quota) {
  const std::int64_t granted =
      std::min<std::int64_t>(quota, static_cast<std::int64_t>(requesters_.size()));
  for (std::int64_t k = 0; k < granted; ++k) {
    const std::uint32_t i = requesters_[static_cast<std::size_t>(k)];
    modes_[i] = static_cast<std::uint8_t>(DeviceMode::kOn);
    timers_[i] = 0;
  }
  requesters_.clear();
  return granted;
}

FleetCounts Fleet::counts() const {
  FleetCounts c;
  for (std::uint8_t m : modes_) {
    switch (static_cast<DeviceMode>(m)) {
      case DeviceMode::kStandby: ++c.standby; break;
      case DeviceMode::kOn: ++c.on; break;
      case DeviceMode::kInterrupted: ++c.interrupted; break;
      default: ++c.opted_out; break;
    }
  }
  return c;
}

std::int64_t Fleet::consuming_count() const {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < modes_.size(); ++i)
    if (static_cast<DeviceMode>(modes_[i]) == DeviceMode::kOn && timers_[i] >= 1)
      ++n;
  return n;
}

std::int64_t Fleet::on_count() const {
  std::int64_t n = 0;
  for (std::uint8_t m : modes_)
    if (static_cast<DeviceMode>(m) == DeviceMode::kOn) ++n;
  return n;
}

std::int64_t Fleet::forced_heating_count() const {
  std::int64_t n = 0;
  for (std::uint8_t m : modes_)
    if (static_cast<DeviceMode>(m) == DeviceMode::kOptedOutCold) ++n;
  return n;
}

double Fleet::mean_temp_c() const {
  if (temps_.empty()) return 0.0;
  double sum = 0.0;
  for (double t : temps_) sum += t;
  return sum / static_cast<double>(temps_.size());
}

void Fleet::set_eta_max(double eta_max) {
  policy_.eta_max = eta_max;
  policy_.validate();
}

DeviceState Fleet::device(std::int64_t i) const {
  DeviceState d;
  d.temp_c = temps_[static_cast<std::size_t>(i)];
  d.timer_steps = timers_[static_cast<std::size_t>(i)];
  d.mode = static_cast<DeviceMode>(modes_[static_cast<std::size_t>(i)]);
  d.cooldown_steps = cooldowns_[static_cast<std::size_t>(i)];
  return d;
}

void Fleet::set_device(std::int64_t i, const DeviceState& d) {
  temps_[static_cast<std::size_t>(i)] = d.temp_c;
  timers_[static_cast<std::size_t>(i)] = d.timer_steps;
  modes_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(d.mode);
  cooldowns_[static_cast<std::size_t>(i)] = d.cooldown_steps;
}

}  // namespace pemfreq
