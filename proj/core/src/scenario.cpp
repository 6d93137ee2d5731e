#include "pemfreq/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pemfreq/errors.hpp"

namespace pemfreq {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

/// Section-scoped key reader: required/optional accessors, default echo,
/// and unknown-key rejection on finish().
class Section {
 public:
  Section(const json& obj, std::string prefix,
          std::vector<std::string>* defaulted)
      : obj_(obj), prefix_(std::move(prefix)), defaulted_(defaulted) {
    if (!obj_.is_object())
      throw ConfigError("scenario: '" + prefix_ + "' must be an object");
  }

  template <typename T>
  void required(const char* key, T* out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end())
      throw ConfigError("scenario: missing required key '" + path(key) + "'");
    assign(key, *it, out);
  }

  template <typename T>
  void optional(const char* key, T* out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      if (defaulted_)
        defaulted_->push_back(path(key) + " = " + json(*out).dump() +
                              " (defaulted)");
      return;
    }
    assign(key, *it, out);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key()))
        throw ConfigError("scenario: unknown key '" + path(it.key()) + "'");
    }
  }

  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

 private:
  template <typename T>
  void assign(const char* key, const json& value, T* out) {
    try {
      *out = value.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("scenario: key '" + path(key) +
                        "' has the wrong type");
    }
  }

  const json& obj_;
  std::string prefix_;
  std::vector<std::string>* defaulted_;
  std::set<std::string> seen_;
};

NetworkModel parse_network(const json& j, std::vector<std::string>* defaulted) {
  NetworkModel net;
  Section sec(j, "network", defaulted);
  sec.optional("f0_hz", &net.f0_hz);

  const json* areas = sec.child("areas");
  if (!areas || !areas->is_array() || areas->empty())
    throw ConfigError("scenario: 'network.areas' must be a non-empty array");
  for (std::size_t i = 0; i < areas->size(); ++i) {
    AreaParams a;
    Section as((*areas)[i], "network.areas[" + std::to_string(i) + "]",
               defaulted);
    as.optional("inertia_h_s", &a.inertia_h_s);
    as.required("base_power_mw", &a.base_power_mw);
    as.required("damping_mw_per_hz", &a.damping_mw_per_hz);
    as.required("droop_hz_per_mw", &a.droop_hz_per_mw);
    as.optional("turbine_tau_s", &a.turbine_tau_s);
    as.finish();
    net.areas.push_back(a);
  }

  const json* ties = sec.child("tie_lines");
  if (ties) {
    if (!ties->is_array())
      throw ConfigError("scenario: 'network.tie_lines' must be an array");
    for (std::size_t i = 0; i < ties->size(); ++i) {
      TieLine t;
      Section ts((*ties)[i], "network.tie_lines[" + std::to_string(i) + "]",
                 defaulted);
      ts.required("from", &t.from);
      ts.required("to", &t.to);
      ts.required("susceptance_mw_per_rad", &t.susceptance_mw_per_rad);
      ts.finish();
      net.tie_lines.push_back(t);
    }
  } else if (defaulted) {
    defaulted->push_back("network.tie_lines = [] (defaulted)");
  }
  sec.finish();
  return net;
}

FleetParams parse_fleet(const json& j, std::vector<std::string>* defaulted) {
  FleetParams f;
  Section sec(j, "fleet", defaulted);
  sec.required("n_devices", &f.n_devices);
  sec.optional("area", &f.area);
  sec.optional("packet_power_mw", &f.packet_power_mw);
  sec.optional("element_power_kw", &f.element_power_kw);
  sec.optional("epoch_s", &f.epoch_s);
  sec.optional("mttr_s", &f.mttr_s);
  sec.optional("temp_set_c", &f.temp_set_c);
  sec.optional("temp_min_c", &f.temp_min_c);
  sec.optional("temp_max_c", &f.temp_max_c);
  sec.optional("tank_capacity_kwh_per_c", &f.tank_capacity_kwh_per_c);
  sec.optional("loss_coeff_kw_per_c", &f.loss_coeff_kw_per_c);
  sec.optional("ambient_c", &f.ambient_c);
  sec.optional("inlet_c", &f.inlet_c);
  sec.optional("draw_rate_per_hour", &f.draw_rate_per_hour);
  sec.optional("draw_mean_volume_l", &f.draw_mean_volume_l);
  sec.optional("tank_volume_l", &f.tank_volume_l);
  sec.optional("draws_during_event", &f.draws_during_event);
  sec.finish();
  return f;
}

ControlPolicy parse_policy(const json& j, std::vector<std::string>* defaulted) {
  ControlPolicy p;
  Section sec(j, "policy", defaulted);
  sec.optional("eta_max", &p.eta_max);
  // the file carries positive under-frequency magnitudes in mHz
  double db_mhz = -p.deadband_hz * 1e3;
  double max_mhz = -p.max_dev_hz * 1e3;
  sec.optional("deadband_mhz", &db_mhz);
  sec.optional("max_dev_mhz", &max_mhz);
  sec.finish();
  if (!(db_mhz > 0.0) || !(max_mhz > 0.0))
    throw ConfigError(
        "scenario: 'policy.deadband_mhz' and 'policy.max_dev_mhz' are "
        "magnitudes and must be > 0");
  p.deadband_hz = -db_mhz * 1e-3;
  p.max_dev_hz = -max_mhz * 1e-3;
  return p;
}

Disturbance parse_disturbance(const json& j,
                              std::vector<std::string>* defaulted) {
  Disturbance d;
  Section sec(j, "disturbance", defaulted);
  sec.optional("area", &d.area);
  sec.required("magnitude_mw", &d.magnitude_mw);
  sec.optional("onset_s", &d.onset_s);
  sec.finish();
  return d;
}

SimulationOptions parse_sim(const json& j,
                            std::vector<std::string>* defaulted) {
  SimulationOptions s;
  Section sec(j, "simulation", defaulted);
  sec.optional("dt_s", &s.dt_s);
  sec.optional("warmup_s", &s.warmup_s);
  sec.optional("horizon_s", &s.horizon_s);
  sec.optional("p_ref_mw", &s.p_ref_mw);
  sec.optional("seed", &s.seed);
  sec.optional("grid_substeps", &s.grid_substeps);
  sec.optional("rocof_window_s", &s.rocof_window_s);
  sec.optional("f_inf_window_s", &s.f_inf_window_s);
  sec.optional("freq_meas_window_s", &s.freq_meas_window_s);
  sec.optional("fast_init", &s.fast_init);
  sec.optional("threads", &s.threads);
  sec.finish();
  return s;
}

OutputOptions parse_output(const json& j,
                           std::vector<std::string>* defaulted) {
  OutputOptions o;
  Section sec(j, "output", defaulted);
  sec.optional("timeseries", &o.timeseries);
  sec.optional("histogram_interval_s", &o.histogram_interval_s);
  sec.optional("device_trace_count", &o.device_trace_count);
  sec.finish();
  return o;
}

}  // namespace

double Scenario::p_ref_mw() const {
  if (sim.p_ref_mw > 0.0) return sim.p_ref_mw;
  return 0.25 * static_cast<double>(fleet.n_devices) * fleet.packet_power_mw;
}

void Scenario::validate() const {
  network.validate();
  fleet.validate();
  policy.validate();

  const int n_areas = static_cast<int>(network.size());
  if (fleet.area < 0 || fleet.area >= n_areas)
    throw ConfigError("scenario: 'fleet.area' out of range");
  if (disturbance.area < 0 || disturbance.area >= n_areas)
    throw ConfigError("scenario: 'disturbance.area' out of range");
  if (disturbance.onset_s < 0.0)
    throw ConfigError("scenario: 'disturbance.onset_s' must be >= 0");

  if (!(sim.dt_s > 0.0))
    throw ConfigError("scenario: 'simulation.dt_s' must be > 0");
  if (fleet.dt_s != sim.dt_s)
    throw ConfigError("scenario: fleet step size must match simulation.dt_s");
  if (sim.warmup_s < 0.0)
    throw ConfigError("scenario: 'simulation.warmup_s' must be >= 0");
  if (!(sim.horizon_s > 0.0))
    throw ConfigError("scenario: 'simulation.horizon_s' must be > 0");
  if (disturbance.onset_s >= sim.horizon_s)
    throw ConfigError(
        "scenario: 'disturbance.onset_s' must fall inside the horizon");
  if (sim.p_ref_mw < 0.0)
    throw ConfigError("scenario: 'simulation.p_ref_mw' must be >= 0");
  if (sim.grid_substeps < 1)
    throw ConfigError("scenario: 'simulation.grid_substeps' must be >= 1");
  if (!(sim.rocof_window_s > 0.0) || !(sim.f_inf_window_s > 0.0))
    throw ConfigError("scenario: measurement windows must be > 0");
  if (sim.freq_meas_window_s < 0.0)
    throw ConfigError(
        "scenario: 'simulation.freq_meas_window_s' must be >= 0");
  if (sim.threads < 0)
    throw ConfigError("scenario: 'simulation.threads' must be >= 0");

  if (output.histogram_interval_s < 0.0)
    throw ConfigError(
        "scenario: 'output.histogram_interval_s' must be >= 0");
  if (output.device_trace_count < 0 ||
      output.device_trace_count > fleet.n_devices)
    throw ConfigError(
        "scenario: 'output.device_trace_count' out of range");
  if (!(p_ref_mw() > 0.0))
    throw ConfigError("scenario: resolved reference power must be > 0");
}

ParsedScenario parse_scenario_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: malformed JSON: ") + e.what());
  }

  ParsedScenario out;
  Section root(j, "", &out.defaulted);
  int version = kSchemaVersion;
  root.optional("version", &version);
  if (version != kSchemaVersion)
    throw ConfigError("scenario: unsupported schema version " +
                      std::to_string(version));

  const json* net = root.child("network");
  if (!net) throw ConfigError("scenario: missing required section 'network'");
  out.scenario.network = parse_network(*net, &out.defaulted);

  const json* fleet = root.child("fleet");
  if (!fleet) throw ConfigError("scenario: missing required section 'fleet'");
  out.scenario.fleet = parse_fleet(*fleet, &out.defaulted);

  if (const json* pol = root.child("policy"))
    out.scenario.policy = parse_policy(*pol, &out.defaulted);
  else
    out.defaulted.push_back("policy = <defaults> (defaulted)");

  const json* dist = root.child("disturbance");
  if (!dist)
    throw ConfigError("scenario: missing required section 'disturbance'");
  out.scenario.disturbance = parse_disturbance(*dist, &out.defaulted);

  if (const json* sim = root.child("simulation"))
    out.scenario.sim = parse_sim(*sim, &out.defaulted);
  else
    out.defaulted.push_back("simulation = <defaults> (defaulted)");

  if (const json* o = root.child("output"))
    out.scenario.output = parse_output(*o, &out.defaulted);
  else
    out.defaulted.push_back("output = <defaults> (defaulted)");

  root.finish();

  out.scenario.fleet.dt_s = out.scenario.sim.dt_s;
  out.scenario.validate();
  return out;
}

ParsedScenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

std::string emit_scenario(const Scenario& s) {
  json j;
  j["version"] = kSchemaVersion;

  json net;
  net["f0_hz"] = s.network.f0_hz;
  net["areas"] = json::array();
  for (const AreaParams& a : s.network.areas) {
    net["areas"].push_back({{"inertia_h_s", a.inertia_h_s},
                            {"base_power_mw", a.base_power_mw},
                            {"damping_mw_per_hz", a.damping_mw_per_hz},
                            {"droop_hz_per_mw", a.droop_hz_per_mw},
                            {"turbine_tau_s", a.turbine_tau_s}});
  }
  net["tie_lines"] = json::array();
  for (const TieLine& t : s.network.tie_lines) {
    net["tie_lines"].push_back(
        {{"from", t.from},
         {"to", t.to},
         {"susceptance_mw_per_rad", t.susceptance_mw_per_rad}});
  }
  j["network"] = std::move(net);

  const FleetParams& f = s.fleet;
  j["fleet"] = {{"n_devices", f.n_devices},
                {"area", f.area},
                {"packet_power_mw", f.packet_power_mw},
                {"element_power_kw", f.element_power_kw},
                {"epoch_s", f.epoch_s},
                {"mttr_s", f.mttr_s},
                {"temp_set_c", f.temp_set_c},
                {"temp_min_c", f.temp_min_c},
                {"temp_max_c", f.temp_max_c},
                {"tank_capacity_kwh_per_c", f.tank_capacity_kwh_per_c},
                {"loss_coeff_kw_per_c", f.loss_coeff_kw_per_c},
                {"ambient_c", f.ambient_c},
                {"inlet_c", f.inlet_c},
                {"draw_rate_per_hour", f.draw_rate_per_hour},
                {"draw_mean_volume_l", f.draw_mean_volume_l},
                {"tank_volume_l", f.tank_volume_l},
                {"draws_during_event", f.draws_during_event}};

  j["policy"] = {{"eta_max", s.policy.eta_max},
                 {"deadband_mhz", -s.policy.deadband_hz * 1e3},
                 {"max_dev_mhz", -s.policy.max_dev_hz * 1e3}};

  j["disturbance"] = {{"area", s.disturbance.area},
                      {"magnitude_mw", s.disturbance.magnitude_mw},
                      {"onset_s", s.disturbance.onset_s}};

  j["simulation"] = {{"dt_s", s.sim.dt_s},
                     {"warmup_s", s.sim.warmup_s},
                     {"horizon_s", s.sim.horizon_s},
                     {"p_ref_mw", s.sim.p_ref_mw},
                     {"seed", s.sim.seed},
                     {"grid_substeps", s.sim.grid_substeps},
                     {"rocof_window_s", s.sim.rocof_window_s},
                     {"f_inf_window_s", s.sim.f_inf_window_s},
                     {"freq_meas_window_s", s.sim.freq_meas_window_s},
                     {"fast_init", s.sim.fast_init},
                     {"threads", s.sim.threads}};

  j["output"] = {{"timeseries", s.output.timeseries},
                 {"histogram_interval_s", s.output.histogram_interval_s},
                 {"device_trace_count", s.output.device_trace_count}};

  return j.dump(2) + "\n";
}

void subsample_fleet(Scenario& s, std::int64_t n_devices) {
  if (n_devices <= 0 || n_devices > s.fleet.n_devices)
    throw ConfigError("subsample: device count must be in (0, n_devices]");
  const double ratio =
      static_cast<double>(s.fleet.n_devices) / static_cast<double>(n_devices);
  s.fleet.n_devices = n_devices;
  // preserve aggregate MW; the physical element rating stays untouched
  s.fleet.packet_power_mw *= ratio;
  if (s.output.device_trace_count > n_devices)
    s.output.device_trace_count = static_cast<int>(n_devices);
}

}  // namespace pemfreq
