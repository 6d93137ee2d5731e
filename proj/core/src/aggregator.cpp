#include "pemfreq/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pemfreq/errors.hpp"

namespace pemfreq {

TimerHistogram::TimerHistogram(int n_bins) {
  if (n_bins <= 0) throw ConfigError("histogram needs at least one bin");
  buf_.assign(static_cast<std::size_t>(n_bins), 0);
}

TimerHistogram TimerHistogram::from_bins(
    const std::vector<std::int64_t>& bins) {
  TimerHistogram h(static_cast<int>(bins.size()));
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i] < 0) throw ConfigError("histogram bins must be >= 0");
    h.buf_[i] = bins[i];
    h.total_ += bins[i];
  }
  return h;
}

std::size_t TimerHistogram::index(int i) const {
  return (head_ + static_cast<std::size_t>(i - 1)) % buf_.size();
}

std::int64_t TimerHistogram::bin(int i) const {
  if (i < 1 || i > n_bins()) throw ConfigError("histogram bin out of range");
  return buf_[index(i)];
}

std::vector<std::int64_t> TimerHistogram::bins() const {
  std::vector<std::int64_t> out(buf_.size());
  for (int i = 1; i <= n_bins(); ++i)
    out[static_cast<std::size_t>(i - 1)] = buf_[index(i)];
  return out;
}

std::int64_t TimerHistogram::advance(std::int64_t accepted) {
  if (accepted < 0) throw ConfigError("accepted count must be >= 0");
  const std::size_t last = index(n_bins());
  const std::int64_t completions = buf_[last];
  // the old last bin becomes the new first bin
  head_ = last;
  buf_[head_] = accepted;
  total_ += accepted - completions;
  return completions;
}

std::int64_t TimerHistogram::zero_range(int first, int last) {
  first = std::max(first, 1);
  last = std::min(last, n_bins());
  std::int64_t removed = 0;
  for (int i = first; i <= last; ++i) {
    removed += buf_[index(i)];
    buf_[index(i)] = 0;
  }
  total_ -= removed;
  return removed;
}

void TimerHistogram::remove_one(int i) {
  if (bin(i) <= 0)
    throw ConfigError("histogram bin " + std::to_string(i) +
                      " is empty; cannot remove");
  --buf_[index(i)];
  --total_;
}

std::pair<TimerHistogram, std::int64_t> histogram_step(const TimerHistogram& x,
                                                       std::int64_t accepted) {
  TimerHistogram next = x;
  const std::int64_t completions = next.advance(accepted);
  return {std::move(next), completions};
}

double mean_bin(const TimerHistogram& x) {
  if (x.n_bins() == 0) return 0.0;
  return static_cast<double>(x.total()) / x.n_bins();
}

std::int64_t accept_requests(std::int64_t requests, double p_ref_mw,
                             double p_current_mw, double packet_power_mw) {
  if (requests < 0 || p_ref_mw < 0.0 || p_current_mw < 0.0)
    throw ConfigError("accept_requests inputs must be >= 0");
  if (!(packet_power_mw > 0.0))
    throw ConfigError("packet power must be > 0");
  const double headroom = p_ref_mw - p_current_mw;
  if (headroom <= 0.0) return 0;
  const auto slots =
      static_cast<std::int64_t>(std::floor(headroom / packet_power_mw));
  return std::min(requests, slots);
}

const char* to_string(DampingRegime r) {
  switch (r) {
    case DampingRegime::kDeadband: return "DEADBAND";
    case DampingRegime::kLinear: return "LINEAR";
    case DampingRegime::kSaturated: return "SATURATED";
  }
  return "?";
}

DampingEstimate damping_estimate_uniform(const ControlPolicy& policy,
                                         double packet_power_mw, int n_p,
                                         double xbar_nom, double df_nadir_hz) {
  policy.validate();
  if (n_p <= 0 || xbar_nom < 0.0 || !(packet_power_mw > 0.0))
    throw ConfigError("damping_estimate_uniform: invalid fleet inputs");

  DampingEstimate e;
  e.xbar_nom = xbar_nom;
  e.n_p = n_p;
  e.packet_power_mw = packet_power_mw;
  e.policy = policy;
  e.df_nadir_hz = df_nadir_hz;

  const double on_power = packet_power_mw * policy.eta_max * n_p * xbar_nom;
  if (df_nadir_hz > policy.deadband_hz) {
    e.regime = DampingRegime::kDeadband;
    e.d_pem_mw_per_hz = 0.0;
  } else if (df_nadir_hz >= policy.max_dev_hz) {
    e.regime = DampingRegime::kLinear;
    const double denom = policy.deadband_hz - policy.max_dev_hz;
    if (!(denom > 0.0))
      throw ConfigError("damping estimate: non-positive threshold span");
    e.d_pem_mw_per_hz = on_power / denom;
  } else {
    e.regime = DampingRegime::kSaturated;
    const double denom = policy.deadband_hz - df_nadir_hz;
    if (!(denom > 0.0))
      throw ConfigError("damping estimate: non-positive nadir span");
    e.d_pem_mw_per_hz = on_power / denom;
  }
  return e;
}

PemLoadDrop pem_load_drop(const TimerHistogram& x, double eta_value,
                          double packet_power_mw) {
  if (!(eta_value >= 0.0 && eta_value <= 1.0))
    throw ConfigError("eta must lie in [0, 1]");
  PemLoadDrop drop;
  drop.approx_mw =
      packet_power_mw * eta_value * static_cast<double>(x.total());
  if (eta_value > 0.0) {
    // the last bin completes this step regardless of eta, so only bins
    // [threshold, n_p - 1] are interruption-induced load relief
    const int first = interrupt_threshold_steps(eta_value, x.n_bins());
    std::int64_t sum = 0;
    for (int i = first; i < x.n_bins(); ++i) sum += x.bin(i);
    drop.exact_mw = packet_power_mw * static_cast<double>(sum);
  }
  return drop;
}

AssumptionDiagnostics assumption_monitor(const TimerHistogram& x,
                                         std::span<const double> xbar_history,
                                         double epoch_s) {
  AssumptionDiagnostics d;
  d.eta_completion_threshold = 30.0 / epoch_s;

  const double xbar = mean_bin(x);
  if (xbar > 0.0) {
    double max_dev = 0.0;
    for (int i = 1; i <= x.n_bins(); ++i)
      max_dev = std::max(max_dev,
                         std::abs(static_cast<double>(x.bin(i)) - xbar));
    d.max_bin_rel_deviation = max_dev / xbar;
  }
  if (xbar_history.size() >= 2 && xbar_history.back() > 0.0) {
    d.xbar_drift_rel =
        std::abs(xbar_history.back() - xbar_history.front()) /
        xbar_history.back();
  }
  d.uniformity_ok = d.max_bin_rel_deviation <= 0.5;
  d.drift_ok = d.xbar_drift_rel <= 0.05;
  return d;
}

Aggregator::Aggregator(int n_p, double packet_power_mw)
    : hist_(n_p), packet_power_mw_(packet_power_mw) {
  if (!(packet_power_mw > 0.0)) throw ConfigError("packet power must be > 0");
}

Aggregator::AdvanceResult Aggregator::advance(std::int64_t accepted_prev,
                                              bool blocked, double eta_value) {
  AdvanceResult r;
  if (blocked && eta_value > 0.0) {
    // Completion takes priority over interruption in the device rule, so
    // the last bin is left for the shift to report as completions.
    const int thr = interrupt_threshold_steps(eta_value, hist_.n_bins());
    r.interruptions = hist_.zero_range(thr, hist_.n_bins() - 1);
  }
  r.completions = hist_.advance(accepted_prev);
  return r;
}

void Aggregator::remove_exits(std::span<const int> entry_timers,
                              bool zeroed_this_step, int threshold_steps) {
  for (int s : entry_timers) {
    if (zeroed_this_step && s >= threshold_steps) continue;
    const int bin = s + 1;  // post-shift position of an entry timer
    if (bin >= 1 && bin <= hist_.n_bins()) hist_.remove_one(bin);
  }
}

}  // namespace pemfreq
