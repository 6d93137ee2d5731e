#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pemfreq/fleet.hpp"

namespace pemfreq {

/// Aggregator-side count of accepted packets by age. Bin i (1-indexed)
/// holds the devices whose packet is i steps old; the recursion is the
/// shift-and-insert x[k+1] = M x[k] + B q+[k], kept O(1) with a ring
/// buffer.
class TimerHistogram {
 public:
  TimerHistogram() = default;
  explicit TimerHistogram(int n_bins);
  static TimerHistogram from_bins(const std::vector<std::int64_t>& bins);

  int n_bins() const { return static_cast<int>(buf_.size()); }
  std::int64_t bin(int i) const;  ///< 1-indexed
  std::int64_t total() const { return total_; }
  std::vector<std::int64_t> bins() const;

  /// Shift by one bin, inserting `accepted` at bin 1. Returns the count
  /// that fell out of the last bin (packet completions).
  std::int64_t advance(std::int64_t accepted);

  /// Zero bins [first, last] (1-indexed, inclusive); returns the removed
  /// count.
  std::int64_t zero_range(int first, int last);

  /// Remove one device from bin i. Throws if the bin is empty.
  void remove_one(int i);

 private:
  std::size_t index(int i) const;
  std::vector<std::int64_t> buf_;
  std::size_t head_ = 0;  // physical index of bin 1
  std::int64_t total_ = 0;
};

/// Non-mutating form of the histogram recursion, returning the advanced
/// histogram and the completion count.
std::pair<TimerHistogram, std::int64_t> histogram_step(
    const TimerHistogram& x, std::int64_t accepted);

/// Average bin occupancy (1/n_p) * sum x.
double mean_bin(const TimerHistogram& x);

/// Packet-request acceptance against a power reference: grants
/// min(requests, floor(headroom / packet power)), never negative.
std::int64_t accept_requests(std::int64_t requests, double p_ref_mw,
                             double p_current_mw, double packet_power_mw);

enum class DampingRegime { kDeadband, kLinear, kSaturated };

const char* to_string(DampingRegime r);

/// Online estimate of the fleet's equivalent damping, with the inputs it
/// was formed from.
struct DampingEstimate {
  double d_pem_mw_per_hz = 0.0;
  DampingRegime regime = DampingRegime::kDeadband;
  double xbar_nom = 0.0;
  int n_p = 0;
  double packet_power_mw = 0.0;
  ControlPolicy policy;
  double df_nadir_hz = 0.0;
};

/// Equivalent damping of a uniformly distributed fleet:
///   0                                              nadir inside dead-band
///   P n_p xbar eta_max / (df_db - df_max)          nadir in the linear band
///   P n_p xbar eta_max / (df_db - df_nadir)        nadir beyond saturation
DampingEstimate damping_estimate_uniform(const ControlPolicy& policy,
                                         double packet_power_mw, int n_p,
                                         double xbar_nom, double df_nadir_hz);

struct PemLoadDrop {
  double exact_mw = 0.0;   ///< P * sum of bins in the interrupted range
  double approx_mw = 0.0;  ///< uniform approximation P * eta * sum x
};

PemLoadDrop pem_load_drop(const TimerHistogram& x, double eta_value,
                          double packet_power_mw);

struct AssumptionDiagnostics {
  /// max |x_i - xbar| / xbar over bins (0 for an empty histogram)
  double max_bin_rel_deviation = 0.0;
  /// |xbar(end) - xbar(start)| / xbar(end) over the supplied window
  double xbar_drift_rel = 0.0;
  /// completion-neglect bound: the estimate needs eta(nadir) > 30/epoch
  double eta_completion_threshold = 0.0;
  bool uniformity_ok = true;
  bool drift_ok = true;
};

AssumptionDiagnostics assumption_monitor(const TimerHistogram& x,
                                         std::span<const double> xbar_history,
                                         double epoch_s);

/// The aggregator actor: one histogram update per simulation step, kept
/// an exact mirror of the fleet (interrupted bins are zeroed with the
/// same threshold rule the devices apply).
class Aggregator {
 public:
  Aggregator(int n_p, double packet_power_mw);

  struct AdvanceResult {
    std::int64_t completions = 0;
    std::int64_t interruptions = 0;
  };

  /// One step: during an event (blocked, eta > 0) drop the interrupted
  /// bins, then shift with the previous step's accepted count.
  AdvanceResult advance(std::int64_t accepted_prev, bool blocked,
                        double eta_value);

  /// Mirror opt-out exits of ON devices. `entry_timers` are pre-increment
  /// timer values; exits already covered by this step's interruption
  /// zeroing are skipped.
  void remove_exits(std::span<const int> entry_timers, bool zeroed_this_step,
                    int threshold_steps);

  const TimerHistogram& histogram() const { return hist_; }
  TimerHistogram& histogram() { return hist_; }
  double packet_power_mw() const { return packet_power_mw_; }
  double pem_power_mw() const {
    return packet_power_mw_ * static_cast<double>(hist_.total());
  }
  double xbar() const { return mean_bin(hist_); }

 private:
  TimerHistogram hist_;
  double packet_power_mw_ = 0.0;
};

}  // namespace pemfreq
