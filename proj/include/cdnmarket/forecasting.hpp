#pragma once

#include <optional>
#include <vector>

namespace cdnmarket {

struct ForecasterConfig {
  double bandwidth = 2.0;        // day-index units; used until auto selection has data
  bool auto_bandwidth = true;    // weekly leave-one-out refresh over the grid below
  double bandwidth_min = 0.8;
  double bandwidth_max = 5.1;
  double bandwidth_step = 0.1;
  int reference_period_days = 7;
  double thldm_multiplier = 5.0; // transient-high-load threshold, x rolling median; > 1
  double irdm_decay = 0.0;       // post-peak geometric decay per slot; 0 = off
  double dedm_blend = 0.5;       // next-day deviation blend; 0 = off
  double min_volume_gb = 1.0 / 1073741824.0;

  void validate() const; // throws std::invalid_argument
};

struct StepForecast {
  int day = 0;
  double predicted_gb = 0.0;
};

// Kernel regression over the same weekly-phase history, Gaussian weights by
// day-index distance. Flagged slots are excluded. Empty usable history is a
// cold start and yields nullopt (the caller falls back to declared orders).
std::optional<double> kre_estimate(const std::vector<double>& history, const ForecasterConfig& cfg,
                                   int target_day, const std::vector<bool>* excluded = nullptr);

// Flags slots whose volume exceeds multiplier x rolling median of the
// surrounding reference period. An absolute floor of min_volume_gb keeps
// all-zero stretches unflagged.
std::vector<bool> detect_transient_high_load(const std::vector<double>& history,
                                             const ForecasterConfig& cfg);

// Nonnegative step function over the next frame.
std::vector<StepForecast> stepize(const std::vector<double>& estimates, int first_day);

// Steps at weekly phases just after a local maximum of the smoothed last
// reference period decay geometrically: estimate * (1 - irdm_decay)^k for the
// k-th slot of the descending run. Identity when irdm_decay is 0.
std::vector<StepForecast> apply_inertia(std::vector<StepForecast> steps,
                                        const std::vector<double>& history,
                                        const ForecasterConfig& cfg);

// Scales the next frame by 1 + blend * (actual - forecast) / max(forecast, eps),
// clamped to >= 0. Identity when dedm_blend is 0.
std::vector<StepForecast> deviation_adjust(std::vector<StepForecast> next_frame,
                                           double today_forecast, double today_actual,
                                           const ForecasterConfig& cfg);

// First-week reservations equal the declared orders, one per day of the
// reference period.
std::vector<StepForecast> initial_reservation(const std::vector<double>& orders,
                                              const ForecasterConfig& cfg);

// The forecast is a binding upper limit on the reservation.
double reservation_cap(double requested_gb, const StepForecast& forecast);

// Per-OS pipeline: THLDM exclusion, kernel regression with weekly
// leave-one-out bandwidth selection, IRDM, DEDM. Call note_order() for the
// declared first-week reservations, then predict(day) before observe(day).
class Forecaster {
 public:
  explicit Forecaster(ForecasterConfig cfg);

  void note_order(int day, double ordered_gb); // days 0..6
  double predict(int day);                     // day >= reference period
  void observe(int day, double actual_gb);

  double bandwidth() const { return bandwidth_; }
  const std::vector<bool>& flagged() const { return flagged_; }

 private:
  double loo_bandwidth() const;

  ForecasterConfig cfg_;
  std::vector<double> history_;
  std::vector<bool> flagged_;
  std::vector<double> noted_forecast_; // what was actually reserved per day
  double bandwidth_;
  double deviation_factor_ = 1.0;
  int deviation_day_ = -1; // day the factor applies to
};

} // namespace cdnmarket
