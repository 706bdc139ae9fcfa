#include "cdnmarket/forecasting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cdnmarket {

namespace {

double gaussian_weight(double distance, double bandwidth) {
  double u = distance / bandwidth;
  return std::exp(-0.5 * u * u);
}

// Weighted mean of same-phase observations before target_day.
std::optional<double> same_phase_estimate(const std::vector<double>& history, int target_day,
                                          double bandwidth, const std::vector<bool>* excluded,
                                          int phase_period) {
  int phase = target_day % phase_period;
  double num = 0.0, den = 0.0;
  int limit = std::min<int>(static_cast<int>(history.size()), target_day);
  for (int j = phase; j < limit; j += phase_period) {
    if (excluded && j < static_cast<int>(excluded->size()) && (*excluded)[j]) continue;
    double w = gaussian_weight(static_cast<double>(target_day - j), bandwidth);
    num += w * history[static_cast<std::size_t>(j)];
    den += w;
  }
  if (den <= 0.0) return std::nullopt;
  return num / den;
}

double median_of(std::vector<double> values) {
  std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> smooth3(const std::vector<double>& values) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double sum = values[i];
    int count = 1;
    if (i > 0) { sum += values[i - 1]; ++count; }
    if (i + 1 < values.size()) { sum += values[i + 1]; ++count; }
    out[i] = sum / count;
  }
  return out;
}

} // namespace

void ForecasterConfig::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(std::string("ForecasterConfig: ") + msg); };
  if (!(bandwidth > 0.0)) fail("bandwidth must be > 0");
  if (!(bandwidth_min > 0.0) || bandwidth_max < bandwidth_min) fail("bandwidth grid invalid");
  if (!(bandwidth_step > 0.0)) fail("bandwidth_step must be > 0");
  if (reference_period_days != 7) fail("reference_period_days must be 7");
  if (!(thldm_multiplier > 1.0)) fail("thldm_multiplier must be > 1");
  if (irdm_decay < 0.0 || irdm_decay >= 1.0) fail("irdm_decay must be in [0, 1)");
  if (dedm_blend < 0.0 || dedm_blend > 1.0) fail("dedm_blend must be in [0, 1]");
  if (!(min_volume_gb > 0.0)) fail("min_volume_gb must be > 0");
}

std::optional<double> kre_estimate(const std::vector<double>& history, const ForecasterConfig& cfg,
                                   int target_day, const std::vector<bool>* excluded) {
  cfg.validate();
  if (target_day < 0) throw std::invalid_argument("kre_estimate: target_day must be >= 0");
  return same_phase_estimate(history, target_day, cfg.bandwidth, excluded,
                             cfg.reference_period_days);
}

std::vector<bool> detect_transient_high_load(const std::vector<double>& history,
                                             const ForecasterConfig& cfg) {
  cfg.validate();
  int n = static_cast<int>(history.size());
  if (n < cfg.reference_period_days)
    throw std::invalid_argument("detect_transient_high_load: history shorter than reference period");
  int half = cfg.reference_period_days / 2;
  std::vector<bool> flags(static_cast<std::size_t>(n), false);
  std::vector<double> window;
  for (int i = 0; i < n; ++i) {
    window.clear();
    for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j)
      window.push_back(history[static_cast<std::size_t>(j)]);
    double med = median_of(window);
    double threshold = cfg.thldm_multiplier * std::max(med, cfg.min_volume_gb);
    flags[static_cast<std::size_t>(i)] = history[static_cast<std::size_t>(i)] > threshold;
  }
  return flags;
}

std::vector<StepForecast> stepize(const std::vector<double>& estimates, int first_day) {
  std::vector<StepForecast> steps;
  steps.reserve(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i)
    steps.push_back({first_day + static_cast<int>(i), std::max(0.0, estimates[i])});
  return steps;
}

std::vector<StepForecast> apply_inertia(std::vector<StepForecast> steps,
                                        const std::vector<double>& history,
                                        const ForecasterConfig& cfg) {
  cfg.validate();
  if (cfg.irdm_decay == 0.0 || steps.empty()) return steps;
  int period = cfg.reference_period_days;
  int n = static_cast<int>(history.size());
  if (n < period) return steps;

  // Shape of the most recent observed week, smoothed; decay factors per
  // window position, following each strict local maximum down its run.
  std::vector<double> week(history.end() - period, history.end());
  std::vector<double> smoothed = smooth3(week);
  std::vector<double> factor(static_cast<std::size_t>(period), 1.0);
  for (int i = 0; i < period; ++i) {
    bool left_ok = i == 0 || smoothed[static_cast<std::size_t>(i)] > smoothed[static_cast<std::size_t>(i - 1)];
    bool right_ok = i == period - 1 || smoothed[static_cast<std::size_t>(i)] > smoothed[static_cast<std::size_t>(i + 1)];
    if (!(left_ok && right_ok)) continue;
    int k = 1;
    for (int j = i + 1; j < period; ++j, ++k) {
      if (!(smoothed[static_cast<std::size_t>(j)] < smoothed[static_cast<std::size_t>(j - 1)])) break;
      factor[static_cast<std::size_t>(j)] =
          std::min(factor[static_cast<std::size_t>(j)], std::pow(1.0 - cfg.irdm_decay, k));
    }
  }

  // Window position p observed day (n - period + p); a step at the same
  // weekly phase inherits that position's factor.
  int window_start = n - period;
  for (StepForecast& step : steps) {
    int pos = (step.day - window_start) % period;
    if (pos < 0) pos += period;
    step.predicted_gb = std::max(0.0, step.predicted_gb * factor[static_cast<std::size_t>(pos)]);
  }
  return steps;
}

std::vector<StepForecast> deviation_adjust(std::vector<StepForecast> next_frame,
                                           double today_forecast, double today_actual,
                                           const ForecasterConfig& cfg) {
  cfg.validate();
  if (cfg.dedm_blend == 0.0) return next_frame;
  double scale = 1.0 + cfg.dedm_blend * (today_actual - today_forecast) /
                           std::max(today_forecast, cfg.min_volume_gb);
  scale = std::max(0.0, scale);
  for (StepForecast& step : next_frame) step.predicted_gb = std::max(0.0, step.predicted_gb * scale);
  return next_frame;
}

std::vector<StepForecast> initial_reservation(const std::vector<double>& orders,
                                              const ForecasterConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(orders.size()) != cfg.reference_period_days)
    throw std::invalid_argument("initial_reservation: one order per day of the reference period");
  for (double gb : orders)
    if (gb < 0.0) throw std::invalid_argument("initial_reservation: orders must be >= 0");
  return stepize(orders, 0);
}

double reservation_cap(double requested_gb, const StepForecast& forecast) {
  if (requested_gb < 0.0) throw std::invalid_argument("reservation_cap: requested must be >= 0");
  return std::min(requested_gb, std::max(0.0, forecast.predicted_gb));
}

Forecaster::Forecaster(ForecasterConfig cfg) : cfg_(cfg), bandwidth_(cfg.bandwidth) {
  cfg_.validate();
}

void Forecaster::note_order(int day, double ordered_gb) {
  if (day != static_cast<int>(noted_forecast_.size()))
    throw std::invalid_argument("Forecaster::note_order: days must arrive in sequence");
  noted_forecast_.push_back(std::max(0.0, ordered_gb));
}

double Forecaster::predict(int day) {
  if (day < cfg_.reference_period_days)
    throw std::invalid_argument("Forecaster::predict: first-week days use declared orders");
  if (day != static_cast<int>(noted_forecast_.size()))
    throw std::invalid_argument("Forecaster::predict: days must arrive in sequence");

  std::optional<double> raw =
      same_phase_estimate(history_, day, bandwidth_, &flagged_, cfg_.reference_period_days);
  if (!raw) // every same-phase observation flagged: fall back to the full history
    raw = same_phase_estimate(history_, day, bandwidth_, nullptr, cfg_.reference_period_days);
  double estimate = raw.value_or(0.0);

  std::vector<StepForecast> frame = stepize({estimate}, day);
  frame = apply_inertia(std::move(frame), history_, cfg_);
  if (cfg_.dedm_blend > 0.0 && day == deviation_day_)
    for (StepForecast& step : frame)
      step.predicted_gb = std::max(0.0, step.predicted_gb * deviation_factor_);

  double value = frame.front().predicted_gb;
  noted_forecast_.push_back(value);
  return value;
}

void Forecaster::observe(int day, double actual_gb) {
  if (day != static_cast<int>(history_.size()))
    throw std::invalid_argument("Forecaster::observe: days must arrive in sequence");
  if (day >= static_cast<int>(noted_forecast_.size()))
    throw std::invalid_argument("Forecaster::observe: no reservation noted for this day");
  history_.push_back(std::max(0.0, actual_gb));

  if (static_cast<int>(history_.size()) >= cfg_.reference_period_days)
    flagged_ = detect_transient_high_load(history_, cfg_);
  else
    flagged_.assign(history_.size(), false);

  if (cfg_.dedm_blend > 0.0) {
    double forecast = noted_forecast_[static_cast<std::size_t>(day)];
    deviation_factor_ = std::max(
        0.0, 1.0 + cfg_.dedm_blend * (actual_gb - forecast) / std::max(forecast, cfg_.min_volume_gb));
    deviation_day_ = day + 1;
  }

  if (cfg_.auto_bandwidth && (day + 1) % cfg_.reference_period_days == 0 &&
      static_cast<int>(history_.size()) >= 2 * cfg_.reference_period_days)
    bandwidth_ = loo_bandwidth();
}

// Held-out squared error of the same-phase regression: each unflagged day is
// predicted from its own past only, matching the production predictor.
// Smallest bandwidth wins ties so reruns are stable.
double Forecaster::loo_bandwidth() const {
  double best_bw = bandwidth_;
  double best_err = std::numeric_limits<double>::infinity();
  int n = static_cast<int>(history_.size());
  int steps = static_cast<int>(std::floor((cfg_.bandwidth_max - cfg_.bandwidth_min) /
                                          cfg_.bandwidth_step + 1e-9));
  for (int s = 0; s <= steps; ++s) {
    double bw = cfg_.bandwidth_min + s * cfg_.bandwidth_step;
    double err = 0.0;
    int count = 0;
    for (int t = 0; t < n; ++t) {
      if (flagged_[static_cast<std::size_t>(t)]) continue;
      std::optional<double> est =
          same_phase_estimate(history_, t, bw, &flagged_, cfg_.reference_period_days);
      if (!est) continue;
      double diff = history_[static_cast<std::size_t>(t)] - *est;
      err += diff * diff;
      ++count;
    }
    if (count == 0) continue;
    err /= count;
    if (err < best_err - 1e-15) {
      best_err = err;
      best_bw = bw;
    }
  }
  return best_bw;
}

} // namespace cdnmarket
