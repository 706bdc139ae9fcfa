#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdnmarket {

// One pricing tier: a traffic-volume range plus its $/GB price schedule.
// Ranges are lower-exclusive, upper-inclusive; the first tier includes 0;
// the unlimited tier has no upper bound and no penalty prices.
struct ServiceClass {
  std::string id;
  double monthly_lower_gb = 0.0;
  double monthly_upper_gb = 0.0;   // +infinity for the unlimited tier
  double daily_lower_gb = 0.0;     // monthly bounds / 28
  double daily_upper_gb = 0.0;
  double normal_price = 0.0;       // $/GB
  double high_penalty_price = 0.0; // 1.2 x normal
  double low_penalty_price = 0.0;  // 0.95 x normal
  double so_premium_high = 0.0;    // published reference premium, normal strike ($/GB)
  double so_premium_low = 0.0;     // published reference premium, low-penalty strike ($/GB)
  bool unlimited = false;

  bool contains_monthly(double gb) const;
  bool contains_daily(double gb) const;
};

struct TierTable {
  int sc_count = 0;                  // regular tiers (3 or 6); classes holds one extra, the unlimited tier
  std::vector<ServiceClass> classes; // ordered by volume, unlimited last
};

// sc_count must be 3 or 6. The 3-tier schedule is the pairwise merge of the
// 6-tier one: each merged price is the mean of the two prices it replaces.
TierTable build_tier_table(int sc_count);

double monthly_to_daily(double tv_monthly_gb);

// Total over [0, inf): every nonnegative volume lands in exactly one tier.
const ServiceClass& tier_for_volume(const TierTable& table, double daily_gb);
const ServiceClass& tier_for_monthly_volume(const TierTable& table, double monthly_gb);

void write_tier_table_csv(const TierTable& table, std::ostream& out);

struct SimConfig {
  int origin_servers = 6;
  int total_weeks = 52;
  int reference_period_days = 7;
  int control_granularity_hours = 24;
  double min_volume_bytes = 1.0;
  std::string kernel = "gaussian";
  double kernel_bandwidth_min = 0.8;
  double kernel_bandwidth_max = 5.1;
  int so_ttm_days = 60;
  double risk_free_rate = 0.05;    // annual
  double volatility = 0.01;        // annualized
  double dividend_yield = 0.02;    // continuous
  int days_per_month = 28;         // billing month; 52 weeks = 13 such months
  double wholesale_price = 0.009;             // $/GB the CDN pays upstream
  double wholesale_penalty_multiplier = 1.2;  // urgent upstream purchases under high penalty
  double thldm_multiplier = 5.0;   // transient-high-load exclusion threshold (x rolling median)
  double irdm_decay = 0.0;         // post-peak inertia decay per slot; 0 = off
  double dedm_blend = 0.5;         // next-day deviation blend factor

  int simulated_days() const { return total_weeks * 7; }
  double min_volume_gb() const;
  void validate() const; // throws std::invalid_argument
};

// key = value lines, '#' starts a comment, unknown keys are rejected.
SimConfig load_config(std::istream& in);
SimConfig load_config_file(const std::string& path);

// Stable content hash of the effective configuration, for run manifests.
std::string config_digest(const SimConfig& cfg);

} // namespace cdnmarket
