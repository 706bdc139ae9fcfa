#pragma once

#include <string>
#include <vector>

#include "cdnmarket/exchange.hpp"
#include "cdnmarket/market_config.hpp"
#include "cdnmarket/options_desk.hpp"
#include "cdnmarket/trace_io.hpp"

namespace cdnmarket {

enum class PenaltyType { none, high, low };
enum class UreMode { off, days_28, full };
enum class MarketMode { social, auction };

enum class BillingFamily {
  framework_ideal,   // daily reservation with a perfect forecast
  framework,         // daily reservation driven by the forecasting pipeline
  precosted,         // monthly reservation, previous month picks the tier
  optimal_precosted, // monthly reservation, hindsight-optimal tier
  payg_staggered,    // monthly usage billed per bracket
  payg_unified,      // monthly usage billed at the containing tier's price
};

struct PlanSpec {
  std::string plan_id;
  BillingFamily family = BillingFamily::framework;
  int sc_count = 6;
  PenaltyType penalty = PenaltyType::none;
  bool pm_on = false;
  UreMode ure = UreMode::off;
  bool sm_on = false;
  bool so_on = false;

  void validate() const;
};

// The published plan grid: 1, 2.a-2.d, 3.1-3.3 a/b, 4.a, 4.b, 5.a/b, 6.a/b.
PlanSpec plan_from_id(const std::string& plan_id, int sc_count);
const std::vector<std::string>& all_plan_ids();

struct DailyLedgerEntry {
  int day = 0;
  std::string os_id;
  double served_gb = 0.0;
  double reserved_gb = 0.0;       // bought this day at the normal price
  double cost_normal = 0.0;
  double cost_penalty = 0.0;
  double penalty_gb = 0.0;
  double sm_bought_gb = 0.0;
  double sm_sold_gb = 0.0;
  double sm_cash = 0.0;           // net: purchases positive, sales negative
  double so_premium = 0.0;
  double so_exercised_gb = 0.0;
  double so_exercise_cost = 0.0;
  double carryover_gb = 0.0;      // pool held at end of day
  double dropped_gb = 0.0;        // leftovers discarded (no URE) or expired from the pool

  double total_cost() const {
    return cost_normal + cost_penalty + sm_cash + so_premium + so_exercise_cost;
  }
};

struct OsRunSummary {
  std::string os_id;
  double served_gb = 0.0;
  double reserved_paid_gb = 0.0; // GB paid for, net of resales, minus end-of-run pool
  double total_cost = 0.0;
  double premiums_paid = 0.0;
  double final_pool_gb = 0.0;
  double dropped_gb = 0.0;
};

struct CdnSummary {
  double served_gb = 0.0;
  double planned_gb = 0.0; // upstream purchases at the wholesale price
  double urgent_gb = 0.0;  // post-redistribution residuals at the penalized wholesale price
  double revenue = 0.0;
  double cost = 0.0;
  double profit = 0.0;
};

struct PlanResult {
  PlanSpec spec;
  std::vector<std::vector<DailyLedgerEntry>> ledgers; // [os][day]
  std::vector<Trade> trades;
  std::vector<OptionContract> contracts;
  std::vector<OsRunSummary> os_summaries;
  CdnSummary cdn;

  double total_os_cost() const;
  double average_os_cost() const;
  double total_served_gb() const;
  double total_reserved_paid_gb() const;
};

enum class PaygMode { unified, staggered };

// Monthly usage billing. Unified prices the whole volume at the containing
// tier; staggered prices each bracket marginally.
double payg_bill(double monthly_gb, const TierTable& table, PaygMode mode);

struct PrecostedOutcome {
  std::string sc_id;
  double reserved_gb = 0.0; // the tier's monthly upper bound (unlimited: actual)
  double overage_gb = 0.0;
  double cost_normal = 0.0;
  double cost_penalty = 0.0;
  double cost() const { return cost_normal + cost_penalty; }
};

// Pay the tier's upper bound at its normal price; volume beyond it pays the
// tier's penalty price. The unlimited tier bills actual usage, no penalty.
PrecostedOutcome precosted_bill(const ServiceClass& chosen, double actual_monthly_gb,
                                PenaltyType penalty);

// Cheapest precosted_bill over the regular tiers; the unlimited tier only
// competes when the volume actually falls in its range.
PrecostedOutcome optimal_precosted_bill(const TierTable& table, double actual_monthly_gb,
                                        PenaltyType penalty);

// Shared across plan runs: traces are fixed and the forecasting pipeline
// does not depend on the billing plan, so forecasts are computed once.
class Simulator {
 public:
  Simulator(std::vector<DailyLoadSeries> traces, SimConfig cfg,
            MarketMode market_mode = MarketMode::social);

  PlanResult run(const PlanSpec& spec) const;

  int days() const { return days_; }
  const std::vector<DailyLoadSeries>& traces() const { return traces_; }
  const std::vector<std::vector<double>>& forecasts() const { return forecasts_; }
  const SimConfig& config() const { return cfg_; }

 private:
  PlanResult run_framework(const PlanSpec& spec, bool ideal) const;
  PlanResult run_precosted(const PlanSpec& spec, bool optimal) const;
  PlanResult run_payg(const PlanSpec& spec, PaygMode mode) const;

  std::vector<DailyLoadSeries> traces_;
  SimConfig cfg_;
  MarketMode market_mode_;
  int days_ = 0;
  std::vector<std::vector<double>> forecasts_; // [os][day], declared orders for week one
};

PlanResult simulate(const PlanSpec& spec, const std::vector<DailyLoadSeries>& traces,
                    const SimConfig& cfg, MarketMode market_mode = MarketMode::social);

} // namespace cdnmarket
