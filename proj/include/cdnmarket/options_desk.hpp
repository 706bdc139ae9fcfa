#pragma once

#include <string>
#include <vector>

#include "cdnmarket/option_pricing.hpp"

namespace cdnmarket {

enum class ContractState { active, exercised, expired };

struct OptionContract {
  int id = 0;
  std::string os_id;
  double quantity_gb = 0.0;
  double strike = 0.0;          // rule price of the holder's tier at purchase time
  StrikeRule strike_rule = StrikeRule::normal;
  double premium_paid = 0.0;    // total, charged at purchase
  int purchase_day = 0;
  int expiry_day = 0;           // last day the contract can be exercised
  ContractState state = ContractState::active;
  double remaining_gb = 0.0;
};

struct DeficitRecord {
  int day = 0;
  double deficit_gb = 0.0; // GB short at end of day, after market clearing
};

struct PurchasePolicy {
  int window_days = 14;
  double ewma_alpha = 0.3;
};

struct ExerciseOutcome {
  double exercised_gb = 0.0;
  double penalty_gb = 0.0;
  double exercise_cost = 0.0; // at the strike rule's current price
  double penalty_cost = 0.0;
};

// Per-OS stock-option book: deficit history, coverage planning, purchase,
// exercise and expiry. Exercised volume is charged at the strike rule's
// price for the holder's tier on the exercise day; the remaining deficit
// pays the penalty price. Premiums are sunk at purchase.
class OptionsDesk {
 public:
  explicit OptionsDesk(std::string os_id) : os_id_(std::move(os_id)) {}

  // One record per day, nonnegative; duplicates are rejected.
  void record_deficit(int day, double gb);

  // Exponentially weighted mean of the recent deficits, minus coverage that
  // is still active, floored at zero.
  double plan_purchase(int day, const PurchasePolicy& policy) const;

  // Returns the contract id, or -1 when quantity_gb is not positive.
  int buy(int day, double quantity_gb, double strike, StrikeRule rule, double premium_per_gb,
          int ttm_days);

  // Consumes active contracts soonest-expiry-first. A contract expiring
  // today is still usable today.
  ExerciseOutcome exercise(int day, double residual_deficit_gb, double rule_price,
                           double penalty_price);

  // Contracts whose expiry day has arrived become unusable from tomorrow.
  void expire(int day);

  double active_coverage(int day) const;
  double premiums_paid() const { return premiums_paid_; }
  const std::vector<OptionContract>& contracts() const { return contracts_; }
  const std::vector<DeficitRecord>& deficits() const { return deficits_; }
  const std::string& os_id() const { return os_id_; }

 private:
  std::string os_id_;
  std::vector<OptionContract> contracts_;
  std::vector<DeficitRecord> deficits_;
  double premiums_paid_ = 0.0;
  int next_id_ = 1;
};

} // namespace cdnmarket
