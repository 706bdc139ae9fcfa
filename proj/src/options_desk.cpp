#include "cdnmarket/options_desk.hpp"

#include <algorithm>
#include <stdexcept>

namespace cdnmarket {

void OptionsDesk::record_deficit(int day, double gb) {
  if (gb < 0.0) throw std::invalid_argument("record_deficit: negative deficit for " + os_id_);
  if (!deficits_.empty() && deficits_.back().day >= day)
    throw std::invalid_argument("record_deficit: duplicate or out-of-order day for " + os_id_);
  deficits_.push_back({day, gb});
}

double OptionsDesk::plan_purchase(int day, const PurchasePolicy& policy) const {
  if (policy.window_days < 1 || policy.ewma_alpha <= 0.0 || policy.ewma_alpha > 1.0)
    throw std::invalid_argument("plan_purchase: bad policy");
  if (deficits_.empty()) return 0.0;

  std::size_t first = deficits_.size() > static_cast<std::size_t>(policy.window_days)
                          ? deficits_.size() - static_cast<std::size_t>(policy.window_days)
                          : 0;
  double ewma = deficits_[first].deficit_gb;
  for (std::size_t i = first + 1; i < deficits_.size(); ++i)
    ewma = policy.ewma_alpha * deficits_[i].deficit_gb + (1.0 - policy.ewma_alpha) * ewma;

  return std::max(0.0, ewma - active_coverage(day));
}

int OptionsDesk::buy(int day, double quantity_gb, double strike, StrikeRule rule,
                     double premium_per_gb, int ttm_days) {
  if (quantity_gb <= 0.0) return -1;
  if (strike <= 0.0 || premium_per_gb < 0.0 || ttm_days < 1)
    throw std::invalid_argument("buy: bad contract terms for " + os_id_);
  OptionContract contract;
  contract.id = next_id_++;
  contract.os_id = os_id_;
  contract.quantity_gb = quantity_gb;
  contract.strike = strike;
  contract.strike_rule = rule;
  contract.premium_paid = quantity_gb * premium_per_gb;
  contract.purchase_day = day;
  contract.expiry_day = day + ttm_days;
  contract.state = ContractState::active;
  contract.remaining_gb = quantity_gb;
  premiums_paid_ += contract.premium_paid;
  contracts_.push_back(contract);
  return contract.id;
}

ExerciseOutcome OptionsDesk::exercise(int day, double residual_deficit_gb, double rule_price,
                                      double penalty_price) {
  if (residual_deficit_gb < 0.0)
    throw std::invalid_argument("exercise: negative deficit for " + os_id_);
  ExerciseOutcome outcome;
  if (residual_deficit_gb == 0.0) return outcome;

  std::vector<OptionContract*> active;
  for (OptionContract& c : contracts_)
    if (c.state == ContractState::active && c.expiry_day >= day) active.push_back(&c);
  std::stable_sort(active.begin(), active.end(), [](const OptionContract* a, const OptionContract* b) {
    return a->expiry_day != b->expiry_day ? a->expiry_day < b->expiry_day : a->id < b->id;
  });

  double need = residual_deficit_gb;
  for (OptionContract* c : active) {
    if (need <= 0.0) break;
    double used = std::min(need, c->remaining_gb);
    c->remaining_gb -= used;
    if (c->remaining_gb <= 0.0) {
      c->remaining_gb = 0.0;
      c->state = ContractState::exercised;
    }
    outcome.exercised_gb += used;
    need -= used;
  }
  outcome.penalty_gb = need;
  outcome.exercise_cost = outcome.exercised_gb * rule_price;
  outcome.penalty_cost = outcome.penalty_gb * penalty_price;
  return outcome;
}

void OptionsDesk::expire(int day) {
  for (OptionContract& c : contracts_)
    if (c.state == ContractState::active && c.expiry_day <= day) c.state = ContractState::expired;
}

double OptionsDesk::active_coverage(int day) const {
  double total = 0.0;
  for (const OptionContract& c : contracts_)
    if (c.state == ContractState::active && c.expiry_day >= day) total += c.remaining_gb;
  return total;
}

} // namespace cdnmarket
