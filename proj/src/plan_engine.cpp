#include "cdnmarket/plan_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include "cdnmarket/forecasting.hpp"
#include "cdnmarket/option_pricing.hpp"

namespace cdnmarket {

namespace {

constexpr double kDustGb = 1e-12;

double plan_penalty_price(const ServiceClass& sc, PenaltyType penalty) {
  switch (penalty) {
    case PenaltyType::high:
      return sc.high_penalty_price;
    case PenaltyType::low:
      return sc.low_penalty_price;
    case PenaltyType::none:
      break;
  }
  throw std::logic_error("deficit under a plan with no penalty price");
}

double rule_price(const ServiceClass& sc, StrikeRule rule) {
  return rule == StrikeRule::normal ? sc.normal_price : sc.low_penalty_price;
}

std::size_t tier_index(const TierTable& table, const ServiceClass& sc) {
  for (std::size_t i = 0; i < table.classes.size(); ++i)
    if (table.classes[i].id == sc.id) return i;
  throw std::logic_error("tier not present in its own table");
}

struct PoolLot {
  int day = 0;
  double gb = 0.0;
};

struct OsState {
  std::string id;
  OptionsDesk desk;
  std::deque<PoolLot> pool;
  // scratch for the current day
  double actual = 0.0;
  double forecast = 0.0;
  double reserved = 0.0;
  double reserved_price = 0.0;
  double leftover = 0.0; // unconsumed part of today's reservation
  double deficit = 0.0;

  explicit OsState(const std::string& os_id) : id(os_id), desk(os_id) {}

  double pool_gb() const {
    double total = 0.0;
    for (const PoolLot& lot : pool) total += lot.gb;
    return total;
  }

  void take_from_pool(double gb) {
    while (gb > kDustGb && !pool.empty()) {
      PoolLot& lot = pool.front();
      double take = std::min(lot.gb, gb);
      lot.gb -= take;
      gb -= take;
      if (lot.gb <= kDustGb) pool.pop_front();
    }
  }

  // Sales ship the oldest pool lots first, then today's leftover.
  void consume_sale(double gb) {
    double from_pool = std::min(gb, pool_gb());
    take_from_pool(from_pool);
    leftover = std::max(0.0, leftover - (gb - from_pool));
  }
};

// Revenue counts what OSs pay the CDN; secondary-market cash moves between
// OSs and cancels out. Upstream cost is one multiply per bucket so the
// ideal plan's cost per GB stays exact.
void finalize_result(PlanResult& result, const SimConfig& cfg) {
  double revenue = 0.0;
  double served = 0.0;
  result.os_summaries.clear();
  for (const auto& ledger : result.ledgers) {
    OsRunSummary s;
    double sm_cash = 0.0;
    for (const DailyLedgerEntry& led : ledger) {
      s.os_id = led.os_id;
      s.served_gb += led.served_gb;
      s.total_cost += led.total_cost();
      s.reserved_paid_gb += led.reserved_gb + led.sm_bought_gb + led.so_exercised_gb +
                            led.penalty_gb - led.sm_sold_gb;
      s.premiums_paid += led.so_premium;
      s.dropped_gb += led.dropped_gb;
      sm_cash += led.sm_cash;
    }
    if (!ledger.empty()) s.final_pool_gb = ledger.back().carryover_gb;
    s.reserved_paid_gb -= s.final_pool_gb;
    revenue += s.total_cost - sm_cash;
    served += s.served_gb;
    result.os_summaries.push_back(std::move(s));
  }
  result.cdn.served_gb = served;
  result.cdn.revenue = revenue;
  result.cdn.cost = cfg.wholesale_price * result.cdn.planned_gb +
                    cfg.wholesale_price * cfg.wholesale_penalty_multiplier * result.cdn.urgent_gb;
  result.cdn.profit = result.cdn.revenue - result.cdn.cost;
}

} // namespace

void PlanSpec::validate() const {
  if (plan_id.empty()) throw std::invalid_argument("PlanSpec: empty plan_id");
  if (sc_count != 3 && sc_count != 6)
    throw std::invalid_argument("PlanSpec: sc_count must be 3 or 6");
  bool monthly = family == BillingFamily::precosted || family == BillingFamily::optimal_precosted ||
                 family == BillingFamily::payg_staggered || family == BillingFamily::payg_unified;
  if (monthly && (pm_on || sm_on || so_on || ure != UreMode::off))
    throw std::invalid_argument("PlanSpec: monthly plans take no framework mechanisms");
  if (family == BillingFamily::precosted || family == BillingFamily::optimal_precosted ||
      family == BillingFamily::framework) {
    if (penalty == PenaltyType::none)
      throw std::invalid_argument("PlanSpec: this family needs a penalty price");
  } else if (penalty != PenaltyType::none) {
    throw std::invalid_argument("PlanSpec: this family has no deficits to penalize");
  }
  if (family == BillingFamily::framework && !pm_on)
    throw std::invalid_argument("PlanSpec: framework plans use the forecasting pipeline");
  if (family == BillingFamily::framework_ideal && pm_on)
    throw std::invalid_argument("PlanSpec: the ideal plan bypasses the forecasting pipeline");
  if (so_on && !sm_on)
    throw std::invalid_argument("PlanSpec: stock options extend the market plan");
}

PlanSpec plan_from_id(const std::string& plan_id, int sc_count) {
  PlanSpec s;
  s.plan_id = plan_id;
  s.sc_count = sc_count;
  auto framework = [&s](PenaltyType pen, UreMode ure, bool sm, bool so) {
    s.family = BillingFamily::framework;
    s.penalty = pen;
    s.pm_on = true;
    s.ure = ure;
    s.sm_on = sm;
    s.so_on = so;
  };
  if (plan_id == "1") {
    s.family = BillingFamily::framework_ideal;
    s.ure = UreMode::full;
    s.sm_on = true;
  } else if (plan_id == "2.a") {
    s.family = BillingFamily::optimal_precosted;
    s.penalty = PenaltyType::high;
  } else if (plan_id == "2.b") {
    s.family = BillingFamily::optimal_precosted;
    s.penalty = PenaltyType::low;
  } else if (plan_id == "2.c") {
    s.family = BillingFamily::precosted;
    s.penalty = PenaltyType::high;
  } else if (plan_id == "2.d") {
    s.family = BillingFamily::precosted;
    s.penalty = PenaltyType::low;
  } else if (plan_id == "3.1.a") {
    framework(PenaltyType::high, UreMode::off, false, false);
  } else if (plan_id == "3.1.b") {
    framework(PenaltyType::low, UreMode::off, false, false);
  } else if (plan_id == "3.2.a") {
    framework(PenaltyType::high, UreMode::days_28, false, false);
  } else if (plan_id == "3.2.b") {
    framework(PenaltyType::low, UreMode::days_28, false, false);
  } else if (plan_id == "3.3.a") {
    framework(PenaltyType::high, UreMode::full, false, false);
  } else if (plan_id == "3.3.b") {
    framework(PenaltyType::low, UreMode::full, false, false);
  } else if (plan_id == "4.a") {
    s.family = BillingFamily::payg_staggered;
  } else if (plan_id == "4.b") {
    s.family = BillingFamily::payg_unified;
  } else if (plan_id == "5.a") {
    framework(PenaltyType::high, UreMode::full, true, false);
  } else if (plan_id == "5.b") {
    framework(PenaltyType::low, UreMode::full, true, false);
  } else if (plan_id == "6.a") {
    framework(PenaltyType::high, UreMode::full, true, true);
  } else if (plan_id == "6.b") {
    framework(PenaltyType::low, UreMode::full, true, true);
  } else {
    throw std::invalid_argument("unknown plan id: " + plan_id);
  }
  s.validate();
  return s;
}

const std::vector<std::string>& all_plan_ids() {
  static const std::vector<std::string> ids = {
      "1",     "2.a",   "2.b",   "2.c",   "2.d",   "3.1.a", "3.1.b", "3.2.a", "3.2.b",
      "3.3.a", "3.3.b", "4.a",   "4.b",   "5.a",   "5.b",   "6.a",   "6.b"};
  return ids;
}

double PlanResult::total_os_cost() const {
  double total = 0.0;
  for (const OsRunSummary& s : os_summaries) total += s.total_cost;
  return total;
}

double PlanResult::average_os_cost() const {
  if (os_summaries.empty()) return 0.0;
  return total_os_cost() / static_cast<double>(os_summaries.size());
}

double PlanResult::total_served_gb() const {
  double total = 0.0;
  for (const OsRunSummary& s : os_summaries) total += s.served_gb;
  return total;
}

double PlanResult::total_reserved_paid_gb() const {
  double total = 0.0;
  for (const OsRunSummary& s : os_summaries) total += s.reserved_paid_gb;
  return total;
}

double payg_bill(double monthly_gb, const TierTable& table, PaygMode mode) {
  if (!(monthly_gb >= 0.0)) throw std::invalid_argument("payg_bill: negative volume");
  if (monthly_gb == 0.0) return 0.0;
  if (mode == PaygMode::unified)
    return monthly_gb * tier_for_monthly_volume(table, monthly_gb).normal_price;
  double bill = 0.0;
  for (const ServiceClass& sc : table.classes) {
    if (monthly_gb <= sc.monthly_lower_gb) break;
    double span = std::min(monthly_gb, sc.monthly_upper_gb) - sc.monthly_lower_gb;
    bill += span * sc.normal_price;
  }
  return bill;
}

PrecostedOutcome precosted_bill(const ServiceClass& chosen, double actual_monthly_gb,
                                PenaltyType penalty) {
  if (!(actual_monthly_gb >= 0.0))
    throw std::invalid_argument("precosted_bill: negative volume");
  PrecostedOutcome out;
  out.sc_id = chosen.id;
  if (chosen.unlimited) {
    out.reserved_gb = actual_monthly_gb;
    out.cost_normal = actual_monthly_gb * chosen.normal_price;
    return out;
  }
  out.reserved_gb = chosen.monthly_upper_gb;
  out.cost_normal = chosen.monthly_upper_gb * chosen.normal_price;
  out.overage_gb = std::max(0.0, actual_monthly_gb - chosen.monthly_upper_gb);
  if (out.overage_gb > 0.0)
    out.cost_penalty = out.overage_gb * plan_penalty_price(chosen, penalty);
  return out;
}

PrecostedOutcome optimal_precosted_bill(const TierTable& table, double actual_monthly_gb,
                                        PenaltyType penalty) {
  bool found = false;
  PrecostedOutcome best;
  for (const ServiceClass& sc : table.classes) {
    if (sc.unlimited && !sc.contains_monthly(actual_monthly_gb)) continue;
    PrecostedOutcome out = precosted_bill(sc, actual_monthly_gb, penalty);
    if (!found || out.cost() < best.cost()) {
      best = out;
      found = true;
    }
  }
  if (!found) throw std::logic_error("optimal_precosted_bill: empty tier table");
  return best;
}

Simulator::Simulator(std::vector<DailyLoadSeries> traces, SimConfig cfg, MarketMode market_mode)
    : traces_(std::move(traces)), cfg_(cfg), market_mode_(market_mode) {
  cfg_.validate();
  if (traces_.empty()) throw std::invalid_argument("Simulator: no traces given");
  days_ = cfg_.simulated_days();
  std::set<std::string> seen;
  for (const DailyLoadSeries& t : traces_) {
    if (t.os_id.empty()) throw std::invalid_argument("Simulator: trace with empty os_id");
    if (!seen.insert(t.os_id).second)
      throw std::invalid_argument("Simulator: duplicate os_id " + t.os_id);
    if (static_cast<int>(t.volumes_gb.size()) < days_)
      throw std::invalid_argument("Simulator: trace " + t.os_id +
                                  " is shorter than the simulated horizon");
    for (double v : t.volumes_gb)
      if (!std::isfinite(v) || v < 0.0)
        throw std::invalid_argument("Simulator: trace " + t.os_id + " has invalid volumes");
  }

  ForecasterConfig fc;
  fc.bandwidth_min = cfg_.kernel_bandwidth_min;
  fc.bandwidth_max = cfg_.kernel_bandwidth_max;
  fc.reference_period_days = cfg_.reference_period_days;
  fc.thldm_multiplier = cfg_.thldm_multiplier;
  fc.irdm_decay = cfg_.irdm_decay;
  fc.dedm_blend = cfg_.dedm_blend;
  fc.min_volume_gb = cfg_.min_volume_gb();

  forecasts_.assign(traces_.size(), {});
  for (std::size_t i = 0; i < traces_.size(); ++i) {
    Forecaster f(fc);
    std::vector<double>& out = forecasts_[i];
    out.reserve(days_);
    for (int day = 0; day < days_; ++day) {
      double actual = traces_[i].volumes_gb[day];
      if (day < cfg_.reference_period_days) {
        f.note_order(day, actual); // declared first-week orders match the load
        out.push_back(actual);
      } else {
        out.push_back(f.predict(day));
      }
      f.observe(day, actual);
    }
  }
}

PlanResult Simulator::run(const PlanSpec& spec) const {
  spec.validate();
  switch (spec.family) {
    case BillingFamily::framework_ideal:
      return run_framework(spec, true);
    case BillingFamily::framework:
      return run_framework(spec, false);
    case BillingFamily::precosted:
      return run_precosted(spec, false);
    case BillingFamily::optimal_precosted:
      return run_precosted(spec, true);
    case BillingFamily::payg_staggered:
      return run_payg(spec, PaygMode::staggered);
    case BillingFamily::payg_unified:
      return run_payg(spec, PaygMode::unified);
  }
  throw std::logic_error("unhandled billing family");
}

PlanResult Simulator::run_framework(const PlanSpec& spec, bool ideal) const {
  const TierTable table = build_tier_table(spec.sc_count);
  const StrikeRule rule =
      spec.penalty == PenaltyType::low ? StrikeRule::low_penalty : StrikeRule::normal;
  std::vector<double> premiums;
  if (spec.so_on) premiums = so_premium_table(table, cfg_, rule, PricingMethod::baw);
  const PurchasePolicy policy;

  const std::size_t n = traces_.size();
  PlanResult result;
  result.spec = spec;
  result.ledgers.assign(n, {});
  std::vector<OsState> os;
  os.reserve(n);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    os.emplace_back(traces_[i].os_id);
    index[traces_[i].os_id] = i;
    result.ledgers[i].reserve(static_cast<std::size_t>(days_));
  }

  for (int day = 0; day < days_; ++day) {
    double planned_today = 0.0;

    // morning: drop expired pool lots, forecast, buy options, reserve
    for (std::size_t i = 0; i < n; ++i) {
      OsState& s = os[i];
      DailyLedgerEntry led;
      led.day = day;
      led.os_id = s.id;
      s.actual = traces_[i].volumes_gb[day];
      led.served_gb = s.actual;

      if (spec.ure == UreMode::days_28) {
        while (!s.pool.empty() && s.pool.front().day + cfg_.days_per_month <= day) {
          led.dropped_gb += s.pool.front().gb;
          s.pool.pop_front();
        }
      }

      s.forecast = ideal ? s.actual : forecasts_[i][day];

      if (spec.so_on && day >= cfg_.reference_period_days) {
        double want = s.desk.plan_purchase(day, policy);
        const ServiceClass& ft = tier_for_volume(table, s.forecast);
        if (want > kDustGb && !ft.unlimited) {
          double premium = premiums[tier_index(table, ft)];
          s.desk.buy(day, want, rule_price(ft, rule), rule, premium, cfg_.so_ttm_days);
          led.so_premium = want * premium;
        }
      }

      // The forecast binds requests as an upper limit; carried pool GB only
      // serve demand later in the day, they do not shrink the reservation.
      s.reserved = reservation_cap(s.forecast, StepForecast{day, s.forecast});
      const ServiceClass& rt = tier_for_volume(table, s.reserved);
      s.reserved_price = rt.normal_price;
      led.reserved_gb = s.reserved;
      led.cost_normal = s.reserved * rt.normal_price;
      planned_today += s.reserved;

      result.ledgers[i].push_back(std::move(led));
    }

    // serve the day's load: today's reservation first, then the oldest pool lots
    for (OsState& s : os) {
      double from_res = std::min(s.actual, s.reserved);
      double from_pool = std::min(s.actual - from_res, s.pool_gb());
      s.take_from_pool(from_pool);
      s.leftover = s.reserved - from_res;
      s.deficit = std::max(0.0, s.actual - from_res - from_pool);
    }

    // secondary market
    if (spec.sm_on) {
      std::vector<MarketPosition> positions;
      std::map<std::string, double> asks, bids;
      for (OsState& s : os) {
        double sellable = s.leftover + s.pool_gb();
        if (s.deficit > kDustGb) {
          MarketPosition p;
          p.os_id = s.id;
          p.deficit_gb = s.deficit;
          p.penalty_unit_price =
              plan_penalty_price(tier_for_volume(table, s.actual), spec.penalty);
          bids[p.os_id] = p.penalty_unit_price;
          positions.push_back(std::move(p));
        } else if (sellable > kDustGb) {
          MarketPosition p;
          p.os_id = s.id;
          p.surplus_gb = sellable;
          p.reservation_unit_price = s.reserved > kDustGb
                                         ? s.reserved_price
                                         : tier_for_volume(table, s.forecast).normal_price;
          asks[p.os_id] = p.reservation_unit_price;
          positions.push_back(std::move(p));
        }
      }
      std::vector<Trade> trades = market_mode_ == MarketMode::auction
                                      ? clear_auction(positions, asks, bids, day)
                                      : clear_social(positions, day);
      for (const Trade& t : trades) {
        std::size_t bi = index.at(t.buyer);
        std::size_t si = index.at(t.seller);
        DailyLedgerEntry& bl = result.ledgers[bi][static_cast<std::size_t>(day)];
        DailyLedgerEntry& sl = result.ledgers[si][static_cast<std::size_t>(day)];
        bl.sm_bought_gb += t.quantity_gb;
        bl.sm_cash += t.quantity_gb * t.unit_price;
        sl.sm_sold_gb += t.quantity_gb;
        sl.sm_cash -= t.quantity_gb * t.unit_price;
        os[bi].deficit = std::max(0.0, os[bi].deficit - t.quantity_gb);
        os[si].consume_sale(t.quantity_gb);
        result.trades.push_back(t);
      }
    }

    // end of day: options or penalties on the residual, pool update. The
    // CDN nets what is still unsold against tonight's uncovered deficits
    // before buying anything urgently upstream.
    std::vector<MarketPosition> eod_positions;
    for (std::size_t i = 0; i < n; ++i) {
      OsState& s = os[i];
      DailyLedgerEntry& led = result.ledgers[i][static_cast<std::size_t>(day)];

      if (spec.so_on) s.desk.record_deficit(day, s.deficit);
      if (s.deficit > kDustGb) {
        const ServiceClass& at = tier_for_volume(table, s.actual);
        double penalty = plan_penalty_price(at, spec.penalty);
        if (spec.so_on) {
          ExerciseOutcome out = s.desk.exercise(day, s.deficit, rule_price(at, rule), penalty);
          led.so_exercised_gb = out.exercised_gb;
          led.so_exercise_cost = out.exercise_cost;
          led.penalty_gb = out.penalty_gb;
          led.cost_penalty = out.penalty_cost;
        } else {
          led.penalty_gb = s.deficit;
          led.cost_penalty = s.deficit * penalty;
        }
      }
      if (spec.so_on) s.desk.expire(day);

      double idle = s.leftover + s.pool_gb();
      if (led.penalty_gb > kDustGb) {
        MarketPosition p;
        p.os_id = s.id;
        p.deficit_gb = led.penalty_gb;
        eod_positions.push_back(std::move(p));
      } else if (idle > kDustGb) {
        MarketPosition p;
        p.os_id = s.id;
        p.surplus_gb = idle;
        eod_positions.push_back(std::move(p));
      }

      if (spec.ure == UreMode::off) {
        led.dropped_gb += s.leftover;
      } else if (s.leftover > kDustGb) {
        s.pool.push_back(PoolLot{day, s.leftover});
      }
      s.leftover = 0.0;
      led.carryover_gb = s.pool_gb();
    }

    result.cdn.planned_gb += planned_today;
    result.cdn.urgent_gb += redistribute_internal(eod_positions).residual_deficit_gb;
  }

  for (const OsState& s : os)
    for (const OptionContract& c : s.desk.contracts()) result.contracts.push_back(c);

  finalize_result(result, cfg_);
  return result;
}

PlanResult Simulator::run_precosted(const PlanSpec& spec, bool optimal) const {
  const TierTable table = build_tier_table(spec.sc_count);
  const std::size_t n = traces_.size();
  PlanResult result;
  result.spec = spec;
  result.ledgers.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    result.ledgers[i].reserve(static_cast<std::size_t>(days_));
    for (int day = 0; day < days_; ++day) {
      DailyLedgerEntry led;
      led.day = day;
      led.os_id = traces_[i].os_id;
      led.served_gb = traces_[i].volumes_gb[day];
      result.ledgers[i].push_back(std::move(led));
    }
  }

  std::vector<double> previous_month(n, 0.0);
  for (int month_start = 0, month = 0; month_start < days_;
       month_start += cfg_.days_per_month, ++month) {
    int month_days = std::min(cfg_.days_per_month, days_ - month_start);
    int closing_day = month_start + month_days - 1;
    std::vector<MarketPosition> month_positions;
    for (std::size_t i = 0; i < n; ++i) {
      double actual = 0.0;
      for (int d = month_start; d < month_start + month_days; ++d)
        actual += traces_[i].volumes_gb[d];

      PrecostedOutcome out;
      if (optimal) {
        out = optimal_precosted_bill(table, actual, spec.penalty);
      } else {
        // The first month books the tier the volume lands in; afterwards
        // each month books the tier of the previous month's volume.
        double basis = month == 0 ? actual : previous_month[i];
        out = precosted_bill(tier_for_monthly_volume(table, basis), actual, spec.penalty);
      }
      previous_month[i] = actual;

      DailyLedgerEntry& led = result.ledgers[i][static_cast<std::size_t>(closing_day)];
      led.reserved_gb = out.reserved_gb;
      led.cost_normal = out.cost_normal;
      led.cost_penalty = out.cost_penalty;
      led.penalty_gb = out.overage_gb;
      led.dropped_gb = out.reserved_gb - std::min(actual, out.reserved_gb);

      result.cdn.planned_gb += out.reserved_gb;
      if (led.penalty_gb > kDustGb) {
        MarketPosition p;
        p.os_id = led.os_id;
        p.deficit_gb = led.penalty_gb;
        month_positions.push_back(std::move(p));
      } else if (led.dropped_gb > kDustGb) {
        MarketPosition p;
        p.os_id = led.os_id;
        p.surplus_gb = led.dropped_gb;
        month_positions.push_back(std::move(p));
      }
    }
    result.cdn.urgent_gb += redistribute_internal(month_positions).residual_deficit_gb;
  }

  finalize_result(result, cfg_);
  return result;
}

PlanResult Simulator::run_payg(const PlanSpec& spec, PaygMode mode) const {
  const TierTable table = build_tier_table(spec.sc_count);
  const std::size_t n = traces_.size();
  PlanResult result;
  result.spec = spec;
  result.ledgers.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    result.ledgers[i].reserve(static_cast<std::size_t>(days_));
    for (int day = 0; day < days_; ++day) {
      DailyLedgerEntry led;
      led.day = day;
      led.os_id = traces_[i].os_id;
      led.served_gb = traces_[i].volumes_gb[day];
      led.reserved_gb = led.served_gb; // usage-billed: paid exactly what was served
      result.ledgers[i].push_back(std::move(led));
    }
  }

  for (int month_start = 0; month_start < days_; month_start += cfg_.days_per_month) {
    int month_days = std::min(cfg_.days_per_month, days_ - month_start);
    int closing_day = month_start + month_days - 1;
    for (std::size_t i = 0; i < n; ++i) {
      double actual = 0.0;
      for (int d = month_start; d < month_start + month_days; ++d)
        actual += traces_[i].volumes_gb[d];
      result.ledgers[i][static_cast<std::size_t>(closing_day)].cost_normal +=
          payg_bill(actual, table, mode);
      result.cdn.planned_gb += actual;
    }
  }

  finalize_result(result, cfg_);
  return result;
}

PlanResult simulate(const PlanSpec& spec, const std::vector<DailyLoadSeries>& traces,
                    const SimConfig& cfg, MarketMode market_mode) {
  return Simulator(traces, cfg, market_mode).run(spec);
}

} // namespace cdnmarket
