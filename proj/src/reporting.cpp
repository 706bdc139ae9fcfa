#include "cdnmarket/reporting.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace cdnmarket {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

// Empty cell where a comparison column does not apply.
std::string fmt_opt(double value, int decimals) {
  if (std::isnan(value)) return "";
  return fmt(value, decimals);
}

// High-penalty twin of a low-penalty plan id, empty when the row has none.
std::string high_penalty_twin(const std::string& plan_id) {
  if (plan_id == "2.d") return "2.c";
  if (plan_id.size() >= 2 && plan_id.back() == 'b' &&
      plan_id[plan_id.size() - 2] == '.')
    return plan_id.substr(0, plan_id.size() - 1) + "a";
  return "";
}

struct Key {
  std::string plan_id;
  int sc_count;
  bool operator<(const Key& other) const {
    if (plan_id != other.plan_id) return plan_id < other.plan_id;
    return sc_count < other.sc_count;
  }
};

struct Extract {
  double cost = 0.0;
  double reserved = 0.0;
  double cost_per_gb = 0.0;
};

Extract extract(const PlanResult& r) {
  Extract e;
  e.cost = r.average_os_cost();
  double n = static_cast<double>(r.os_summaries.size());
  e.reserved = n > 0.0 ? r.total_reserved_paid_gb() / n : 0.0;
  double served = r.total_served_gb();
  e.cost_per_gb = served > 0.0 ? r.total_os_cost() / served : 0.0;
  return e;
}

MetricCell make_cell(double value, double ideal, const double* six, const double* high) {
  MetricCell cell;
  cell.value = value;
  cell.pct_of_ideal = ideal != 0.0 ? 100.0 * value / ideal : kNaN;
  cell.change_6_to_3_pct = six && *six != 0.0 ? 100.0 * (value - *six) / *six : kNaN;
  cell.change_high_to_low_pct = high && *high != 0.0 ? 100.0 * (value - *high) / *high : kNaN;
  return cell;
}

void table_line(TableFormat format, const std::vector<std::string>& cells, std::ostream& out) {
  if (format == TableFormat::csv) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
    return;
  }
  out << '|';
  for (const std::string& c : cells) out << ' ' << (c.empty() ? "-" : c) << " |";
  out << '\n';
}

void table_header(TableFormat format, const std::vector<std::string>& cells, std::ostream& out) {
  table_line(format, cells, out);
  if (format == TableFormat::markdown) {
    out << '|';
    for (std::size_t i = 0; i < cells.size(); ++i) out << " --- |";
    out << '\n';
  }
}

void emit_metric_table(const ReportBundle& bundle, const char* value_header, int value_decimals,
                       MetricCell OsReportRow::*metric, TableFormat format, std::ostream& out) {
  table_header(format,
               {"plan", "tiers", value_header, "pct_of_ideal", "change_6_to_3_pct",
                "change_high_to_low_pct"},
               out);
  for (const OsReportRow& row : bundle.os_rows) {
    const MetricCell& cell = row.*metric;
    table_line(format,
               {row.plan_id, std::to_string(row.sc_count), fmt(cell.value, value_decimals),
                fmt_opt(cell.pct_of_ideal, 2), fmt_opt(cell.change_6_to_3_pct, 2),
                fmt_opt(cell.change_high_to_low_pct, 2)},
               out);
  }
}

} // namespace

ReportBundle build_reports(const std::vector<PlanResult>& results) {
  std::map<Key, const PlanResult*> by_key;
  for (const PlanResult& r : results) {
    Key key{r.spec.plan_id, r.spec.sc_count};
    if (!by_key.emplace(key, &r).second)
      throw std::invalid_argument("build_reports: duplicate run for plan " + r.spec.plan_id);
  }

  std::map<Key, Extract> values;
  for (const auto& [key, r] : by_key) values[key] = extract(*r);

  ReportBundle bundle;
  for (int sc_count : {6, 3}) {
    bool any = false;
    for (const auto& [key, r] : by_key) any = any || key.sc_count == sc_count;
    if (!any) continue;
    auto ideal_it = values.find(Key{"1", sc_count});
    if (ideal_it == values.end())
      throw std::invalid_argument(
          "build_reports: plan 1 is required as the percentage anchor for " +
          std::to_string(sc_count) + " tiers");
    const Extract& ideal = ideal_it->second;

    for (const std::string& plan_id : all_plan_ids()) {
      auto it = by_key.find(Key{plan_id, sc_count});
      if (it == by_key.end()) continue;
      const PlanResult& r = *it->second;
      const Extract& e = values[Key{plan_id, sc_count}];

      const Extract* six = nullptr;
      if (sc_count == 3) {
        auto six_it = values.find(Key{plan_id, 6});
        if (six_it != values.end()) six = &six_it->second;
      }
      const Extract* high = nullptr;
      std::string twin = high_penalty_twin(plan_id);
      if (!twin.empty()) {
        auto twin_it = values.find(Key{twin, sc_count});
        if (twin_it != values.end()) high = &twin_it->second;
      }

      OsReportRow row;
      row.plan_id = plan_id;
      row.sc_count = sc_count;
      row.cost = make_cell(e.cost, ideal.cost, six ? &six->cost : nullptr,
                           high ? &high->cost : nullptr);
      row.reserved = make_cell(e.reserved, ideal.reserved, six ? &six->reserved : nullptr,
                               high ? &high->reserved : nullptr);
      row.cost_per_gb =
          make_cell(e.cost_per_gb, ideal.cost_per_gb, six ? &six->cost_per_gb : nullptr,
                    high ? &high->cost_per_gb : nullptr);
      bundle.os_rows.push_back(std::move(row));

      CdnReportRow cdn;
      cdn.plan_id = plan_id;
      cdn.sc_count = sc_count;
      cdn.served_gb = r.cdn.served_gb;
      cdn.revenue = r.cdn.revenue;
      cdn.cost = r.cdn.cost;
      cdn.profit = r.cdn.profit;
      if (r.cdn.served_gb > 0.0) {
        cdn.revenue_per_gb = cdn.revenue / cdn.served_gb;
        cdn.cost_per_gb = cdn.cost / cdn.served_gb;
        cdn.profit_per_gb = cdn.profit / cdn.served_gb;
      }
      cdn.profit_to_cost_pct = cdn.cost != 0.0 ? 100.0 * cdn.profit / cdn.cost : kNaN;
      bundle.cdn_rows.push_back(std::move(cdn));
    }
  }
  return bundle;
}

void emit_os_cost_table(const ReportBundle& bundle, TableFormat format, std::ostream& out) {
  emit_metric_table(bundle, "avg_total_cost", 2, &OsReportRow::cost, format, out);
}

void emit_os_reserved_table(const ReportBundle& bundle, TableFormat format, std::ostream& out) {
  emit_metric_table(bundle, "avg_reserved_gb", 2, &OsReportRow::reserved, format, out);
}

void emit_os_cost_per_gb_table(const ReportBundle& bundle, TableFormat format, std::ostream& out) {
  emit_metric_table(bundle, "cost_per_served_gb", 6, &OsReportRow::cost_per_gb, format, out);
}

void emit_cdn_table(const ReportBundle& bundle, TableFormat format, std::ostream& out) {
  table_header(format,
               {"plan", "tiers", "served_gb", "revenue", "revenue_per_gb", "cost", "cost_per_gb",
                "profit", "profit_per_gb", "profit_to_cost_pct"},
               out);
  for (const CdnReportRow& row : bundle.cdn_rows) {
    table_line(format,
               {row.plan_id, std::to_string(row.sc_count), fmt(row.served_gb, 2),
                fmt(row.revenue, 2), fmt(row.revenue_per_gb, 6), fmt(row.cost, 2),
                fmt(row.cost_per_gb, 6), fmt(row.profit, 2), fmt(row.profit_per_gb, 6),
                fmt_opt(row.profit_to_cost_pct, 2)},
               out);
  }
}

void write_ledger_csv(const PlanResult& result, std::ostream& out) {
  out << "day,os_id,served_gb,reserved_gb,cost_normal,cost_penalty,penalty_gb,sm_bought_gb,"
         "sm_sold_gb,sm_cash,so_premium,so_exercised_gb,so_exercise_cost,carryover_gb,"
         "dropped_gb,total_cost\n";
  if (result.ledgers.empty()) return;
  std::size_t days = result.ledgers.front().size();
  for (std::size_t day = 0; day < days; ++day) {
    for (const auto& ledger : result.ledgers) {
      const DailyLedgerEntry& led = ledger[day];
      out << led.day << ',' << led.os_id << ',' << fmt(led.served_gb, 6) << ','
          << fmt(led.reserved_gb, 6) << ',' << fmt(led.cost_normal, 6) << ','
          << fmt(led.cost_penalty, 6) << ',' << fmt(led.penalty_gb, 6) << ','
          << fmt(led.sm_bought_gb, 6) << ',' << fmt(led.sm_sold_gb, 6) << ','
          << fmt(led.sm_cash, 6) << ',' << fmt(led.so_premium, 6) << ','
          << fmt(led.so_exercised_gb, 6) << ',' << fmt(led.so_exercise_cost, 6) << ','
          << fmt(led.carryover_gb, 6) << ',' << fmt(led.dropped_gb, 6) << ','
          << fmt(led.total_cost(), 6) << '\n';
    }
  }
}

void write_trades_csv(const PlanResult& result, std::ostream& out) {
  out << "day,seller,buyer,quantity_gb,unit_price\n";
  for (const Trade& t : result.trades)
    out << t.clearing_day << ',' << t.seller << ',' << t.buyer << ',' << fmt(t.quantity_gb, 6)
        << ',' << fmt(t.unit_price, 6) << '\n';
}

void write_contracts_csv(const PlanResult& result, std::ostream& out) {
  out << "os_id,id,purchase_day,expiry_day,quantity_gb,remaining_gb,strike,strike_rule,"
         "premium_paid,state\n";
  for (const OptionContract& c : result.contracts) {
    const char* state = c.state == ContractState::active
                            ? "active"
                            : c.state == ContractState::exercised ? "exercised" : "expired";
    out << c.os_id << ',' << c.id << ',' << c.purchase_day << ',' << c.expiry_day << ','
        << fmt(c.quantity_gb, 6) << ',' << fmt(c.remaining_gb, 6) << ',' << fmt(c.strike, 6)
        << ',' << (c.strike_rule == StrikeRule::normal ? "normal" : "low_penalty") << ','
        << fmt(c.premium_paid, 6) << ',' << state << '\n';
  }
}

void write_os_summary_csv(const PlanResult& result, std::ostream& out) {
  out << "os_id,served_gb,reserved_paid_gb,total_cost,premiums_paid,final_pool_gb,dropped_gb\n";
  for (const OsRunSummary& s : result.os_summaries)
    out << s.os_id << ',' << fmt(s.served_gb, 6) << ',' << fmt(s.reserved_paid_gb, 6) << ','
        << fmt(s.total_cost, 6) << ',' << fmt(s.premiums_paid, 6) << ','
        << fmt(s.final_pool_gb, 6) << ',' << fmt(s.dropped_gb, 6) << '\n';
}

void write_cdn_summary_csv(const PlanResult& result, std::ostream& out) {
  out << "plan,tiers,served_gb,planned_gb,urgent_gb,revenue,cost,profit\n";
  out << result.spec.plan_id << ',' << result.spec.sc_count << ',' << fmt(result.cdn.served_gb, 6)
      << ',' << fmt(result.cdn.planned_gb, 6) << ','
      << fmt(result.cdn.urgent_gb, 6) << ',' << fmt(result.cdn.revenue, 6) << ','
      << fmt(result.cdn.cost, 6) << ',' << fmt(result.cdn.profit, 6) << '\n';
}

} // namespace cdnmarket
