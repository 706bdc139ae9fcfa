#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cdnmarket/plan_engine.hpp"

namespace cdnmarket {

// One metric with its comparison columns. The delta columns hold NaN where
// the comparison does not apply (6-tier rows, high-penalty rows) and are
// rendered as empty cells.
struct MetricCell {
  double value = 0.0;
  double pct_of_ideal = 0.0;
  double change_6_to_3_pct = 0.0;    // on 3-tier rows: change vs the 6-tier run
  double change_high_to_low_pct = 0.0; // on low-penalty rows: change vs the high twin
};

struct OsReportRow {
  std::string plan_id;
  int sc_count = 0;
  MetricCell cost;        // average total cost per OS over the horizon
  MetricCell reserved;    // average paid GB per OS, net of resales and final pool
  MetricCell cost_per_gb; // total OS cost / total served GB
};

struct CdnReportRow {
  std::string plan_id;
  int sc_count = 0;
  double served_gb = 0.0;
  double revenue = 0.0;
  double revenue_per_gb = 0.0;
  double cost = 0.0;
  double cost_per_gb = 0.0;
  double profit = 0.0;
  double profit_per_gb = 0.0;
  double profit_to_cost_pct = 0.0;
};

struct ReportBundle {
  std::vector<OsReportRow> os_rows;   // canonical plan order, 6-tier block then 3-tier
  std::vector<CdnReportRow> cdn_rows;
};

// Every tier count present must include plan 1: the percentage columns are
// anchored to it. Duplicate (plan, tier count) pairs are rejected.
ReportBundle build_reports(const std::vector<PlanResult>& results);

enum class TableFormat { csv, markdown };

void emit_os_cost_table(const ReportBundle& bundle, TableFormat format, std::ostream& out);
void emit_os_reserved_table(const ReportBundle& bundle, TableFormat format, std::ostream& out);
void emit_os_cost_per_gb_table(const ReportBundle& bundle, TableFormat format, std::ostream& out);
void emit_cdn_table(const ReportBundle& bundle, TableFormat format, std::ostream& out);

// Raw per-run dumps, byte-stable across reruns.
void write_ledger_csv(const PlanResult& result, std::ostream& out);
void write_trades_csv(const PlanResult& result, std::ostream& out);
void write_contracts_csv(const PlanResult& result, std::ostream& out);
void write_os_summary_csv(const PlanResult& result, std::ostream& out);
void write_cdn_summary_csv(const PlanResult& result, std::ostream& out);

} // namespace cdnmarket
