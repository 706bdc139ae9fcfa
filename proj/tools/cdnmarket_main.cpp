#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdnmarket/forecasting.hpp"
#include "cdnmarket/market_config.hpp"
#include "cdnmarket/option_pricing.hpp"
#include "cdnmarket/plan_engine.hpp"
#include "cdnmarket/reporting.hpp"
#include "cdnmarket/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cdnmarket;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string profiles_path = "data/trace_profiles.cfg";
  std::string trace_dir;
  std::string out_dir = ".";
  std::string format = "csv";
  std::string market = "social";
};

SimConfig load_cfg(const CommonOpts& opts) {
  if (opts.config_path.empty()) {
    SimConfig cfg;
    cfg.validate();
    return cfg;
  }
  return load_config_file(opts.config_path);
}

TableFormat parse_format(const std::string& format) {
  if (format == "csv") return TableFormat::csv;
  if (format == "markdown" || format == "md") return TableFormat::markdown;
  throw std::invalid_argument("unknown format: " + format);
}

MarketMode parse_market(const std::string& market) {
  if (market == "social") return MarketMode::social;
  if (market == "auction") return MarketMode::auction;
  throw std::invalid_argument("unknown market mode: " + market);
}

std::string table_extension(TableFormat format) {
  return format == TableFormat::csv ? ".csv" : ".md";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Trace inputs: either a directory of access logs (plain or .gz, one OS per
// file, named by file stem) or synthetic profiles.
std::vector<DailyLoadSeries> load_traces(const CommonOpts& opts, const SimConfig& cfg,
                                         json* manifest) {
  std::vector<DailyLoadSeries> traces;
  json sources = json::array();
  if (!opts.trace_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(opts.trace_dir)) {
      if (!entry.is_regular_file()) continue;
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
      std::string os_id = file.stem().string();
      if (file.extension() == ".gz") os_id = file.stem().stem().string();
      ParseStats stats;
      DailyLoadSeries series = read_access_log_file(file.string(), os_id, &stats);
      sources.push_back({{"os_id", series.os_id},
                         {"file", file.string()},
                         {"days", series.volumes_gb.size()},
                         {"lines", stats.lines},
                         {"skipped", stats.skipped},
                         {"total_gb", served_total(series)}});
      traces.push_back(std::move(series));
    }
    if (traces.empty())
      throw std::runtime_error("no trace files found in " + opts.trace_dir);
  } else {
    std::vector<TraceProfile> profiles = load_trace_profiles_file(opts.profiles_path);
    for (const TraceProfile& p : profiles) {
      DailyLoadSeries series = synthesize_trace(p, cfg.simulated_days(), cfg.min_volume_gb());
      sources.push_back({{"os_id", series.os_id},
                         {"profile_base_daily_gb", p.base_daily_gb},
                         {"seed", p.seed},
                         {"days", series.volumes_gb.size()},
                         {"total_gb", served_total(series)}});
      traces.push_back(std::move(series));
    }
  }
  if (manifest) (*manifest)["traces"] = std::move(sources);
  return traces;
}

json run_to_json(const PlanResult& r) {
  json os = json::array();
  for (const OsRunSummary& s : r.os_summaries)
    os.push_back({{"os_id", s.os_id},
                  {"served_gb", s.served_gb},
                  {"reserved_paid_gb", s.reserved_paid_gb},
                  {"total_cost", s.total_cost},
                  {"premiums_paid", s.premiums_paid},
                  {"final_pool_gb", s.final_pool_gb},
                  {"dropped_gb", s.dropped_gb}});
  return {{"plan", r.spec.plan_id},
          {"sc_count", r.spec.sc_count},
          {"os", std::move(os)},
          {"cdn",
           {{"served_gb", r.cdn.served_gb},
            {"planned_gb", r.cdn.planned_gb},
            {"urgent_gb", r.cdn.urgent_gb},
            {"revenue", r.cdn.revenue},
            {"cost", r.cdn.cost},
            {"profit", r.cdn.profit}}}};
}

PlanResult run_from_json(const json& j) {
  PlanResult r;
  r.spec = plan_from_id(j.at("plan").get<std::string>(), j.at("sc_count").get<int>());
  for (const json& o : j.at("os")) {
    OsRunSummary s;
    s.os_id = o.at("os_id").get<std::string>();
    s.served_gb = o.at("served_gb").get<double>();
    s.reserved_paid_gb = o.at("reserved_paid_gb").get<double>();
    s.total_cost = o.at("total_cost").get<double>();
    s.premiums_paid = o.at("premiums_paid").get<double>();
    s.final_pool_gb = o.at("final_pool_gb").get<double>();
    s.dropped_gb = o.at("dropped_gb").get<double>();
    r.os_summaries.push_back(std::move(s));
  }
  const json& cdn = j.at("cdn");
  r.cdn.served_gb = cdn.at("served_gb").get<double>();
  r.cdn.planned_gb = cdn.at("planned_gb").get<double>();
  r.cdn.urgent_gb = cdn.at("urgent_gb").get<double>();
  r.cdn.revenue = cdn.at("revenue").get<double>();
  r.cdn.cost = cdn.at("cost").get<double>();
  r.cdn.profit = cdn.at("profit").get<double>();
  return r;
}

void emit_tables(const ReportBundle& bundle, TableFormat format, const fs::path& dir) {
  std::string ext = table_extension(format);
  {
    auto out = open_out(dir / ("os_costs" + ext));
    emit_os_cost_table(bundle, format, out);
  }
  {
    auto out = open_out(dir / ("os_reserved" + ext));
    emit_os_reserved_table(bundle, format, out);
  }
  {
    auto out = open_out(dir / ("os_cost_per_gb" + ext));
    emit_os_cost_per_gb_table(bundle, format, out);
  }
  {
    auto out = open_out(dir / ("cdn_economics" + ext));
    emit_cdn_table(bundle, format, out);
  }
}

int cmd_tiers(const CommonOpts& opts, int sc_count) {
  fs::create_directories(opts.out_dir);
  for (int sc : {6, 3}) {
    if (sc_count != 0 && sc_count != sc) continue;
    auto out = open_out(fs::path(opts.out_dir) / ("tiers_" + std::to_string(sc) + ".csv"));
    write_tier_table_csv(build_tier_table(sc), out);
  }
  return 0;
}

int cmd_price_options(const CommonOpts& opts, int sc_count, const std::string& rule_name) {
  SimConfig cfg = load_cfg(opts);
  fs::create_directories(opts.out_dir);
  auto out = open_out(fs::path(opts.out_dir) / "option_premiums.csv");
  out << "tiers,tier,strike_rule,strike,premium_bs,premium_baw,premium_binomial,"
         "premium_trinomial\n";
  char buf[256];
  for (int sc : {6, 3}) {
    if (sc_count != 0 && sc_count != sc) continue;
    TierTable table = build_tier_table(sc);
    for (StrikeRule rule : {StrikeRule::normal, StrikeRule::low_penalty}) {
      const char* rule_id = rule == StrikeRule::normal ? "normal" : "low_penalty";
      if (rule_name != "both" && rule_name != rule_id) continue;
      auto bs = so_premium_table(table, cfg, rule, PricingMethod::bs);
      auto baw = so_premium_table(table, cfg, rule, PricingMethod::baw);
      auto bin = so_premium_table(table, cfg, rule, PricingMethod::binomial);
      auto tri = so_premium_table(table, cfg, rule, PricingMethod::trinomial);
      for (int i = 0; i < table.sc_count; ++i) {
        const ServiceClass& tier = table.classes[static_cast<std::size_t>(i)];
        double strike = rule == StrikeRule::normal ? tier.normal_price : tier.low_penalty_price;
        std::snprintf(buf, sizeof(buf), "%d,%s,%s,%.8f,%.10f,%.10f,%.10f,%.10f\n", sc,
                      tier.id.c_str(), rule_id, strike, bs[static_cast<std::size_t>(i)],
                      baw[static_cast<std::size_t>(i)], bin[static_cast<std::size_t>(i)],
                      tri[static_cast<std::size_t>(i)]);
        out << buf;
      }
    }
  }
  return 0;
}

int cmd_simulate(const CommonOpts& opts, const std::string& plan_id, int sc_count) {
  SimConfig cfg = load_cfg(opts);
  json manifest;
  manifest["command"] = "simulate";
  manifest["plan"] = plan_id;
  manifest["sc_count"] = sc_count;
  manifest["config_digest"] = config_digest(cfg);
  manifest["market"] = opts.market;

  std::vector<DailyLoadSeries> traces = load_traces(opts, cfg, &manifest);
  Simulator sim(std::move(traces), cfg, parse_market(opts.market));
  PlanResult result = sim.run(plan_from_id(plan_id, sc_count));

  fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "ledger.csv");
    write_ledger_csv(result, out);
  }
  {
    auto out = open_out(dir / "trades.csv");
    write_trades_csv(result, out);
  }
  {
    auto out = open_out(dir / "contracts.csv");
    write_contracts_csv(result, out);
  }
  {
    auto out = open_out(dir / "os_summary.csv");
    write_os_summary_csv(result, out);
  }
  {
    auto out = open_out(dir / "cdn_summary.csv");
    write_cdn_summary_csv(result, out);
  }
  manifest["outputs"] = {"ledger.csv", "trades.csv", "contracts.csv", "os_summary.csv",
                         "cdn_summary.csv"};
  manifest["run"] = run_to_json(result);
  auto out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const CommonOpts& opts, std::vector<std::string> plans, int sc_count) {
  SimConfig cfg = load_cfg(opts);
  json manifest;
  manifest["command"] = "sweep";
  manifest["config_digest"] = config_digest(cfg);
  manifest["market"] = opts.market;

  std::vector<DailyLoadSeries> traces = load_traces(opts, cfg, &manifest);
  Simulator sim(std::move(traces), cfg, parse_market(opts.market));

  if (plans.empty()) plans = all_plan_ids();
  std::vector<int> sc_counts = sc_count == 0 ? std::vector<int>{6, 3}
                                             : std::vector<int>{sc_count};

  auto started = std::chrono::steady_clock::now();
  std::vector<PlanResult> results;
  for (int sc : sc_counts)
    for (const std::string& plan_id : plans) results.push_back(sim.run(plan_from_id(plan_id, sc)));
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);

  fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  emit_tables(build_reports(results), parse_format(opts.format), dir);

  json runs = json::array();
  for (const PlanResult& r : results) runs.push_back(run_to_json(r));
  json blob;
  blob["config_digest"] = config_digest(cfg);
  blob["runs"] = std::move(runs);
  {
    auto out = open_out(dir / "results.json");
    out << blob.dump(2) << '\n';
  }
  manifest["runs"] = results.size();
  manifest["elapsed_seconds"] = elapsed.count();
  manifest["outputs"] = {"os_costs", "os_reserved", "os_cost_per_gb", "cdn_economics",
                         "results.json"};
  auto out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  return 0;
}

int cmd_report(const CommonOpts& opts, const std::string& results_path) {
  std::ifstream in(results_path);
  if (!in) throw std::runtime_error("cannot read " + results_path);
  json blob = json::parse(in);
  std::vector<PlanResult> results;
  for (const json& run : blob.at("runs")) results.push_back(run_from_json(run));
  fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  emit_tables(build_reports(results), parse_format(opts.format), dir);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven simulator for tiered CDN resource billing"};
  app.require_subcommand(1);

  CommonOpts opts;
  int sc_count = 0;
  std::string plan_id = "1";
  std::string rule_name = "both";
  std::string results_path = "results.json";
  std::vector<std::string> plans;

  auto add_common = [&](CLI::App* cmd, bool traces) {
    cmd->add_option("--config", opts.config_path, "key = value configuration file");
    cmd->add_option("--out", opts.out_dir, "output directory");
    if (traces) {
      cmd->add_option("--trace-dir", opts.trace_dir,
                      "directory of access logs, one OS per file (.gz supported)");
      cmd->add_option("--profiles", opts.profiles_path, "synthetic trace profile file");
      cmd->add_option("--market", opts.market, "clearing mode: social or auction");
    }
  };

  CLI::App* tiers = app.add_subcommand("tiers", "write the tier price tables");
  tiers->add_option("--sc-count", sc_count, "3 or 6 (default: both)");
  add_common(tiers, false);

  CLI::App* price = app.add_subcommand("price-options", "write the option premium tables");
  price->add_option("--sc-count", sc_count, "3 or 6 (default: both)");
  price->add_option("--rule", rule_name, "strike rule: normal, low_penalty or both");
  add_common(price, false);

  CLI::App* simulate = app.add_subcommand("simulate", "run one billing plan over the traces");
  simulate->add_option("--plan", plan_id, "plan id, e.g. 1, 2.c, 3.2.a, 5.b")->required();
  simulate->add_option("--sc-count", sc_count, "3 or 6")->required();
  add_common(simulate, true);

  CLI::App* sweep = app.add_subcommand("sweep", "run every plan and write comparison tables");
  sweep->add_option("--plans", plans, "subset of plan ids (default: all)");
  sweep->add_option("--sc-count", sc_count, "restrict to 3 or 6 (default: both)");
  sweep->add_option("--format", opts.format, "table format: csv or markdown");
  add_common(sweep, true);

  CLI::App* report = app.add_subcommand("report", "re-emit tables from a sweep results.json");
  report->add_option("--results", results_path, "results.json from a sweep");
  report->add_option("--format", opts.format, "table format: csv or markdown");
  add_common(report, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (tiers->parsed()) return cmd_tiers(opts, sc_count);
    if (price->parsed()) return cmd_price_options(opts, sc_count, rule_name);
    if (simulate->parsed()) return cmd_simulate(opts, plan_id, sc_count);
    if (sweep->parsed()) return cmd_sweep(opts, plans, sc_count);
    if (report->parsed()) return cmd_report(opts, results_path);
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
