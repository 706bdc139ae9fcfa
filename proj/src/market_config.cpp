#include "cdnmarket/market_config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cdnmarket {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct TierSeed {
  const char* id;
  double monthly_lower;
  double monthly_upper;
  double normal;
  double high;
  double low;
  double prem_high;
  double prem_low;
};

// Published schedules. Prices are kept as printed literals; the derived
// relations (high = 1.2x, low = 0.95x, merged prices = pairwise means,
// unlimited = 11/12 of the previous tier) are enforced by tests, not here.
constexpr TierSeed kSixTier[] = {
    {"P1", 0.0, 10.0, 0.035, 0.042, 0.03325, 0.00029513, 0.00028038},
    {"P2", 10.0, 100.0, 0.030, 0.036, 0.0285, 0.00025297, 0.00024032},
    {"P3", 100.0, 1000.0, 0.025, 0.03, 0.02375, 0.00021081, 0.00020027},
    {"P4", 1000.0, 10000.0, 0.020, 0.024, 0.019, 0.00016865, 0.00016022},
    {"P5", 10000.0, 100000.0, 0.015, 0.018, 0.01425, 0.00012649, 0.00012016},
    {"P6", 100000.0, 1000000.0, 0.012, 0.0144, 0.0114, 0.00010119, 0.00009613},
    {"P7", 1000000.0, kInf, 0.011, 0.0, 0.0, 0.0, 0.0},
};

constexpr TierSeed kThreeTier[] = {
    {"P1", 0.0, 100.0, 0.0325, 0.039, 0.030875, 0.00027405, 0.00026035},
    {"P2", 100.0, 10000.0, 0.0225, 0.027, 0.021375, 0.00018973, 0.00018024},
    {"P3", 10000.0, 1000000.0, 0.0135, 0.0162, 0.012825, 0.00011384, 0.00010815},
    {"P4", 1000000.0, kInf, 0.012375, 0.0, 0.0, 0.0, 0.0},
};

ServiceClass make_class(const TierSeed& seed, bool unlimited) {
  ServiceClass sc;
  sc.id = seed.id;
  sc.monthly_lower_gb = seed.monthly_lower;
  sc.monthly_upper_gb = seed.monthly_upper;
  sc.daily_lower_gb = monthly_to_daily(seed.monthly_lower);
  sc.daily_upper_gb = unlimited ? kInf : monthly_to_daily(seed.monthly_upper);
  sc.normal_price = seed.normal;
  sc.high_penalty_price = seed.high;
  sc.low_penalty_price = seed.low;
  sc.so_premium_high = seed.prem_high;
  sc.so_premium_low = seed.prem_low;
  sc.unlimited = unlimited;
  return sc;
}

bool in_range(double v, double lower, double upper, bool first) {
  if (v < 0.0) return false;
  if (first) return v <= upper;
  return v > lower && v <= upper;
}

} // namespace

bool ServiceClass::contains_monthly(double gb) const {
  return in_range(gb, monthly_lower_gb, monthly_upper_gb, monthly_lower_gb == 0.0);
}

bool ServiceClass::contains_daily(double gb) const {
  return in_range(gb, daily_lower_gb, daily_upper_gb, daily_lower_gb == 0.0);
}

TierTable build_tier_table(int sc_count) {
  if (sc_count != 3 && sc_count != 6)
    throw std::invalid_argument("build_tier_table: sc_count must be 3 or 6");
  TierTable table;
  table.sc_count = sc_count;
  if (sc_count == 6) {
    for (const TierSeed& seed : kSixTier)
      table.classes.push_back(make_class(seed, seed.monthly_upper == kInf));
  } else {
    for (const TierSeed& seed : kThreeTier)
      table.classes.push_back(make_class(seed, seed.monthly_upper == kInf));
  }
  return table;
}

double monthly_to_daily(double tv_monthly_gb) {
  if (tv_monthly_gb < 0.0)
    throw std::invalid_argument("monthly_to_daily: negative volume");
  return tv_monthly_gb / 28.0;
}

const ServiceClass& tier_for_volume(const TierTable& table, double daily_gb) {
  if (!(daily_gb >= 0.0))
    throw std::invalid_argument("tier_for_volume: volume must be >= 0");
  for (const ServiceClass& sc : table.classes)
    if (sc.contains_daily(daily_gb)) return sc;
  return table.classes.back(); // unlimited tier is open above
}

const ServiceClass& tier_for_monthly_volume(const TierTable& table, double monthly_gb) {
  if (!(monthly_gb >= 0.0))
    throw std::invalid_argument("tier_for_monthly_volume: volume must be >= 0");
  for (const ServiceClass& sc : table.classes)
    if (sc.contains_monthly(monthly_gb)) return sc;
  return table.classes.back();
}

void write_tier_table_csv(const TierTable& table, std::ostream& out) {
  out << "id,monthly_lower_gb,monthly_upper_gb,daily_lower_gb,daily_upper_gb,"
         "normal_price,high_penalty_price,low_penalty_price,so_premium_high,so_premium_low,unlimited\n";
  char line[512];
  for (const ServiceClass& sc : table.classes) {
    if (sc.unlimited) {
      std::snprintf(line, sizeof line, "%s,%.6f,inf,%.6f,inf,%.6f,,,,,1\n", sc.id.c_str(),
                    sc.monthly_lower_gb, sc.daily_lower_gb, sc.normal_price);
    } else {
      std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.8f,%.8f,0\n",
                    sc.id.c_str(), sc.monthly_lower_gb, sc.monthly_upper_gb, sc.daily_lower_gb,
                    sc.daily_upper_gb, sc.normal_price, sc.high_penalty_price,
                    sc.low_penalty_price, sc.so_premium_high, sc.so_premium_low);
    }
    out << line;
  }
}

double SimConfig::min_volume_gb() const { return min_volume_bytes / 1073741824.0; }

void SimConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("SimConfig: " + msg); };
  if (origin_servers < 1) fail("origin_servers must be >= 1");
  if (total_weeks < 1) fail("total_weeks must be >= 1");
  if (reference_period_days != 7) fail("reference_period_days must be 7");
  if (control_granularity_hours != 24) fail("control_granularity_hours must be 24");
  if (min_volume_bytes <= 0.0) fail("min_volume_bytes must be > 0");
  if (kernel != "gaussian") fail("kernel must be 'gaussian'");
  if (kernel_bandwidth_min <= 0.0 || kernel_bandwidth_max < kernel_bandwidth_min)
    fail("kernel bandwidth range invalid");
  if (so_ttm_days < 1) fail("so_ttm_days must be >= 1");
  if (risk_free_rate < 0.0) fail("risk_free_rate must be >= 0");
  if (volatility <= 0.0) fail("volatility must be > 0");
  if (dividend_yield < 0.0) fail("dividend_yield must be >= 0");
  if (days_per_month != 28) fail("days_per_month must be 28");
  if (wholesale_price <= 0.0) fail("wholesale_price must be > 0");
  if (wholesale_penalty_multiplier <= 0.0) fail("wholesale_penalty_multiplier must be > 0");
  if (thldm_multiplier <= 1.0) fail("thldm_multiplier must be > 1");
  if (irdm_decay < 0.0 || irdm_decay >= 1.0) fail("irdm_decay must be in [0, 1)");
  if (dedm_blend < 0.0 || dedm_blend > 1.0) fail("dedm_blend must be in [0, 1]");
}

namespace {

using Setter = std::function<void(SimConfig&, const std::string&)>;

double parse_double(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("config: bad number for " + key);
  return d;
}

int parse_int(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  int i = std::stoi(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("config: bad integer for " + key);
  return i;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = {
      {"origin_servers", [](SimConfig& c, const std::string& v) { c.origin_servers = parse_int(v, "origin_servers"); }},
      {"total_weeks", [](SimConfig& c, const std::string& v) { c.total_weeks = parse_int(v, "total_weeks"); }},
      {"reference_period_days", [](SimConfig& c, const std::string& v) { c.reference_period_days = parse_int(v, "reference_period_days"); }},
      {"control_granularity_hours", [](SimConfig& c, const std::string& v) { c.control_granularity_hours = parse_int(v, "control_granularity_hours"); }},
      {"min_volume_bytes", [](SimConfig& c, const std::string& v) { c.min_volume_bytes = parse_double(v, "min_volume_bytes"); }},
      {"kernel", [](SimConfig& c, const std::string& v) { c.kernel = v; }},
      {"kernel_bandwidth_min", [](SimConfig& c, const std::string& v) { c.kernel_bandwidth_min = parse_double(v, "kernel_bandwidth_min"); }},
      {"kernel_bandwidth_max", [](SimConfig& c, const std::string& v) { c.kernel_bandwidth_max = parse_double(v, "kernel_bandwidth_max"); }},
      {"so_ttm_days", [](SimConfig& c, const std::string& v) { c.so_ttm_days = parse_int(v, "so_ttm_days"); }},
      {"risk_free_rate", [](SimConfig& c, const std::string& v) { c.risk_free_rate = parse_double(v, "risk_free_rate"); }},
      {"volatility", [](SimConfig& c, const std::string& v) { c.volatility = parse_double(v, "volatility"); }},
      {"dividend_yield", [](SimConfig& c, const std::string& v) { c.dividend_yield = parse_double(v, "dividend_yield"); }},
      {"days_per_month", [](SimConfig& c, const std::string& v) { c.days_per_month = parse_int(v, "days_per_month"); }},
      {"wholesale_price", [](SimConfig& c, const std::string& v) { c.wholesale_price = parse_double(v, "wholesale_price"); }},
      {"wholesale_penalty_multiplier", [](SimConfig& c, const std::string& v) { c.wholesale_penalty_multiplier = parse_double(v, "wholesale_penalty_multiplier"); }},
      {"thldm_multiplier", [](SimConfig& c, const std::string& v) { c.thldm_multiplier = parse_double(v, "thldm_multiplier"); }},
      {"irdm_decay", [](SimConfig& c, const std::string& v) { c.irdm_decay = parse_double(v, "irdm_decay"); }},
      {"dedm_blend", [](SimConfig& c, const std::string& v) { c.dedm_blend = parse_double(v, "dedm_blend"); }},
  };
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

} // namespace

SimConfig load_config(std::istream& in) {
  SimConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(cfg, value);
  }
  cfg.validate();
  return cfg;
}

SimConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return load_config(in);
}

std::string config_digest(const SimConfig& cfg) {
  std::ostringstream canon;
  canon.precision(17);
  canon << "origin_servers=" << cfg.origin_servers << '\n'
        << "total_weeks=" << cfg.total_weeks << '\n'
        << "reference_period_days=" << cfg.reference_period_days << '\n'
        << "control_granularity_hours=" << cfg.control_granularity_hours << '\n'
        << "min_volume_bytes=" << cfg.min_volume_bytes << '\n'
        << "kernel=" << cfg.kernel << '\n'
        << "kernel_bandwidth_min=" << cfg.kernel_bandwidth_min << '\n'
        << "kernel_bandwidth_max=" << cfg.kernel_bandwidth_max << '\n'
        << "so_ttm_days=" << cfg.so_ttm_days << '\n'
        << "risk_free_rate=" << cfg.risk_free_rate << '\n'
        << "volatility=" << cfg.volatility << '\n'
        << "dividend_yield=" << cfg.dividend_yield << '\n'
        << "days_per_month=" << cfg.days_per_month << '\n'
        << "wholesale_price=" << cfg.wholesale_price << '\n'
        << "wholesale_penalty_multiplier=" << cfg.wholesale_penalty_multiplier << '\n'
        << "thldm_multiplier=" << cfg.thldm_multiplier << '\n'
        << "irdm_decay=" << cfg.irdm_decay << '\n'
        << "dedm_blend=" << cfg.dedm_blend << '\n';
  // FNV-1a, 64 bit
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canon.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace cdnmarket
