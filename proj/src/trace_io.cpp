#include "cdnmarket/trace_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace cdnmarket {

namespace {

const char* kMonthNames[12] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                               "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

int month_from_name(std::string_view name) {
  for (int m = 0; m < 12; ++m)
    if (name == kMonthNames[m]) return m + 1;
  return 0;
}

// Civil day number of a [dd/Mon/yyyy:...] timestamp, or nullopt-ish -1.
std::int64_t day_of_timestamp(std::string_view ts) {
  // dd/Mon/yyyy needs at least 11 characters
  if (ts.size() < 11 || ts[2] != '/' || ts[6] != '/') return -1;
  auto digits = [](std::string_view s) {
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return !s.empty();
  };
  std::string_view dd = ts.substr(0, 2);
  std::string_view mon = ts.substr(3, 3);
  std::string_view yyyy = ts.substr(7, 4);
  if (!digits(dd) || !digits(yyyy)) return -1;
  int month = month_from_name(mon);
  if (month == 0) return -1;
  int day = (dd[0] - '0') * 10 + (dd[1] - '0');
  int year = 0;
  for (char c : yyyy) year = year * 10 + (c - '0');
  std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                                  std::chrono::day{unsigned(day)}};
  if (!ymd.ok()) return -1;
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

// Returns false if the line carries no countable byte field.
bool parse_line(std::string_view line, std::int64_t* day, double* bytes) {
  std::size_t lb = line.find('[');
  std::size_t rb = line.find(']', lb == std::string_view::npos ? 0 : lb);
  if (lb == std::string_view::npos || rb == std::string_view::npos) return false;
  *day = day_of_timestamp(line.substr(lb + 1, rb - lb - 1));
  if (*day < 0) return false;

  std::size_t q1 = line.find('"', rb);
  if (q1 == std::string_view::npos) return false;
  std::size_t q2 = line.find('"', q1 + 1);
  if (q2 == std::string_view::npos) return false;

  // two whitespace-separated tokens after the request: status, bytes
  std::size_t pos = q2 + 1;
  auto next_token = [&](std::string_view& tok) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    tok = line.substr(start, pos - start);
    return !tok.empty();
  };
  std::string_view status, count;
  if (!next_token(status) || !next_token(count)) return false;
  if (count == "-") return false;
  double total = 0.0;
  for (char c : count) {
    if (c < '0' || c > '9') return false;
    total = total * 10.0 + (c - '0');
  }
  *bytes = total;
  return true;
}

// Uniform in (0, 1), identical on every platform for a given engine state.
double next_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double next_standard_normal(std::mt19937_64& rng) {
  double u1 = next_uniform(rng);
  double u2 = next_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

int next_poisson(std::mt19937_64& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  double limit = std::exp(-lambda);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= next_uniform(rng);
  } while (p > limit);
  return k - 1;
}

} // namespace

DailyLoadSeries parse_access_log(std::istream& in, std::string os_id, ParseStats* stats) {
  std::map<std::int64_t, double> per_day;
  ParseStats local;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++local.lines;
    std::int64_t day = 0;
    double bytes = 0.0;
    if (parse_line(line, &day, &bytes))
      per_day[day] += bytes;
    else
      ++local.skipped;
  }
  if (stats) *stats = local;

  DailyLoadSeries series;
  series.os_id = std::move(os_id);
  if (per_day.empty()) return series;
  series.start_day = per_day.begin()->first;
  std::int64_t last = per_day.rbegin()->first;
  series.volumes_gb.assign(static_cast<std::size_t>(last - series.start_day + 1), 0.0);
  for (auto& [day, bytes] : per_day)
    series.volumes_gb[static_cast<std::size_t>(day - series.start_day)] = bytes / kBytesPerGb;
  return series;
}

DailyLoadSeries read_access_log_file(const std::string& path, std::string os_id,
                                     ParseStats* stats) {
  gzFile file = gzopen(path.c_str(), "rb"); // reads plain files unchanged
  if (!file) throw std::runtime_error("cannot open log file: " + path);
  std::string content;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(file, buf, sizeof buf)) > 0) content.append(buf, static_cast<std::size_t>(n));
  bool failed = n < 0;
  gzclose(file);
  if (failed) throw std::runtime_error("error while reading log file: " + path);
  std::istringstream in(content);
  return parse_access_log(in, std::move(os_id), stats);
}

void render_access_log(const DailyLoadSeries& series, std::ostream& out) {
  char line[160];
  for (std::size_t i = 0; i < series.volumes_gb.size(); ++i) {
    std::chrono::sys_days date{std::chrono::days{series.start_day + static_cast<std::int64_t>(i)}};
    std::chrono::year_month_day ymd{date};
    long long bytes = std::llround(series.volumes_gb[i] * kBytesPerGb);
    std::snprintf(line, sizeof line,
                  "127.0.0.1 - - [%02u/%s/%d:12:00:00 +0000] \"GET /replay HTTP/1.0\" 200 %lld\n",
                  static_cast<unsigned>(ymd.day()), kMonthNames[static_cast<unsigned>(ymd.month()) - 1],
                  static_cast<int>(ymd.year()), bytes);
    out << line;
  }
}

DailyLoadSeries synthesize_trace(const TraceProfile& profile, int days, double min_volume_gb) {
  if (!(profile.base_daily_gb > 0.0))
    throw std::invalid_argument("synthesize_trace: base_daily_gb must be > 0");
  if (days < 1) throw std::invalid_argument("synthesize_trace: days must be >= 1");
  for (double p : profile.weekly_pattern)
    if (!(p > 0.0)) throw std::invalid_argument("synthesize_trace: weekly_pattern must be > 0");
  if (profile.noise_cv < 0.0) throw std::invalid_argument("synthesize_trace: noise_cv must be >= 0");
  if (profile.spike_rate_per_week < 0.0)
    throw std::invalid_argument("synthesize_trace: spike_rate_per_week must be >= 0");
  if (profile.spike_magnitude < 1.0)
    throw std::invalid_argument("synthesize_trace: spike_magnitude must be >= 1");

  std::mt19937_64 rng(profile.seed);
  double sigma = profile.noise_cv > 0.0 ? std::sqrt(std::log1p(profile.noise_cv * profile.noise_cv)) : 0.0;
  double daily_spike_rate = profile.spike_rate_per_week / 7.0;

  DailyLoadSeries series;
  series.os_id = profile.name;
  series.volumes_gb.reserve(static_cast<std::size_t>(days));
  for (int d = 0; d < days; ++d) {
    int week = d / 7;
    double baseline = profile.base_daily_gb * profile.weekly_pattern[d % 7] *
                      std::max(0.0, 1.0 + profile.trend_per_week * week);
    double noise = 1.0;
    if (profile.noise_cv > 0.0)
      noise = std::exp(sigma * next_standard_normal(rng) - 0.5 * sigma * sigma);
    bool spiked = next_poisson(rng, daily_spike_rate) > 0;
    double volume = baseline * noise * (spiked ? profile.spike_magnitude : 1.0);
    series.volumes_gb.push_back(volume < min_volume_gb ? 0.0 : volume);
  }
  return series;
}

double served_total(const DailyLoadSeries& series) {
  double total = 0.0;
  for (double v : series.volumes_gb) total += v;
  return total;
}

std::vector<TraceProfile> load_trace_profiles(std::istream& in) {
  std::map<int, TraceProfile> by_index;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto strip = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t\r\n");
      if (b == std::string::npos) return std::string();
      std::size_t e = s.find_last_not_of(" \t\r\n");
      return s.substr(b, e - b + 1);
    };
    std::string body = strip(line);
    if (body.empty()) continue;
    std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("trace profiles line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = strip(body.substr(0, eq));
    std::string value = strip(body.substr(eq + 1));
    if (key.rfind("profile.", 0) != 0)
      throw std::invalid_argument("trace profiles line " + std::to_string(lineno) +
                                  ": keys start with 'profile.'");
    std::size_t dot = key.find('.', 8);
    if (dot == std::string::npos)
      throw std::invalid_argument("trace profiles line " + std::to_string(lineno) +
                                  ": expected profile.<index>.<field>");
    int index = std::stoi(key.substr(8, dot - 8));
    std::string field = key.substr(dot + 1);
    TraceProfile& p = by_index[index];
    if (field == "name") {
      p.name = value;
    } else if (field == "base_daily_gb") {
      p.base_daily_gb = std::stod(value);
    } else if (field == "weekly_pattern") {
      std::istringstream vs(value);
      std::string item;
      int i = 0;
      while (std::getline(vs, item, ',')) {
        if (i >= 7) break;
        p.weekly_pattern[static_cast<std::size_t>(i++)] = std::stod(item);
      }
      if (i != 7)
        throw std::invalid_argument("trace profiles line " + std::to_string(lineno) +
                                    ": weekly_pattern needs 7 values");
    } else if (field == "noise_cv") {
      p.noise_cv = std::stod(value);
    } else if (field == "spike_rate_per_week") {
      p.spike_rate_per_week = std::stod(value);
    } else if (field == "spike_magnitude") {
      p.spike_magnitude = std::stod(value);
    } else if (field == "trend_per_week") {
      p.trend_per_week = std::stod(value);
    } else if (field == "seed") {
      p.seed = std::stoull(value);
    } else {
      throw std::invalid_argument("trace profiles line " + std::to_string(lineno) +
                                  ": unknown field '" + field + "'");
    }
  }
  std::vector<TraceProfile> profiles;
  for (auto& [index, profile] : by_index) {
    if (profile.name.empty())
      profile.name = "os-" + std::to_string(index);
    if (!(profile.base_daily_gb > 0.0))
      throw std::invalid_argument("trace profile " + std::to_string(index) +
                                  ": base_daily_gb missing");
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

std::vector<TraceProfile> load_trace_profiles_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace profiles file: " + path);
  return load_trace_profiles(in);
}

} // namespace cdnmarket
