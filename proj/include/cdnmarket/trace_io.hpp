#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cdnmarket {

inline constexpr double kBytesPerGb = 1073741824.0; // 2^30

// Served volume per day slot, in GB. start_day is a civil day number
// (days since 1970-01-01 for parsed logs, 0 for synthetic traces).
struct DailyLoadSeries {
  std::string os_id;
  std::int64_t start_day = 0;
  std::vector<double> volumes_gb;
};

struct ParseStats {
  std::size_t lines = 0;
  std::size_t skipped = 0;
};

// Common/Combined Log Format. Response bytes are summed per civil day of the
// request timestamp; unparseable lines and "-" byte fields are skipped and
// counted. Gaps between days are zero-filled.
DailyLoadSeries parse_access_log(std::istream& in, std::string os_id, ParseStats* stats = nullptr);

// Reads a log file, transparently handling gzip-compressed input.
DailyLoadSeries read_access_log_file(const std::string& path, std::string os_id,
                                     ParseStats* stats = nullptr);

// One synthetic log line per day slot (zero-byte lines keep empty days), so
// parse_access_log(render(...)) reproduces the series to byte resolution.
void render_access_log(const DailyLoadSeries& series, std::ostream& out);

struct TraceProfile {
  std::string name;
  double base_daily_gb = 0.0;
  std::array<double, 7> weekly_pattern{1, 1, 1, 1, 1, 1, 1};
  double noise_cv = 0.0;          // lognormal, unit mean
  double spike_rate_per_week = 0.0;
  double spike_magnitude = 1.0;
  double trend_per_week = 0.0;
  std::uint64_t seed = 0;
};

// volume(d) = base * pattern[d mod 7] * (1 + trend * week(d)) * noise * spike.
// Deterministic for a given profile: the generator draws its own uniforms so
// the stream does not depend on the standard library's distributions.
DailyLoadSeries synthesize_trace(const TraceProfile& profile, int days, double min_volume_gb);

double served_total(const DailyLoadSeries& series);

// profile.<index>.<field> = value schema; see data/trace_profiles.cfg.
std::vector<TraceProfile> load_trace_profiles(std::istream& in);
std::vector<TraceProfile> load_trace_profiles_file(const std::string& path);

} // namespace cdnmarket
