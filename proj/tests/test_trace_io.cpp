#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"

#include "cdnmarket/trace_io.hpp"

using namespace cdnmarket;

namespace {

std::string clf_line(const char* date, long long bytes) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "203.0.113.9 - frank [%s:10:00:00 +0000] \"GET /a.bin HTTP/1.0\" 200 %lld\n", date,
                bytes);
  return buf;
}

TraceProfile flat_profile(double base, std::uint64_t seed) {
  TraceProfile p;
  p.name = "flat";
  p.base_daily_gb = base;
  p.seed = seed;
  return p;
}

} // namespace

TEST_SUITE("trace_io") {

TEST_CASE("single log line books its bytes on the request day") {
  std::istringstream in(clf_line("05/Mar/2021", 512));
  ParseStats stats;
  DailyLoadSeries s = parse_access_log(in, "os-a", &stats);
  CHECK(s.os_id == "os-a");
  REQUIRE(s.volumes_gb.size() == 1);
  CHECK(s.volumes_gb[0] == 512.0 / kBytesPerGb);
  CHECK(stats.lines == 1);
  CHECK(stats.skipped == 0);
}

TEST_CASE("same day lines add up") {
  std::istringstream in(clf_line("05/Mar/2021", 1024) + clf_line("05/Mar/2021", 1024));
  DailyLoadSeries s = parse_access_log(in, "os-a");
  REQUIRE(s.volumes_gb.size() == 1);
  CHECK(s.volumes_gb[0] == 2048.0 / kBytesPerGb);
}

TEST_CASE("gaps between days are zero filled") {
  std::istringstream in(clf_line("01/Jan/2020", 100) + clf_line("03/Jan/2020", 300));
  DailyLoadSeries s = parse_access_log(in, "os-a");
  REQUIRE(s.volumes_gb.size() == 3);
  CHECK(s.volumes_gb[0] == 100.0 / kBytesPerGb);
  CHECK(s.volumes_gb[1] == 0.0);
  CHECK(s.volumes_gb[2] == 300.0 / kBytesPerGb);
  // civil day number of 2020-01-01
  CHECK(s.start_day == 18262);
}

TEST_CASE("unusable lines are skipped and counted") {
  std::string text = clf_line("05/Mar/2021", 700);
  text += "garbage without brackets\n";
  text += clf_line("99/Mar/2021", 100);                                            // bad day
  text += "1.2.3.4 - - [05/Mar/2021:11:00:00 +0000] \"GET /x HTTP/1.0\" 304 -\n"; // dash bytes
  std::istringstream in(text);
  ParseStats stats;
  DailyLoadSeries s = parse_access_log(in, "os-a", &stats);
  CHECK(stats.lines == 4);
  CHECK(stats.skipped == 3);
  REQUIRE(s.volumes_gb.size() == 1);
  CHECK(s.volumes_gb[0] == 700.0 / kBytesPerGb);
}

TEST_CASE("empty input yields an empty series") {
  std::istringstream in("");
  ParseStats stats;
  DailyLoadSeries s = parse_access_log(in, "os-a", &stats);
  CHECK(s.volumes_gb.empty());
  CHECK(stats.lines == 0);
}

TEST_CASE("gzip compressed logs read transparently") {
  std::string path = "test_trace_io_tmp.log.gz";
  {
    gzFile gz = gzopen(path.c_str(), "wb");
    REQUIRE(gz != nullptr);
    std::string text = clf_line("10/Oct/2000", 2326) + clf_line("11/Oct/2000", 500);
    REQUIRE(gzwrite(gz, text.data(), static_cast<unsigned>(text.size())) ==
            static_cast<int>(text.size()));
    gzclose(gz);
  }
  DailyLoadSeries s = read_access_log_file(path, "os-gz");
  std::remove(path.c_str());
  REQUIRE(s.volumes_gb.size() == 2);
  CHECK(s.volumes_gb[0] == 2326.0 / kBytesPerGb);
  CHECK(s.volumes_gb[1] == 500.0 / kBytesPerGb);

  CHECK_THROWS_AS(read_access_log_file("no_such_file.log", "x"), std::runtime_error);
}

TEST_CASE("degenerate generator is exactly the base volume") {
  DailyLoadSeries s = synthesize_trace(flat_profile(10.0, 1), 21, 1e-9);
  REQUIRE(s.volumes_gb.size() == 21);
  for (double v : s.volumes_gb) CHECK(v == 10.0);
}

TEST_CASE("synthesis is deterministic per seed") {
  TraceProfile p = flat_profile(25.0, 77);
  p.noise_cv = 0.3;
  p.spike_rate_per_week = 0.5;
  p.spike_magnitude = 4.0;
  DailyLoadSeries a = synthesize_trace(p, 140, 1e-9);
  DailyLoadSeries b = synthesize_trace(p, 140, 1e-9);
  CHECK(a.volumes_gb == b.volumes_gb);
  p.seed = 78;
  DailyLoadSeries c = synthesize_trace(p, 140, 1e-9);
  CHECK(a.volumes_gb != c.volumes_gb);
}

TEST_CASE("spike days scale the baseline by the configured magnitude") {
  TraceProfile p = flat_profile(10.0, 5);
  p.spike_rate_per_week = 3.5; // every other day on average
  p.spike_magnitude = 6.0;
  DailyLoadSeries s = synthesize_trace(p, 280, 1e-9);
  int spikes = 0, quiet = 0;
  for (double v : s.volumes_gb) {
    if (v >= 60.0 - 1e-9) {
      ++spikes;
      CHECK(v == doctest::Approx(60.0).epsilon(1e-12));
    } else {
      ++quiet;
      CHECK(v == doctest::Approx(10.0).epsilon(1e-12));
    }
  }
  CHECK(spikes > 0);
  CHECK(quiet > 0);
}

TEST_CASE("generator rejects malformed profiles") {
  CHECK_THROWS_AS(synthesize_trace(flat_profile(0.0, 1), 10, 1e-9), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_trace(flat_profile(10.0, 1), 0, 1e-9), std::invalid_argument);
  TraceProfile p = flat_profile(10.0, 1);
  p.spike_magnitude = 0.5;
  CHECK_THROWS_AS(synthesize_trace(p, 10, 1e-9), std::invalid_argument);
  p = flat_profile(10.0, 1);
  p.noise_cv = -0.1;
  CHECK_THROWS_AS(synthesize_trace(p, 10, 1e-9), std::invalid_argument);
}

TEST_CASE("served totals sum the series") {
  DailyLoadSeries s;
  CHECK(served_total(s) == 0.0);
  s.volumes_gb = {1.0, 2.0, 3.0};
  CHECK(served_total(s) == 6.0);
}

TEST_CASE("rendered logs parse back to the same series") {
  TraceProfile p = flat_profile(3.25, 99);
  p.noise_cv = 0.4;
  p.spike_rate_per_week = 1.0;
  p.spike_magnitude = 5.0;
  DailyLoadSeries original = synthesize_trace(p, 120, 1e-9);
  original.start_day = 18993; // arbitrary civil day anchor

  std::ostringstream rendered;
  render_access_log(original, rendered);
  std::istringstream in(rendered.str());
  DailyLoadSeries parsed = parse_access_log(in, original.os_id);

  CHECK(parsed.start_day == original.start_day);
  REQUIRE(parsed.volumes_gb.size() == original.volumes_gb.size());
  for (std::size_t i = 0; i < parsed.volumes_gb.size(); ++i)
    CHECK(std::abs(parsed.volumes_gb[i] - original.volumes_gb[i]) <= 1e-9);
}

TEST_CASE("profile files load the shipped schema") {
  std::istringstream in(
      "# two servers\n"
      "profile.1.name = alpha\n"
      "profile.1.base_daily_gb = 12.5\n"
      "profile.1.weekly_pattern = 1, 1, 1, 1, 1, 0.8, 0.7\n"
      "profile.1.noise_cv = 0.2\n"
      "profile.1.seed = 401\n"
      "profile.2.base_daily_gb = 3\n"
      "profile.2.seed = 402\n");
  std::vector<TraceProfile> profiles = load_trace_profiles(in);
  REQUIRE(profiles.size() == 2);
  CHECK(profiles[0].name == "alpha");
  CHECK(profiles[0].base_daily_gb == 12.5);
  CHECK(profiles[0].weekly_pattern[5] == 0.8);
  CHECK(profiles[0].seed == 401);
  CHECK(profiles[1].name == "os-2"); // defaulted from the index
}

TEST_CASE("profile files reject unknown or incomplete entries") {
  auto parse = [](const char* text) {
    std::istringstream in(text);
    return load_trace_profiles(in);
  };
  CHECK_THROWS_AS(parse("profile.1.nope = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("base_daily_gb = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("profile.1.name = x\n"), std::invalid_argument); // missing base
  CHECK_THROWS_AS(parse("profile.1.weekly_pattern = 1, 2, 3\n"), std::invalid_argument);
}

TEST_CASE("shipped trace profiles describe the six servers") {
  std::vector<TraceProfile> profiles =
      load_trace_profiles_file(std::string(CDNMARKET_DATA_DIR) + "/trace_profiles.cfg");
  REQUIRE(profiles.size() == 6);
  for (const TraceProfile& p : profiles) {
    CHECK(!p.name.empty());
    CHECK(p.base_daily_gb > 0.0);
    CHECK(p.seed != 0);
  }
}

} // TEST_SUITE
