#pragma once
// UTC date handling: RFC3339 parsing, study window and biweekly buckets.
// Everything works on epoch seconds / epoch days; no locale or TZ state.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polarlens/common.hpp"

namespace polarlens {

// Days between 1970-01-01 and y-m-d (proleptic Gregorian).
std::int64_t days_from_civil(int y, unsigned m, unsigned d);
void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d);

// "YYYY-MM-DD" -> epoch days. Throws ValidationError on malformed input.
std::int64_t parse_date(std::string_view s);
std::string format_date(std::int64_t epoch_days);

// RFC3339 timestamp ("2020-03-05T14:22:11Z", optional fraction, Z or +-HH:MM
// offset) -> UTC epoch seconds. nullopt if malformed.
std::optional<std::int64_t> parse_rfc3339(std::string_view s);
std::string format_rfc3339(std::int64_t epoch_seconds);

inline std::int64_t epoch_day_of(std::int64_t epoch_seconds) {
  // floor division; timestamps before 1970 round toward -inf
  std::int64_t d = epoch_seconds / 86400;
  if (epoch_seconds % 86400 < 0) --d;
  return d;
}

// Inclusive study window in whole UTC days.
struct WindowSpec {
  std::int64_t start_day = 0;
  std::int64_t end_day = 0;

  // "YYYY-MM-DD:YYYY-MM-DD"
  static WindowSpec parse(std::string_view spec);
  static WindowSpec paper_default();  // 2020-01-21 .. 2020-05-01

  bool contains(std::int64_t epoch_seconds) const {
    std::int64_t d = epoch_day_of(epoch_seconds);
    return d >= start_day && d <= end_day;
  }
  std::string to_string() const;
  bool operator==(const WindowSpec&) const = default;
};

// Ordered, non-overlapping date intervals covering the study window.
// Buckets are 1-based; bucket_of returns 0 for timestamps outside all
// intervals.
struct BiweeklySpec {
  struct Interval {
    std::int64_t start_day;
    std::int64_t end_day;  // inclusive
  };
  std::vector<Interval> intervals;

  // The seven intervals used for the 2020-01-21..2020-05-01 window; any other
  // window is segmented into 14-day chunks with the final chunk absorbing the
  // remainder.
  static BiweeklySpec for_window(const WindowSpec& window);

  int bucket_of(std::int64_t epoch_seconds) const;
  int count() const { return static_cast<int>(intervals.size()); }
  void validate(const WindowSpec& window) const;  // ascending, disjoint, covering
};

}  // namespace polarlens
