#include "polarlens/dates.hpp"

#include <cctype>
#include <cstdio>

namespace polarlens {

// Howard Hinnant's algorithm, valid for the proleptic Gregorian calendar.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

namespace {

bool parse_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

bool valid_ymd(int y, int m, int d) {
  if (m < 1 || m > 12 || d < 1) return false;
  static const int dim[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int md = dim[m - 1];
  if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) md = 29;
  return d <= md;
}

}  // namespace

std::int64_t parse_date(std::string_view s) {
  int y, m, d;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !parse_uint(s, 0, 4, y) ||
      !parse_uint(s, 5, 2, m) || !parse_uint(s, 8, 2, d) || !valid_ymd(y, m, d))
    throw ValidationError("bad date '" + std::string(s) + "', expected YYYY-MM-DD");
  return days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::string format_date(std::int64_t epoch_days) {
  int y;
  unsigned m, d;
  civil_from_days(epoch_days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return buf;
}

std::optional<std::int64_t> parse_rfc3339(std::string_view s) {
  int y, mo, d, h, mi, se;
  if (s.size() < 20) return std::nullopt;
  if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':')
    return std::nullopt;
  if (!parse_uint(s, 0, 4, y) || !parse_uint(s, 5, 2, mo) || !parse_uint(s, 8, 2, d) ||
      !parse_uint(s, 11, 2, h) || !parse_uint(s, 14, 2, mi) || !parse_uint(s, 17, 2, se))
    return std::nullopt;
  if (!valid_ymd(y, mo, d) || h > 23 || mi > 59 || se > 60) return std::nullopt;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {  // fractional seconds: ignored
    ++pos;
    std::size_t digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos, ++digits;
    if (digits == 0) return std::nullopt;
  }
  if (pos >= s.size()) return std::nullopt;
  std::int64_t offset = 0;
  char c = s[pos];
  if (c == 'Z' || c == 'z') {
    if (pos + 1 != s.size()) return std::nullopt;
  } else if (c == '+' || c == '-') {
    int oh, om;
    if (pos + 6 != s.size() || s[pos + 3] != ':' || !parse_uint(s, pos + 1, 2, oh) ||
        !parse_uint(s, pos + 4, 2, om) || oh > 23 || om > 59)
      return std::nullopt;
    offset = (c == '+' ? 1 : -1) * (oh * 3600 + om * 60);
  } else {
    return std::nullopt;
  }
  std::int64_t days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return days * 86400 + h * 3600 + mi * 60 + se - offset;
}

std::string format_rfc3339(std::int64_t epoch_seconds) {
  std::int64_t day = epoch_day_of(epoch_seconds);
  std::int64_t rem = epoch_seconds - day * 86400;
  int y;
  unsigned m, d;
  civil_from_days(day, y, m, d);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                static_cast<int>(rem % 60));
  return buf;
}

WindowSpec WindowSpec::parse(std::string_view spec) {
  auto colon = spec.find(':');
  if (colon == std::string_view::npos)
    throw ValidationError("bad window '" + std::string(spec) +
                          "', expected YYYY-MM-DD:YYYY-MM-DD");
  WindowSpec w;
  w.start_day = parse_date(spec.substr(0, colon));
  w.end_day = parse_date(spec.substr(colon + 1));
  if (w.end_day < w.start_day) throw ValidationError("window end precedes start");
  return w;
}

WindowSpec WindowSpec::paper_default() {
  return WindowSpec{days_from_civil(2020, 1, 21), days_from_civil(2020, 5, 1)};
}

std::string WindowSpec::to_string() const {
  return format_date(start_day) + ":" + format_date(end_day);
}

BiweeklySpec BiweeklySpec::for_window(const WindowSpec& window) {
  BiweeklySpec spec;
  if (window == WindowSpec::paper_default()) {
    auto day = [](unsigned m, unsigned d) { return days_from_civil(2020, m, d); };
    spec.intervals = {
        {day(1, 21), day(1, 31)}, {day(2, 1), day(2, 15)},  {day(2, 16), day(2, 29)},
        {day(3, 1), day(3, 16)},  {day(3, 17), day(3, 31)}, {day(4, 1), day(4, 15)},
        {day(4, 16), day(5, 1)},
    };
    return spec;
  }
  std::int64_t start = window.start_day;
  while (start <= window.end_day) {
    std::int64_t end = start + 13;
    // last chunk absorbs a short remainder so the spec always covers the window
    if (end > window.end_day || window.end_day - end < 14) end = window.end_day;
    spec.intervals.push_back({start, end});
    start = end + 1;
  }
  return spec;
}

int BiweeklySpec::bucket_of(std::int64_t epoch_seconds) const {
  std::int64_t d = epoch_day_of(epoch_seconds);
  for (std::size_t i = 0; i < intervals.size(); ++i)
    if (d >= intervals[i].start_day && d <= intervals[i].end_day) return static_cast<int>(i + 1);
  return 0;
}

void BiweeklySpec::validate(const WindowSpec& window) const {
  if (intervals.empty()) throw ValidationError("bucket spec has no intervals");
  if (intervals.front().start_day != window.start_day ||
      intervals.back().end_day != window.end_day)
    throw ValidationError("bucket spec does not cover the study window");
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].end_day < intervals[i].start_day)
      throw ValidationError("bucket interval ends before it starts");
    if (i > 0 && intervals[i].start_day != intervals[i - 1].end_day + 1)
      throw ValidationError("bucket intervals must be ascending and contiguous");
  }
}

}  // namespace polarlens
