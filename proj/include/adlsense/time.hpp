#pragma once

#include "adlsense/error.hpp"

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace adlsense {

using Millis = std::chrono::milliseconds;
using Instant = std::chrono::sys_time<Millis>;
using Date = std::chrono::year_month_day;

/// Offset from local midnight. Always within [0, 24h).
struct TimeOfDay {
  Millis since_midnight{0};

  static constexpr TimeOfDay hm(int hours, int minutes) {
    return TimeOfDay{std::chrono::hours(hours) + std::chrono::minutes(minutes)};
  }
  bool operator==(const TimeOfDay&) const = default;
  auto operator<=>(const TimeOfDay&) const = default;
};

/// Half-open time-of-day range that may wrap midnight (e.g. 22:00-06:00).
struct TimeOfDayRange {
  TimeOfDay begin;
  TimeOfDay end;

  bool contains(TimeOfDay t) const {
    if (begin <= end) return begin <= t && t < end;
    return t >= begin || t < end;
  }
  bool operator==(const TimeOfDayRange&) const = default;
};

/// Half-open instant window [begin, end).
struct TimeWindow {
  Instant begin;
  Instant end;

  bool contains(Instant t) const { return begin <= t && t < end; }
  bool operator==(const TimeWindow&) const = default;
};

inline TimeOfDay time_of_day(Instant t) {
  auto day = std::chrono::floor<std::chrono::days>(t);
  return TimeOfDay{std::chrono::duration_cast<Millis>(t - day)};
}

inline Instant at(Date date, TimeOfDay tod) {
  return Instant{std::chrono::sys_days{date}} + tod.since_midnight;
}

inline double to_minutes(Millis d) { return static_cast<double>(d.count()) / 60000.0; }
inline double to_seconds(Millis d) { return static_cast<double>(d.count()) / 1000.0; }
inline Millis from_minutes(double m) { return Millis{static_cast<std::int64_t>(m * 60000.0)}; }
inline Millis from_seconds(double s) { return Millis{static_cast<std::int64_t>(s * 1000.0)}; }

namespace detail {

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc{} && ptr == s.data() + pos + len;
}

inline bool parse_date_prefix(std::string_view s, Date& out) {
  int y = 0, m = 0, d = 0;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return false;
  if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, m) || !read_int(s, 8, 2, d)) return false;
  Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
            std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) return false;
  out = date;
  return true;
}

}  // namespace detail

/// Parses an RFC 3339 timestamp ("2023-01-01T23:00:00Z", optional fraction,
/// 'Z' or numeric offset). Sub-millisecond digits are truncated.
inline Instant parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  auto bad = [&]() -> Instant { fail(ErrorCode::BadTimestamp, "not an RFC 3339 timestamp: '" + std::string(s) + "'"); };
  Date date;
  if (!detail::parse_date_prefix(s, date)) return bad();
  if (s.size() < 20 || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || s[13] != ':' || s[16] != ':') return bad();
  int hh = 0, mm = 0, ss = 0;
  if (!detail::read_int(s, 11, 2, hh) || !detail::read_int(s, 14, 2, mm) || !detail::read_int(s, 17, 2, ss)) return bad();
  if (hh > 23 || mm > 59 || ss > 59) return bad();
  std::size_t pos = 19;
  std::int64_t frac_ms = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 3) frac_ms = frac_ms * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return bad();
    for (std::size_t i = digits; i < 3; ++i) frac_ms *= 10;
  }
  if (pos >= s.size()) return bad();
  minutes offset{0};
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    int oh = 0, om = 0;
    if (pos + 6 != s.size() || s[pos + 3] != ':') return bad();
    if (!detail::read_int(s, pos + 1, 2, oh) || !detail::read_int(s, pos + 4, 2, om)) return bad();
    if (oh > 23 || om > 59) return bad();
    offset = hours(oh) + minutes(om);
    if (s[pos] == '-') offset = -offset;
    pos += 6;
  } else {
    return bad();
  }
  if (pos != s.size()) return bad();
  Instant local = Instant{sys_days{date}} + hours(hh) + minutes(mm) + seconds(ss) + Millis(frac_ms);
  return local - offset;
}

/// Formats as UTC with a 'Z' suffix; milliseconds appear only when non-zero.
inline std::string format_rfc3339(Instant t) {
  using namespace std::chrono;
  auto day = floor<days>(t);
  Date date{day};
  hh_mm_ss<Millis> hms{t - day};
  char buf[40];
  auto ms = hms.subseconds().count();
  if (ms != 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()), static_cast<int>(ms));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
  }
  return buf;
}

inline Date parse_date(std::string_view s) {
  Date date;
  if (s.size() != 10 || !detail::parse_date_prefix(s, date)) {
    fail(ErrorCode::Validation, "not an ISO date (YYYY-MM-DD): '" + std::string(s) + "'");
  }
  return date;
}

inline std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

/// "HH:MM" or "HH:MM:SS".
inline TimeOfDay parse_time_of_day(std::string_view s) {
  int hh = 0, mm = 0, ss = 0;
  bool ok = (s.size() == 5 || s.size() == 8) && s[2] == ':' && detail::read_int(s, 0, 2, hh) &&
            detail::read_int(s, 3, 2, mm);
  if (ok && s.size() == 8) ok = s[5] == ':' && detail::read_int(s, 6, 2, ss);
  if (!ok || hh > 23 || mm > 59 || ss > 59) {
    fail(ErrorCode::Validation, "not a time of day (HH:MM): '" + std::string(s) + "'");
  }
  return TimeOfDay{std::chrono::hours(hh) + std::chrono::minutes(mm) + std::chrono::seconds(ss)};
}

inline std::string format_time_of_day(TimeOfDay t) {
  using namespace std::chrono;
  hh_mm_ss<Millis> hms{t.since_midnight};
  char buf[16];
  if (hms.seconds().count() != 0) {
    std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
  } else {
    std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()));
  }
  return buf;
}

inline Date next_day(Date d) { return Date{std::chrono::sys_days{d} + std::chrono::days{1}}; }
inline Date add_days(Date d, int n) { return Date{std::chrono::sys_days{d} + std::chrono::days{n}}; }
inline int days_between(Date from, Date to) {
  return static_cast<int>((std::chrono::sys_days{to} - std::chrono::sys_days{from}).count());
}

}  // namespace adlsense
