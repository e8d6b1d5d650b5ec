#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace refnet {

// Calendar date with exact day arithmetic (proleptic Gregorian).
struct Date {
  int year = 0;
  int month = 0;  // 1..12
  int day = 0;    // 1..31

  friend bool operator==(const Date&, const Date&) = default;
};

namespace detail {
// Days since 1970-01-01 (Howard Hinnant's days_from_civil).
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

inline bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

inline int days_in_month(int y, int m) {
  static constexpr int lens[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return lens[m - 1];
}
}  // namespace detail

inline std::int64_t day_number(const Date& d) {
  return detail::days_from_civil(d.year, d.month, d.day);
}

inline Date date_from_day_number(std::int64_t n) {
  Date d;
  detail::civil_from_days(n, d.year, d.month, d.day);
  return d;
}

inline Date add_days(const Date& d, std::int64_t n) {
  return date_from_day_number(day_number(d) + n);
}

inline std::int64_t days_between(const Date& from, const Date& to) {
  return day_number(to) - day_number(from);
}

inline bool operator<(const Date& a, const Date& b) { return day_number(a) < day_number(b); }
inline bool operator<=(const Date& a, const Date& b) { return day_number(a) <= day_number(b); }

// Strict ISO-8601 YYYY-MM-DD; rejects impossible calendar dates.
inline std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto num = [](std::string_view t, int& out) {
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc{} && p == t.data() + t.size();
  };
  Date d;
  if (!num(s.substr(0, 4), d.year) || !num(s.substr(5, 2), d.month) || !num(s.substr(8, 2), d.day))
    return std::nullopt;
  if (d.month < 1 || d.month > 12) return std::nullopt;
  if (d.day < 1 || d.day > detail::days_in_month(d.year, d.month)) return std::nullopt;
  return d;
}

inline std::string format_date(const Date& d) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return std::string(buf);
}

struct DateRange {
  Date start;
  Date end;  // inclusive

  bool contains(const Date& d) const { return start <= d && d <= end; }
};

}  // namespace refnet
