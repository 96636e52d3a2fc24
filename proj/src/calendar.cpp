#include "synthpanel/calendar.hpp"

#include <array>
#include <cstdio>

#include "synthpanel/error.hpp"

namespace synthpanel {

namespace {

using namespace std::chrono;

constexpr int kMinYear = 1970;
constexpr int kMaxYear = 2100;

int parse_digits(std::string_view text, std::size_t pos, std::size_t count,
                 std::string_view whole) {
  if (pos + count > text.size()) {
    throw DataError("malformed date/time '" + std::string(whole) + "'");
  }
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') {
      throw DataError("malformed date/time '" + std::string(whole) + "'");
    }
    value = value * 10 + (c - '0');
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c,
                 std::string_view whole) {
  if (pos >= text.size() || text[pos] != c) {
    throw DataError("malformed date/time '" + std::string(whole) + "'");
  }
}

Date parse_date_prefix(std::string_view text, std::string_view whole) {
  int y = parse_digits(text, 0, 4, whole);
  expect_char(text, 4, '-', whole);
  int m = parse_digits(text, 5, 2, whole);
  expect_char(text, 7, '-', whole);
  int d = parse_digits(text, 8, 2, whole);
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw DataError("invalid calendar date '" + std::string(whole) + "'");
  }
  if (y < kMinYear || y > kMaxYear) {
    throw RangeError("date outside supported range 1970-2100: '" +
                     std::string(whole) + "'");
  }
  return sys_days{ymd};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

Date parse_date(std::string_view text) {
  std::string_view s = trim(text);
  if (s.size() != 10) {
    throw DataError("malformed date '" + std::string(text) + "'");
  }
  return parse_date_prefix(s, text);
}

Timestamp parse_timestamp(std::string_view text) {
  std::string_view s = trim(text);
  Date d = parse_date_prefix(s, text);
  if (s.size() == 10) return Timestamp{d};
  if (s[10] != 'T' && s[10] != ' ') {
    throw DataError("malformed timestamp '" + std::string(text) + "'");
  }
  int hh = parse_digits(s, 11, 2, text);
  expect_char(s, 13, ':', text);
  int mm = parse_digits(s, 14, 2, text);
  int ss = 0;
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    ss = parse_digits(s, 17, 2, text);
    pos = 19;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    }
  }
  std::string_view zone = s.substr(pos);
  if (!(zone.empty() || zone == "Z" || zone == "+00:00" || zone == "+0000")) {
    throw DataError("timestamp must be UTC: '" + std::string(text) + "'");
  }
  if (hh > 23 || mm > 59 || ss > 60) {
    throw DataError("malformed timestamp '" + std::string(text) + "'");
  }
  return Timestamp{d} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_date(Date d) {
  year_month_day ymd{d};
  std::array<char, 16> buf{};
  std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf.data();
}

void PeriodCalendar::validate() const {
  switch (period_length_days) {
    case 1:
    case 7:
    case 10:
    case 28:
      return;
    default:
      throw ConfigError("period length must be one of 1, 7, 10, 28 (got " +
                        std::to_string(period_length_days) + ")");
  }
}

Date PeriodCalendar::period_start(std::int64_t t) const {
  return anchor_date + days{t * period_length_days};
}

std::int64_t assign_period(Date d, const PeriodCalendar& cal) {
  year_month_day ymd{d};
  int y = static_cast<int>(ymd.year());
  if (y < kMinYear || y > kMaxYear) {
    throw RangeError("date outside supported range 1970-2100: " + format_date(d));
  }
  if (cal.period_length_days <= 0) {
    throw ConfigError("period length must be positive");
  }
  std::int64_t diff = (d - cal.anchor_date).count();
  return floor_div(diff, cal.period_length_days);
}

std::int64_t assign_period(Timestamp ts, const PeriodCalendar& cal) {
  return assign_period(floor<days>(ts), cal);
}

std::int64_t whole_days_between(Timestamp from, Timestamp to) {
  return floor<days>(to - from).count();
}

}  // namespace synthpanel
