#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace synthpanel {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DD". Throws DataError on malformed input.
Date parse_date(std::string_view text);

/// Parses ISO-8601 UTC timestamps: "YYYY-MM-DDTHH:MM:SS[.fff]Z", the same with
/// a space separator or "+00:00" suffix, or a bare date (midnight).
Timestamp parse_timestamp(std::string_view text);

std::string format_date(Date d);

/// Integer division rounding toward negative infinity.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Maps UTC calendar dates onto consecutive blocks of `period_length_days`
/// days; block 0 starts at `anchor_date`.
struct PeriodCalendar {
  Date anchor_date = std::chrono::year{2018} / std::chrono::July / 1;
  int period_length_days = 10;

  /// Throws ConfigError unless the length is one of 1, 7, 10, 28.
  void validate() const;

  /// First calendar day of period t.
  Date period_start(std::int64_t t) const;
};

std::int64_t assign_period(Timestamp ts, const PeriodCalendar& cal);
std::int64_t assign_period(Date d, const PeriodCalendar& cal);

/// Whole days elapsed between two instants, floored (negative if `to` < `from`).
std::int64_t whole_days_between(Timestamp from, Timestamp to);

}  // namespace synthpanel
