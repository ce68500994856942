#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace bmet {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Date = std::chrono::year_month_day;
using Clock = std::function<Timestamp()>;

Timestamp now_utc();
Clock system_clock();

// "2024-03-01T10:00:00Z", with ".mmm" only when the milliseconds are non-zero.
std::string format_iso8601(Timestamp t);
// Accepts YYYY-MM-DD[T ]HH:MM:SS[.fff][Z|+HH:MM|-HH:MM]. A missing zone means UTC.
std::optional<Timestamp> parse_iso8601(std::string_view s);

std::string format_date(Date d);          // 2024-03-01
std::string format_date_compact(Date d);  // 20240301
std::optional<Date> parse_date(std::string_view s);
Date to_date(Timestamp t);

}  // namespace bmet
