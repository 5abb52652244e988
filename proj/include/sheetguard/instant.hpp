#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace sheetguard {

using Instant = std::chrono::sys_time<std::chrono::microseconds>;

// Accepts RFC 3339 date-times ("2024-03-01T09:30:00Z",
// "2024-03-01T10:30:00.25+01:00"); at most six fractional digits.
std::optional<Instant> parse_instant(std::string_view text);

// Canonical UTC rendering: "YYYY-MM-DDTHH:MM:SS[.ffffff]Z", fraction
// trimmed of trailing zeros and omitted when zero.
std::string format_instant(Instant t);

Instant now_utc();

double days_between(Instant from, Instant to);

}  // namespace sheetguard
