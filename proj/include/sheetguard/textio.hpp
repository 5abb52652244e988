#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sheetguard {

// Shortest decimal text that reads back to the same double; -0 prints as 0.
std::string format_decimal(double v);
// Strict decimal parse: optional sign, digits, optional fraction and
// exponent. Rejects inf/nan/hex and trailing garbage.
std::optional<double> parse_decimal(std::string_view text);

// Tab-separated field escaping: backslash, TAB, LF and CR.
std::string escape_field(std::string_view raw);
std::optional<std::string> unescape_field(std::string_view escaped);

std::vector<std::string_view> split(std::string_view text, char sep);
// Splits on LF; a trailing LF does not produce an empty last line.
std::vector<std::string_view> split_lines(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace sheetguard
