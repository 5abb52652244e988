#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace sheetguard {

enum class ErrorCode { DivZero, NotAvailable, Name, Null, Num, Ref, Value };

// "#DIV/0!", "#N/A", ...
std::string_view error_code_text(ErrorCode code);
std::optional<ErrorCode> parse_error_code(std::string_view text);

struct Number {
  double value = 0.0;
  bool operator==(const Number&) const = default;
};

struct Text {
  std::string value;
  bool operator==(const Text&) const = default;
};

struct Boolean {
  bool value = false;
  bool operator==(const Boolean&) const = default;
};

struct ErrorValue {
  ErrorCode code = ErrorCode::Value;
  bool operator==(const ErrorValue&) const = default;
};

using CellValue = std::variant<Number, Text, Boolean, ErrorValue>;

inline bool is_number(const CellValue& v) { return std::holds_alternative<Number>(v); }
inline bool is_error(const CellValue& v) { return std::holds_alternative<ErrorValue>(v); }

// Human-readable rendering used in findings and CLI output.
std::string display(const CellValue& v);

}  // namespace sheetguard
