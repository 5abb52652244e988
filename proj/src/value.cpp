#include "sheetguard/value.hpp"

#include <array>
#include <utility>

#include "sheetguard/textio.hpp"

namespace sheetguard {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 7> kErrorCodes{{
    {ErrorCode::DivZero, "#DIV/0!"},
    {ErrorCode::NotAvailable, "#N/A"},
    {ErrorCode::Name, "#NAME?"},
    {ErrorCode::Null, "#NULL!"},
    {ErrorCode::Num, "#NUM!"},
    {ErrorCode::Ref, "#REF!"},
    {ErrorCode::Value, "#VALUE!"},
}};

}  // namespace

std::string_view error_code_text(ErrorCode code) {
  for (const auto& [c, text] : kErrorCodes)
    if (c == code) return text;
  return "#VALUE!";
}

std::optional<ErrorCode> parse_error_code(std::string_view text) {
  for (const auto& [c, name] : kErrorCodes)
    if (name == text) return c;
  return std::nullopt;
}

std::string display(const CellValue& v) {
  struct Visitor {
    std::string operator()(const Number& n) const { return format_decimal(n.value); }
    std::string operator()(const Text& t) const { return t.value; }
    std::string operator()(const Boolean& b) const { return b.value ? "TRUE" : "FALSE"; }
    std::string operator()(const ErrorValue& e) const { return std::string(error_code_text(e.code)); }
  };
  return std::visit(Visitor{}, v);
}

}  // namespace sheetguard
