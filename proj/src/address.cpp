#include "sheetguard/address.hpp"

#include <algorithm>
#include <cctype>

namespace sheetguard {

std::string fold_case(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool sheet_equal(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string column_letters(int col) {
  std::string out;
  while (col > 0) {
    int rem = (col - 1) % 26;
    out.insert(out.begin(), static_cast<char>('A' + rem));
    col = (col - 1) / 26;
  }
  return out;
}

std::optional<int> column_number(std::string_view letters) {
  if (letters.empty() || letters.size() > 3) return std::nullopt;
  int col = 0;
  for (char c : letters) {
    if (!std::isalpha(static_cast<unsigned char>(c))) return std::nullopt;
    col = col * 26 + (std::toupper(static_cast<unsigned char>(c)) - 'A' + 1);
  }
  if (col > kMaxCol) return std::nullopt;
  return col;
}

std::string CellAddress::a1() const { return column_letters(col) + std::to_string(row); }

std::string CellAddress::qualified() const { return sheet_prefix(sheet) + a1(); }

bool operator==(const CellAddress& a, const CellAddress& b) {
  return a.row == b.row && a.col == b.col && sheet_equal(a.sheet, b.sheet);
}

std::weak_ordering operator<=>(const CellAddress& a, const CellAddress& b) {
  if (auto c = fold_case(a.sheet) <=> fold_case(b.sheet); c != 0) return c;
  if (auto c = a.row <=> b.row; c != 0) return c;
  return a.col <=> b.col;
}

std::optional<std::pair<int, int>> parse_a1(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
  auto col = column_number(text.substr(0, i));
  if (!col || i == text.size()) return std::nullopt;
  if (text[i] == '0') return std::nullopt;
  long row = 0;
  for (std::size_t j = i; j < text.size(); ++j) {
    if (!std::isdigit(static_cast<unsigned char>(text[j]))) return std::nullopt;
    row = row * 10 + (text[j] - '0');
    if (row > kMaxRow) return std::nullopt;
  }
  return std::pair{static_cast<int>(row), *col};
}

namespace {

bool plain_sheet_name(std::string_view sheet) {
  if (sheet.empty() || std::isdigit(static_cast<unsigned char>(sheet.front()))) return false;
  return std::all_of(sheet.begin(), sheet.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

// Splits "Sheet!rest" honouring the quoted form; returns nullopt on bad quoting.
std::optional<std::pair<std::string, std::string_view>> split_sheet(std::string_view text) {
  if (!text.empty() && text.front() == '\'') {
    std::string sheet;
    std::size_t i = 1;
    for (; i < text.size(); ++i) {
      if (text[i] == '\'') {
        if (i + 1 < text.size() && text[i + 1] == '\'') {
          sheet += '\'';
          ++i;
          continue;
        }
        break;
      }
      sheet += text[i];
    }
    if (i + 1 >= text.size() || text[i] != '\'' || text[i + 1] != '!') return std::nullopt;
    return std::pair{sheet, text.substr(i + 2)};
  }
  auto bang = text.rfind('!');
  if (bang == std::string_view::npos) return std::nullopt;
  return std::pair{std::string(text.substr(0, bang)), text.substr(bang + 1)};
}

}  // namespace

std::string sheet_prefix(std::string_view sheet) {
  if (plain_sheet_name(sheet)) return std::string(sheet) + "!";
  std::string out = "'";
  for (char c : sheet) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'!";
}

std::optional<CellAddress> parse_qualified_address(std::string_view text) {
  auto parts = split_sheet(text);
  if (!parts || parts->first.empty()) return std::nullopt;
  auto rc = parse_a1(parts->second);
  if (!rc) return std::nullopt;
  return CellAddress{parts->first, rc->first, rc->second};
}

bool Region::contains(const CellAddress& a) const {
  return a.row >= top && a.row <= bottom && a.col >= left && a.col <= right &&
         sheet_equal(a.sheet, sheet);
}

bool Region::overlaps(const Region& o) const {
  return sheet_equal(sheet, o.sheet) && top <= o.bottom && o.top <= bottom &&
         left <= o.right && o.left <= right;
}

std::string Region::qualified() const {
  std::string out = sheet_prefix(sheet) + column_letters(left) + std::to_string(top);
  if (top != bottom || left != right) out += ":" + column_letters(right) + std::to_string(bottom);
  return out;
}

bool operator==(const Region& a, const Region& b) {
  return sheet_equal(a.sheet, b.sheet) && a.top == b.top && a.left == b.left &&
         a.bottom == b.bottom && a.right == b.right;
}

std::optional<Region> parse_region(std::string_view text) {
  auto parts = split_sheet(text);
  if (!parts || parts->first.empty()) return std::nullopt;
  auto body = parts->second;
  auto colon = body.find(':');
  auto first = parse_a1(body.substr(0, colon));
  if (!first) return std::nullopt;
  auto last = first;
  if (colon != std::string_view::npos) {
    last = parse_a1(body.substr(colon + 1));
    if (!last) return std::nullopt;
  }
  Region r{parts->first, std::min(first->first, last->first), std::min(first->second, last->second),
           std::max(first->first, last->first), std::max(first->second, last->second)};
  return r;
}

}  // namespace sheetguard
