#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace sheetguard {

inline constexpr int kMaxRow = 1048576;
inline constexpr int kMaxCol = 16384;

// ASCII case folding; sheet names compare case-insensitively.
std::string fold_case(std::string_view s);
bool sheet_equal(std::string_view a, std::string_view b);

// 1 -> "A", 27 -> "AA".
std::string column_letters(int col);
// Inverse of column_letters; nullopt for anything that is not 1..3 letters
// naming a column in range.
std::optional<int> column_number(std::string_view letters);

struct CellAddress {
  std::string sheet;
  int row = 1;
  int col = 1;

  // "B3", without the sheet.
  std::string a1() const;
  // "Sheet1!B3"; the sheet is quoted when it needs to be.
  std::string qualified() const;
};

bool operator==(const CellAddress& a, const CellAddress& b);
// Orders by (folded sheet, row, col); this is the canonical file order.
std::weak_ordering operator<=>(const CellAddress& a, const CellAddress& b);

// Parses "B3" (no sheet, no '$').
std::optional<std::pair<int, int>> parse_a1(std::string_view text);
// Parses "Sheet1!B3" or "'My Sheet'!B3".
std::optional<CellAddress> parse_qualified_address(std::string_view text);

// Renders a sheet name, quoting it when it is not a plain identifier.
std::string sheet_prefix(std::string_view sheet);

struct Region {
  std::string sheet;
  int top = 1;
  int left = 1;
  int bottom = 1;
  int right = 1;

  bool contains(const CellAddress& a) const;
  bool overlaps(const Region& other) const;
  CellAddress top_left() const { return {sheet, top, left}; }
  std::string qualified() const;
};

bool operator==(const Region& a, const Region& b);

// "Sheet1!A1:D20" or "Sheet1!B4" (single cell).
std::optional<Region> parse_region(std::string_view text);

}  // namespace sheetguard
