#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "sheetguard/address.hpp"
#include "sheetguard/formula.hpp"
#include "sheetguard/instant.hpp"
#include "sheetguard/value.hpp"

namespace sheetguard {

struct Literal {
  CellValue value;
  bool operator==(const Literal&) const = default;
};

// A formula cell. The AST is derived from `source`; when the source does not
// parse, `ast` is null and `parse_error` says why. Equality ignores the
// derived fields.
struct Formula {
  std::string source;
  formula::NodePtr ast;
  std::string parse_error;
  std::optional<CellValue> cached;

  static Formula from_source(std::string source, std::optional<CellValue> cached = std::nullopt);

  bool operator==(const Formula& o) const { return source == o.source && cached == o.cached; }
};

// Empty cells are never stored; absence from the map means empty.
using CellContent = std::variant<Literal, Formula>;

inline bool is_formula(const CellContent& c) { return std::holds_alternative<Formula>(c); }

// The literal value, or the cached value of a formula cell.
std::optional<CellValue> value_of(const CellContent& c);

// Compact rendering for diagnostics: "5", "=A1+1 [3]".
std::string describe(const CellContent& c);

using CellMap = std::map<CellAddress, CellContent>;

struct Snapshot {
  std::string workbook_id;
  Instant timestamp{};
  std::string actor;
  std::optional<std::string> attestation;
  CellMap cells;

  bool operator==(const Snapshot&) const = default;
};

struct SnapshotDigest {
  std::string hex;
  bool operator==(const SnapshotDigest&) const = default;
  auto operator<=>(const SnapshotDigest&) const = default;
};

// Reads the tab-separated `.snap` format. Throws Error with MalformedHeader,
// DuplicateCell, BadAddress, BadTimestamp or BadValue.
Snapshot parse_snapshot_file(std::string_view content);

// Byte-deterministic: cell lines sorted by (sheet folded, row, col).
std::string write_snapshot_file(const Snapshot& s);

// SHA-256 over the cell content only: timestamp, actor and attestation are
// not part of the preimage.
SnapshotDigest snapshot_digest(const Snapshot& s);

// The exact bytes snapshot_digest hashes.
std::string digest_preimage(const Snapshot& s);

// Cell payload fields as they appear after the address in a `.snap` line,
// e.g. "V\tN\t5" or "F\t=A1+1\tN\t6". Shared with the ledger encoding.
std::string encode_content(const CellContent& c);
std::optional<CellContent> decode_content(std::string_view fields);

}  // namespace sheetguard
