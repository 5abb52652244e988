#include "sheetguard/grid.hpp"

#include <vector>

#include "sheetguard/error.hpp"
#include "sheetguard/hash.hpp"
#include "sheetguard/textio.hpp"

namespace sheetguard {

namespace {

constexpr std::string_view kMagic = "SNAP1";

std::string encode_value(const CellValue& v) {
  struct Visitor {
    std::string operator()(const Number& n) const { return "N\t" + format_decimal(n.value); }
    std::string operator()(const Text& t) const { return "T\t" + escape_field(t.value); }
    std::string operator()(const Boolean& b) const { return b.value ? "B\tTRUE" : "B\tFALSE"; }
    std::string operator()(const ErrorValue& e) const {
      return "E\t" + std::string(error_code_text(e.code));
    }
  };
  return std::visit(Visitor{}, v);
}

std::optional<CellValue> decode_value(std::string_view tag, std::string_view payload) {
  if (tag == "N") {
    if (auto d = parse_decimal(payload)) return Number{*d};
  } else if (tag == "T") {
    if (auto t = unescape_field(payload)) return Text{*t};
  } else if (tag == "B") {
    if (payload == "TRUE") return Boolean{true};
    if (payload == "FALSE") return Boolean{false};
  } else if (tag == "E") {
    if (auto code = parse_error_code(payload)) return ErrorValue{*code};
  }
  return std::nullopt;
}

std::string cell_lines(const CellMap& cells) {
  std::string out;
  for (const auto& [addr, content] : cells) {
    out += escape_field(addr.sheet);
    out += '\t';
    out += addr.a1();
    out += '\t';
    out += encode_content(content);
    out += '\n';
  }
  return out;
}

[[noreturn]] void fail(Errc code, std::size_t line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

Formula Formula::from_source(std::string source, std::optional<CellValue> cached) {
  Formula f;
  f.source = std::move(source);
  f.cached = std::move(cached);
  try {
    f.ast = formula::parse_formula(f.source);
  } catch (const FormulaError& e) {
    f.parse_error = e.what();
  }
  return f;
}

std::optional<CellValue> value_of(const CellContent& c) {
  if (auto* lit = std::get_if<Literal>(&c)) return lit->value;
  return std::get<Formula>(c).cached;
}

std::string describe(const CellContent& c) {
  if (auto* lit = std::get_if<Literal>(&c)) return display(lit->value);
  const auto& f = std::get<Formula>(c);
  std::string out = f.source;
  if (f.cached) out += " [" + display(*f.cached) + "]";
  return out;
}

std::string encode_content(const CellContent& c) {
  if (auto* lit = std::get_if<Literal>(&c)) return "V\t" + encode_value(lit->value);
  const auto& f = std::get<Formula>(c);
  std::string out = "F\t" + escape_field(f.source);
  if (f.cached) out += "\t" + encode_value(*f.cached);
  return out;
}

std::optional<CellContent> decode_content(std::string_view fields) {
  auto parts = split(fields, '\t');
  if (parts[0] == "V" && parts.size() == 3) {
    auto v = decode_value(parts[1], parts[2]);
    if (!v) return std::nullopt;
    return Literal{*v};
  }
  if (parts[0] == "F" && (parts.size() == 2 || parts.size() == 4)) {
    auto source = unescape_field(parts[1]);
    if (!source || source->empty() || source->front() != '=') return std::nullopt;
    std::optional<CellValue> cached;
    if (parts.size() == 4) {
      cached = decode_value(parts[2], parts[3]);
      if (!cached) return std::nullopt;
    }
    return Formula::from_source(std::move(*source), std::move(cached));
  }
  return std::nullopt;
}

Snapshot parse_snapshot_file(std::string_view content) {
  auto lines = split_lines(content);
  if (lines.empty()) throw Error(Errc::MalformedHeader, "empty snapshot file");

  auto header = split(lines[0], '\t');
  if (header.size() != 4 || header[0] != kMagic)
    throw Error(Errc::MalformedHeader, "header must be SNAP1<TAB>workbook_id<TAB>timestamp<TAB>actor");
  Snapshot s;
  auto wb = unescape_field(header[1]);
  auto actor = unescape_field(header[3]);
  if (!wb || wb->empty() || !actor) throw Error(Errc::MalformedHeader, "bad workbook id or actor field");
  s.workbook_id = std::move(*wb);
  s.actor = std::move(*actor);
  auto ts = parse_instant(header[2]);
  if (!ts) throw Error(Errc::BadTimestamp, "unparseable timestamp '" + std::string(header[2]) + "'");
  s.timestamp = *ts;

  std::size_t i = 1;
  if (i < lines.size() && lines[i].starts_with("ATTEST\t")) {
    auto text = unescape_field(lines[i].substr(7));
    if (!text) throw Error(Errc::MalformedHeader, "bad ATTEST line");
    s.attestation = std::move(*text);
    ++i;
  }

  for (; i < lines.size(); ++i) {
    std::size_t lineno = i + 1;
    std::string_view line = lines[i];
    auto first = line.find('\t');
    auto second = first == std::string_view::npos ? first : line.find('\t', first + 1);
    if (second == std::string_view::npos) fail(Errc::BadAddress, lineno, "expected sheet, address, kind");
    auto sheet = unescape_field(line.substr(0, first));
    auto rc = parse_a1(line.substr(first + 1, second - first - 1));
    if (!sheet || sheet->empty() || !rc) fail(Errc::BadAddress, lineno, "bad cell address");
    CellAddress addr{std::move(*sheet), rc->first, rc->second};

    auto content = decode_content(line.substr(second + 1));
    if (!content) fail(Errc::BadValue, lineno, "bad cell payload for " + addr.qualified());
    if (!s.cells.emplace(addr, std::move(*content)).second)
      throw Error(Errc::DuplicateCell, "duplicate cell " + addr.qualified());
  }
  return s;
}

std::string write_snapshot_file(const Snapshot& s) {
  std::string out;
  out += kMagic;
  out += '\t' + escape_field(s.workbook_id) + '\t' + format_instant(s.timestamp) + '\t' +
         escape_field(s.actor) + '\n';
  if (s.attestation) out += "ATTEST\t" + escape_field(*s.attestation) + '\n';
  out += cell_lines(s.cells);
  return out;
}

std::string digest_preimage(const Snapshot& s) {
  std::string out;
  out += kMagic;
  out += '\t' + escape_field(s.workbook_id) + '\n';
  out += cell_lines(s.cells);
  return out;
}

SnapshotDigest snapshot_digest(const Snapshot& s) { return {sha256_hex(digest_preimage(s))}; }

}  // namespace sheetguard
