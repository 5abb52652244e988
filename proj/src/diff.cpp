#include "sheetguard/diff.hpp"

#include "sheetguard/error.hpp"
#include "sheetguard/hash.hpp"
#include "sheetguard/textio.hpp"

namespace sheetguard {

std::string_view change_kind_name(ChangeKind k) {
  switch (k) {
    case ChangeKind::Added: return "Added";
    case ChangeKind::Removed: return "Removed";
    case ChangeKind::DataChanged: return "DataChanged";
    case ChangeKind::LogicChanged: return "LogicChanged";
    case ChangeKind::KindChanged: return "KindChanged";
  }
  return "DataChanged";
}

std::optional<ChangeKind> parse_change_kind(std::string_view text) {
  for (auto k : {ChangeKind::Added, ChangeKind::Removed, ChangeKind::DataChanged,
                 ChangeKind::LogicChanged, ChangeKind::KindChanged})
    if (change_kind_name(k) == text) return k;
  return std::nullopt;
}

bool is_logic_change(const ChangeEvent& e) {
  switch (e.kind) {
    case ChangeKind::LogicChanged:
    case ChangeKind::KindChanged:
      return true;
    case ChangeKind::Added:
      return e.after && is_formula(*e.after);
    case ChangeKind::Removed:
      return e.before && is_formula(*e.before);
    case ChangeKind::DataChanged:
      return false;
  }
  return false;
}

ChangeKind classify_change(const std::optional<CellContent>& before,
                           const std::optional<CellContent>& after) {
  if (before == after) throw Error(Errc::NoChange, "cell contents are equal");
  if (!before) return ChangeKind::Added;
  if (!after) return ChangeKind::Removed;
  if (is_formula(*before) != is_formula(*after)) return ChangeKind::KindChanged;
  if (!is_formula(*before)) return ChangeKind::DataChanged;
  // Same source with a new cached value: the logic is intact, the data moved.
  if (std::get<Formula>(*before).source == std::get<Formula>(*after).source)
    return ChangeKind::DataChanged;
  return ChangeKind::LogicChanged;
}

ChangeSet diff_snapshots(const Snapshot& before, const Snapshot& after) {
  if (before.workbook_id != after.workbook_id)
    throw Error(Errc::WorkbookMismatch,
                "cannot diff workbook '" + before.workbook_id + "' against '" + after.workbook_id + "'");
  ChangeSet cs;
  cs.workbook_id = after.workbook_id;
  cs.from_digest = snapshot_digest(before);
  cs.to_digest = snapshot_digest(after);
  cs.from_time = before.timestamp;
  cs.to_time = after.timestamp;
  cs.actor = after.actor;

  // Merge walk over the two ordered maps.
  auto b = before.cells.begin(), a = after.cells.begin();
  while (b != before.cells.end() || a != after.cells.end()) {
    ChangeEvent e;
    if (a == after.cells.end() || (b != before.cells.end() && b->first < a->first)) {
      e = {b->first, ChangeKind::Removed, b->second, std::nullopt};
      ++b;
    } else if (b == before.cells.end() || a->first < b->first) {
      e = {a->first, ChangeKind::Added, std::nullopt, a->second};
      ++a;
    } else {
      if (b->second == a->second) {
        ++a, ++b;
        continue;
      }
      e = {a->first, classify_change(b->second, a->second), b->second, a->second};
      ++a, ++b;
    }
    cs.events.push_back(std::move(e));
  }
  return cs;
}

Snapshot apply_changes(const Snapshot& before, const ChangeSet& cs) {
  if (snapshot_digest(before) != cs.from_digest)
    throw Error(Errc::DigestMismatch, "snapshot digest does not match change set origin");
  Snapshot out = before;
  out.timestamp = cs.to_time;
  out.actor = cs.actor;
  out.attestation.reset();
  for (const auto& e : cs.events) {
    auto it = out.cells.find(e.address);
    std::optional<CellContent> current;
    if (it != out.cells.end()) current = it->second;
    if (current != e.before)
      throw Error(Errc::ConflictingEvent, "cell " + e.address.qualified() + " does not match event");
    if (e.after) {
      if (it != out.cells.end())
        it->second = *e.after;
      else
        out.cells.emplace(e.address, *e.after);
    } else if (it != out.cells.end()) {
      out.cells.erase(it);
    }
  }
  if (snapshot_digest(out) != cs.to_digest)
    throw Error(Errc::DigestMismatch, "replayed snapshot does not hash to change set target");
  return out;
}

VolatilityMetrics volatility_metrics(const ChangeSet& cs, const Snapshot& before) {
  std::size_t formulas = 0, literals = 0;
  for (const auto& [addr, c] : before.cells) (is_formula(c) ? formulas : literals)++;

  std::size_t logic_touched = 0, data_touched = 0, added = 0;
  for (const auto& e : cs.events) {
    if (e.kind == ChangeKind::Added) {
      ++added;
      continue;
    }
    if (!e.before) continue;
    if (is_formula(*e.before)) {
      if (e.kind != ChangeKind::DataChanged) ++logic_touched;
    } else {
      ++data_touched;
    }
  }
  VolatilityMetrics m;
  m.structural_volatility = formulas ? static_cast<double>(logic_touched) / formulas : 0.0;
  m.data_volatility = literals ? static_cast<double>(data_touched) / literals : 0.0;
  std::size_t base = before.cells.empty() ? 1 : before.cells.size();
  m.added_fraction = static_cast<double>(added) / base;
  return m;
}

// CHANGESET1<TAB>workbook<TAB>from<TAB>to<TAB>from_time<TAB>to_time<TAB>actor
// then per event: "EV<TAB>sheet<TAB>A1<TAB>kind", optionally followed by
// "B<TAB>payload" and "A<TAB>payload" lines.
std::string serialize_changeset(const ChangeSet& cs) {
  std::string out = "CHANGESET1\t" + escape_field(cs.workbook_id) + '\t' + cs.from_digest.hex + '\t' +
                    cs.to_digest.hex + '\t' + format_instant(cs.from_time) + '\t' +
                    format_instant(cs.to_time) + '\t' + escape_field(cs.actor) + '\n';
  for (const auto& e : cs.events) {
    out += "EV\t" + escape_field(e.address.sheet) + '\t' + e.address.a1() + '\t' +
           std::string(change_kind_name(e.kind)) + '\n';
    if (e.before) out += "B\t" + encode_content(*e.before) + '\n';
    if (e.after) out += "A\t" + encode_content(*e.after) + '\n';
  }
  return out;
}

ChangeSet parse_changeset(std::string_view payload) {
  auto bad = [](const std::string& what) { return Error(Errc::StorageFailure, "bad change set: " + what); };
  auto lines = split_lines(payload);
  if (lines.empty()) throw bad("empty");
  auto h = split(lines[0], '\t');
  if (h.size() != 7 || h[0] != "CHANGESET1") throw bad("header");
  ChangeSet cs;
  auto wb = unescape_field(h[1]);
  auto actor = unescape_field(h[6]);
  auto from = parse_instant(h[4]), to = parse_instant(h[5]);
  if (!wb || !actor || !from || !to || !is_hex_digest(h[2]) || !is_hex_digest(h[3])) throw bad("header fields");
  cs.workbook_id = *wb;
  cs.actor = *actor;
  cs.from_digest = {std::string(h[2])};
  cs.to_digest = {std::string(h[3])};
  cs.from_time = *from;
  cs.to_time = *to;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto line = lines[i];
    if (line.starts_with("EV\t")) {
      auto f = split(line, '\t');
      if (f.size() != 4) throw bad("event line");
      auto sheet = unescape_field(f[1]);
      auto rc = parse_a1(f[2]);
      auto kind = parse_change_kind(f[3]);
      if (!sheet || !rc || !kind) throw bad("event fields");
      cs.events.push_back({{*sheet, rc->first, rc->second}, *kind, std::nullopt, std::nullopt});
    } else if ((line.starts_with("B\t") || line.starts_with("A\t")) && !cs.events.empty()) {
      auto content = decode_content(line.substr(2));
      if (!content) throw bad("cell payload");
      (line[0] == 'B' ? cs.events.back().before : cs.events.back().after) = std::move(content);
    } else {
      throw bad("unexpected line");
    }
  }
  return cs;
}

}  // namespace sheetguard
