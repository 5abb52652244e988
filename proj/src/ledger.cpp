#include "sheetguard/ledger.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "sheetguard/control.hpp"
#include "sheetguard/error.hpp"
#include "sheetguard/hash.hpp"
#include "sheetguard/textio.hpp"

namespace fs = std::filesystem;

namespace sheetguard {

std::string_view payload_kind_name(PayloadKind k) {
  switch (k) {
    case PayloadKind::Ingest: return "INGEST";
    case PayloadKind::ChangeSet: return "CHANGESET";
    case PayloadKind::Findings: return "FINDINGS";
    case PayloadKind::Attest: return "ATTEST";
  }
  return "INGEST";
}

std::optional<PayloadKind> parse_payload_kind(std::string_view text) {
  for (auto k : {PayloadKind::Ingest, PayloadKind::ChangeSet, PayloadKind::Findings, PayloadKind::Attest})
    if (payload_kind_name(k) == text) return k;
  return std::nullopt;
}

std::string compute_record_hash(const LedgerRecord& r) {
  std::string pre = std::to_string(r.seq);
  pre += '\t';
  pre += r.prev_hash;
  pre += '\t';
  pre += payload_kind_name(r.kind);
  pre += '\t';
  pre += std::to_string(r.payload.size());
  pre += '\t';
  pre += r.payload;
  pre += '\t';
  pre += r.recorded_at;
  return sha256_hex(pre);
}

std::string format_record_line(const LedgerRecord& r) {
  return std::to_string(r.seq) + '\t' + r.prev_hash + '\t' + std::string(payload_kind_name(r.kind)) +
         '\t' + r.recorded_at + '\t' + base64_encode(r.payload) + '\t' + r.hash;
}

LedgerRecord parse_record_line(std::string_view line) {
  LedgerRecord r;
  r.malformed = true;
  auto f = split(line, '\t');
  if (f.size() != 6) return r;

  std::uint64_t seq = 0;
  auto [ptr, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), seq);
  if (ec != std::errc{} || ptr != f[0].data() + f[0].size() || std::to_string(seq) != f[0]) return r;
  auto kind = parse_payload_kind(f[2]);
  auto at = parse_instant(f[3]);
  auto payload = base64_decode(f[4]);
  if (!is_hex_digest(f[1]) || !kind || !at || format_instant(*at) != f[3] || !payload ||
      !is_hex_digest(f[5]))
    return r;

  r.seq = seq;
  r.prev_hash = std::string(f[1]);
  r.kind = *kind;
  r.recorded_at = std::string(f[3]);
  r.payload = std::move(*payload);
  r.hash = std::string(f[5]);
  r.malformed = false;
  return r;
}

// ---------------------------------------------------------------------------
// Ledger storage

Ledger Ledger::in_memory(std::string workbook_id) {
  Ledger l;
  l.workbook_id_ = std::move(workbook_id);
  return l;
}

Ledger Ledger::open(const fs::path& dir) {
  Ledger l;
  l.dir_ = dir;
  std::error_code ec;
  fs::create_directories(dir / "objects", ec);
  if (ec) throw Error(Errc::StorageFailure, "cannot create ledger directory " + dir.string());

  std::ifstream log(dir / "ledger.log", std::ios::binary);
  if (log) {
    std::stringstream buf;
    buf << log.rdbuf();
    const std::string text = buf.str();
    for (auto line : split_lines(text)) l.records_.push_back(parse_record_line(line));
  }
  for (const auto& entry : fs::directory_iterator(dir / "objects")) {
    if (!entry.is_regular_file() || entry.path().extension() != ".snap") continue;
    std::string name = entry.path().stem().string();
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    l.objects_[SnapshotDigest{name}] = buf.str();
  }
  for (const auto& r : l.records_) {
    if (r.malformed || r.kind != PayloadKind::Ingest) continue;
    if (auto e = parse_ingest(r.payload)) {
      l.workbook_id_ = e->workbook_id;
      break;
    }
  }
  return l;
}

const LedgerRecord& Ledger::append(PayloadKind kind, std::string payload) {
  LedgerRecord r;
  r.seq = records_.size();
  r.prev_hash = records_.empty() ? kGenesisHash : records_.back().hash;
  r.kind = kind;
  r.payload = std::move(payload);
  r.recorded_at = format_instant(clock_());
  r.hash = compute_record_hash(r);

  if (dir_) {
    std::ofstream log(*dir_ / "ledger.log", std::ios::binary | std::ios::app);
    log << format_record_line(r) << '\n';
    log.flush();
    if (!log) throw Error(Errc::StorageFailure, "cannot append to " + (*dir_ / "ledger.log").string());
  }
  records_.push_back(std::move(r));
  return records_.back();
}

SnapshotDigest Ledger::store_snapshot(const Snapshot& s) {
  auto digest = snapshot_digest(s);
  if (objects_.contains(digest)) return digest;
  std::string bytes = write_snapshot_file(s);
  if (dir_) {
    fs::path target = *dir_ / "objects" / (digest.hex + ".snap");
    fs::path tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << bytes;
      if (!out) throw Error(Errc::StorageFailure, "cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw Error(Errc::StorageFailure, "cannot write " + target.string());
  }
  if (workbook_id_.empty()) workbook_id_ = s.workbook_id;
  objects_.emplace(digest, std::move(bytes));
  return digest;
}

std::optional<Snapshot> Ledger::load_object(const SnapshotDigest& digest) const {
  auto it = objects_.find(digest);
  if (it == objects_.end()) return std::nullopt;
  try {
    return parse_snapshot_file(it->second);
  } catch (const Error&) {
    return std::nullopt;
  }
}

const LedgerRecord& append_record(Ledger& ledger, PayloadKind kind, std::string payload) {
  return ledger.append(kind, std::move(payload));
}

// ---------------------------------------------------------------------------
// Payload encodings

std::string serialize_ingest(const IngestEntry& e) {
  std::string out = "INGEST1\t" + e.digest.hex + '\t' + escape_field(e.workbook_id) + '\t' +
                    format_instant(e.timestamp) + '\t' + escape_field(e.actor) + '\n';
  if (e.attestation) out += "ATTEST\t" + escape_field(*e.attestation) + '\n';
  return out;
}

std::optional<IngestEntry> parse_ingest(std::string_view payload) {
  auto lines = split_lines(payload);
  if (lines.empty() || lines.size() > 2) return std::nullopt;
  auto f = split(lines[0], '\t');
  if (f.size() != 5 || f[0] != "INGEST1" || !is_hex_digest(f[1])) return std::nullopt;
  auto wb = unescape_field(f[2]);
  auto at = parse_instant(f[3]);
  auto actor = unescape_field(f[4]);
  if (!wb || !at || !actor) return std::nullopt;
  IngestEntry e{0, {std::string(f[1])}, *wb, *at, *actor, std::nullopt};
  if (lines.size() == 2) {
    if (!lines[1].starts_with("ATTEST\t")) return std::nullopt;
    auto text = unescape_field(lines[1].substr(7));
    if (!text) return std::nullopt;
    e.attestation = *text;
  }
  return e;
}

// FINDINGS1<TAB>at<TAB>count, then one line per finding:
// severity, rule, location, message, observed, expected ("-" or "=" + text).
std::string serialize_findings(Instant at, const std::vector<Finding>& findings) {
  std::string out = "FINDINGS1\t" + format_instant(at) + '\t' + std::to_string(findings.size()) + '\n';
  for (const auto& f : findings) {
    out += std::string(severity_name(f.severity)) + '\t' + f.rule_id + '\t' +
           escape_field(render_location(f.location)) + '\t' + escape_field(f.message) + '\t' +
           escape_field(f.observed) + '\t' + (f.expected ? "=" + escape_field(*f.expected) : "-") + '\n';
  }
  return out;
}

std::optional<FindingsBatch> parse_findings(std::string_view payload) {
  auto lines = split_lines(payload);
  if (lines.empty()) return std::nullopt;
  auto h = split(lines[0], '\t');
  if (h.size() != 3 || h[0] != "FINDINGS1") return std::nullopt;
  auto at = parse_instant(h[1]);
  if (!at || h[2] != std::to_string(lines.size() - 1)) return std::nullopt;
  FindingsBatch batch;
  batch.at = *at;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = split(lines[i], '\t');
    if (f.size() != 6) return std::nullopt;
    auto sev = parse_severity(f[0]);
    auto loc_text = unescape_field(f[2]);
    auto msg = unescape_field(f[3]);
    auto observed = unescape_field(f[4]);
    if (!sev || !loc_text || !msg || !observed || !rules::is_registered(f[1])) return std::nullopt;
    auto loc = parse_location(*loc_text);
    if (!loc) return std::nullopt;
    Finding finding{std::string(f[1]), *sev, *loc, *msg, *observed, std::nullopt};
    if (f[5] != "-") {
      if (!f[5].starts_with("=")) return std::nullopt;
      auto expected = unescape_field(f[5].substr(1));
      if (!expected) return std::nullopt;
      finding.expected = *expected;
    }
    batch.findings.push_back(std::move(finding));
  }
  return batch;
}

std::string serialize_attest(const AttestEntry& e) {
  return "ATTEST1\t" + format_instant(e.timestamp) + '\t' + escape_field(e.actor) + '\t' +
         escape_field(e.text) + '\n';
}

std::optional<AttestEntry> parse_attest(std::string_view payload) {
  auto lines = split_lines(payload);
  if (lines.size() != 1) return std::nullopt;
  auto f = split(lines[0], '\t');
  if (f.size() != 4 || f[0] != "ATTEST1") return std::nullopt;
  auto at = parse_instant(f[1]);
  auto actor = unescape_field(f[2]);
  auto text = unescape_field(f[3]);
  if (!at || !actor || !text) return std::nullopt;
  return AttestEntry{0, *at, *actor, *text};
}

// ---------------------------------------------------------------------------
// Queries

std::vector<IngestEntry> ingest_entries(const Ledger& ledger) {
  std::vector<IngestEntry> out;
  for (const auto& r : ledger.records()) {
    if (r.malformed || r.kind != PayloadKind::Ingest) continue;
    if (auto e = parse_ingest(r.payload)) {
      e->seq = r.seq;
      out.push_back(std::move(*e));
    }
  }
  return out;
}

std::vector<ChangeSet> changesets(const Ledger& ledger) {
  std::vector<ChangeSet> out;
  for (const auto& r : ledger.records()) {
    if (r.malformed || r.kind != PayloadKind::ChangeSet) continue;
    try {
      out.push_back(parse_changeset(r.payload));
    } catch (const Error&) {
    }
  }
  return out;
}

std::vector<FindingsBatch> findings_batches(const Ledger& ledger) {
  std::vector<FindingsBatch> out;
  for (const auto& r : ledger.records()) {
    if (r.malformed || r.kind != PayloadKind::Findings) continue;
    if (auto b = parse_findings(r.payload)) {
      b->seq = r.seq;
      out.push_back(std::move(*b));
    }
  }
  return out;
}

std::vector<AttestEntry> attest_entries(const Ledger& ledger) {
  std::vector<AttestEntry> out;
  for (const auto& r : ledger.records()) {
    if (r.malformed || r.kind != PayloadKind::Attest) continue;
    if (auto a = parse_attest(r.payload)) {
      a->seq = r.seq;
      out.push_back(std::move(*a));
    }
  }
  return out;
}

Snapshot snapshot_for(const Ledger& ledger, const IngestEntry& entry) {
  auto s = ledger.load_object(entry.digest);
  if (!s) throw Error(Errc::StorageFailure, "snapshot object " + entry.digest.hex + " is missing or unreadable");
  s->workbook_id = entry.workbook_id;
  s->timestamp = entry.timestamp;
  s->actor = entry.actor;
  s->attestation = entry.attestation;
  return *s;
}

std::optional<Snapshot> latest_snapshot(const Ledger& ledger) {
  auto entries = ingest_entries(ledger);
  if (entries.empty()) return std::nullopt;
  return snapshot_for(ledger, entries.back());
}

std::vector<Finding> ingest_snapshot(Ledger& ledger, const Snapshot& s, const AuditConfig& cfg,
                                     const ControlPolicy& policy) {
  if (!ledger.workbook_id().empty() && ledger.workbook_id() != s.workbook_id)
    throw Error(Errc::WorkbookMismatch, "ledger holds workbook '" + ledger.workbook_id() +
                                            "', snapshot is '" + s.workbook_id + "'");
  if (!policy.workbook_id.empty() && policy.workbook_id != s.workbook_id)
    throw Error(Errc::WorkbookMismatch, "policy is for workbook '" + policy.workbook_id + "'");

  auto entries = ingest_entries(ledger);
  std::optional<IngestEntry> prior;
  if (!entries.empty()) prior = entries.back();
  if (prior && s.timestamp <= prior->timestamp)
    throw Error(Errc::NonMonotonicTimestamp, "snapshot time " + format_instant(s.timestamp) +
                                                 " is not after latest ingest " +
                                                 format_instant(prior->timestamp));
  auto digest = snapshot_digest(s);
  if (prior && prior->digest == digest) return {};

  ledger.store_snapshot(s);
  ledger.append(PayloadKind::Ingest,
                serialize_ingest({0, digest, s.workbook_id, s.timestamp, s.actor, s.attestation}));

  std::vector<Finding> findings;
  if (prior) {
    Snapshot before = snapshot_for(ledger, *prior);
    ChangeSet cs = diff_snapshots(before, s);
    ledger.append(PayloadKind::ChangeSet, serialize_changeset(cs));

    findings = evaluate_policies(cs, policy, ledger);
    std::set<CellAddress> touched;
    for (const auto& e : cs.events) touched.insert(e.address);
    for (auto& f : audit_workbook(s, cfg)) {
      auto* cell = std::get_if<CellAddress>(&f.location);
      if (cell && touched.contains(*cell)) findings.push_back(std::move(f));
    }
    sort_findings(findings);
    ledger.append(PayloadKind::Findings, serialize_findings(cs.to_time, findings));
  }
  if (s.attestation && !s.attestation->empty())
    ledger.append(PayloadKind::Attest, serialize_attest({0, s.timestamp, s.actor, *s.attestation}));
  return findings;
}

VerifyResult verify_chain(const Ledger& ledger) {
  const auto& recs = ledger.records();
  auto fail = [](std::uint64_t seq, std::string reason) {
    return VerifyResult{false, seq, std::move(reason)};
  };
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    if (r.malformed) return fail(i, "record is not canonically encoded");
    if (r.seq != i) return fail(i, "sequence number out of place");
    const std::string& expected_prev = i == 0 ? kGenesisHash : recs[i - 1].hash;
    if (r.prev_hash != expected_prev) return fail(i, "previous-hash link broken");
    if (compute_record_hash(r) != r.hash) return fail(i, "record hash mismatch");
    switch (r.kind) {
      case PayloadKind::Ingest: {
        auto e = parse_ingest(r.payload);
        if (!e) return fail(i, "unreadable INGEST payload");
        auto s = ledger.load_object(e->digest);
        if (!s || snapshot_digest(*s) != e->digest) return fail(i, "snapshot object missing or altered");
        break;
      }
      case PayloadKind::ChangeSet: {
        try {
          auto cs = parse_changeset(r.payload);
          if (!ledger.snapshot_store().contains(cs.from_digest) ||
              !ledger.snapshot_store().contains(cs.to_digest))
            return fail(i, "change set digests do not resolve");
        } catch (const Error&) {
          return fail(i, "unreadable CHANGESET payload");
        }
        break;
      }
      case PayloadKind::Findings:
        if (!parse_findings(r.payload)) return fail(i, "unreadable FINDINGS payload");
        break;
      case PayloadKind::Attest:
        if (!parse_attest(r.payload)) return fail(i, "unreadable ATTEST payload");
        break;
    }
  }
  return {};
}

CellSeries series_for_cell(const Ledger& ledger, const CellAddress& address) {
  CellSeries series{address, {}};
  for (const auto& entry : ingest_entries(ledger)) {
    auto s = ledger.load_object(entry.digest);
    if (!s) continue;
    auto it = s->cells.find(address);
    if (it == s->cells.end()) continue;
    auto v = value_of(it->second);
    if (!v || is_error(*v)) continue;
    series.points.emplace_back(entry.timestamp, *v);
  }
  return series;
}

std::vector<HistoryEntry> change_history(const Ledger& ledger, const CellAddress& address) {
  std::vector<HistoryEntry> out;
  for (const auto& cs : changesets(ledger))
    for (const auto& e : cs.events)
      if (e.address == address) out.push_back({e, cs.actor, cs.to_time});
  return out;
}

}  // namespace sheetguard
