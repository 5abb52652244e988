#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sheetguard/audit.hpp"
#include "sheetguard/diff.hpp"
#include "sheetguard/grid.hpp"

namespace sheetguard {

struct ControlPolicy;

enum class PayloadKind { Ingest, ChangeSet, Findings, Attest };

std::string_view payload_kind_name(PayloadKind k);
std::optional<PayloadKind> parse_payload_kind(std::string_view text);

inline const std::string kGenesisHash(64, '0');

// One line of ledger.log:
//   seq<TAB>prev_hash<TAB>kind<TAB>recorded_at<TAB>base64(payload)<TAB>hash
struct LedgerRecord {
  std::uint64_t seq = 0;
  std::string prev_hash;
  PayloadKind kind = PayloadKind::Ingest;
  std::string payload;
  std::string recorded_at;  // canonical RFC 3339 text
  std::string hash;
  // Set when the stored line could not be read canonically; such a record
  // never verifies.
  bool malformed = false;
};

// SHA-256 over seq, prev_hash, kind, payload (length-prefixed) and
// recorded_at, tab-joined.
std::string compute_record_hash(const LedgerRecord& r);
std::string format_record_line(const LedgerRecord& r);
// Never throws: unreadable lines come back with `malformed` set.
LedgerRecord parse_record_line(std::string_view line);

// Append-only, hash-chained audit trail for one workbook. Optionally backed
// by a directory holding ledger.log and objects/<digest>.snap.
class Ledger {
 public:
  static Ledger in_memory(std::string workbook_id = {});
  // Opens (creating when absent) a ledger directory.
  static Ledger open(const std::filesystem::path& dir);

  const std::string& workbook_id() const { return workbook_id_; }
  const std::vector<LedgerRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const std::map<SnapshotDigest, std::string>& snapshot_store() const { return objects_; }
  const std::optional<std::filesystem::path>& directory() const { return dir_; }

  // Defaults to the system clock.
  void set_clock(std::function<Instant()> clock) { clock_ = std::move(clock); }

  const LedgerRecord& append(PayloadKind kind, std::string payload);
  SnapshotDigest store_snapshot(const Snapshot& s);
  std::optional<Snapshot> load_object(const SnapshotDigest& digest) const;

 private:
  std::string workbook_id_;
  std::vector<LedgerRecord> records_;
  std::map<SnapshotDigest, std::string> objects_;
  std::optional<std::filesystem::path> dir_;
  std::function<Instant()> clock_ = now_utc;
};

// Throws Error(StorageFailure) when the backing directory cannot be written.
const LedgerRecord& append_record(Ledger& ledger, PayloadKind kind, std::string payload);

struct IngestEntry {
  std::uint64_t seq = 0;
  SnapshotDigest digest;
  std::string workbook_id;
  Instant timestamp{};
  std::string actor;
  std::optional<std::string> attestation;
};

struct AttestEntry {
  std::uint64_t seq = 0;
  Instant timestamp{};
  std::string actor;
  std::string text;
};

struct FindingsBatch {
  std::uint64_t seq = 0;
  Instant at{};  // to_time of the change set the findings belong to
  std::vector<Finding> findings;
};

std::string serialize_ingest(const IngestEntry& e);
std::optional<IngestEntry> parse_ingest(std::string_view payload);
std::string serialize_findings(Instant at, const std::vector<Finding>& findings);
std::optional<FindingsBatch> parse_findings(std::string_view payload);
std::string serialize_attest(const AttestEntry& e);
std::optional<AttestEntry> parse_attest(std::string_view payload);

// Typed views over well-formed records, in ledger order.
std::vector<IngestEntry> ingest_entries(const Ledger& ledger);
std::vector<ChangeSet> changesets(const Ledger& ledger);
std::vector<FindingsBatch> findings_batches(const Ledger& ledger);
std::vector<AttestEntry> attest_entries(const Ledger& ledger);

// The stored cells of an ingest with that ingest's metadata.
Snapshot snapshot_for(const Ledger& ledger, const IngestEntry& entry);
std::optional<Snapshot> latest_snapshot(const Ledger& ledger);

// Records the snapshot and, when a previous snapshot exists, the change set
// and every finding it raises. Re-ingesting the latest content is a no-op.
// Throws Error(WorkbookMismatch) or Error(NonMonotonicTimestamp).
std::vector<Finding> ingest_snapshot(Ledger& ledger, const Snapshot& s, const AuditConfig& cfg,
                                     const ControlPolicy& policy);

struct VerifyResult {
  bool ok = true;
  std::optional<std::uint64_t> first_bad_seq;
  std::string reason;
};

VerifyResult verify_chain(const Ledger& ledger);

struct CellSeries {
  CellAddress address;
  std::vector<std::pair<Instant, CellValue>> points;
};

// Error values are skipped; so are snapshots where the cell is empty or a
// formula without a cached value.
CellSeries series_for_cell(const Ledger& ledger, const CellAddress& address);

struct HistoryEntry {
  ChangeEvent event;
  std::string actor;
  Instant at{};
};

std::vector<HistoryEntry> change_history(const Ledger& ledger, const CellAddress& address);

}  // namespace sheetguard
