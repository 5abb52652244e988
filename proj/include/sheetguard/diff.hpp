#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sheetguard/grid.hpp"

namespace sheetguard {

enum class ChangeKind { Added, Removed, DataChanged, LogicChanged, KindChanged };

std::string_view change_kind_name(ChangeKind k);
std::optional<ChangeKind> parse_change_kind(std::string_view text);

struct ChangeEvent {
  CellAddress address;
  ChangeKind kind = ChangeKind::DataChanged;
  std::optional<CellContent> before;
  std::optional<CellContent> after;

  bool operator==(const ChangeEvent&) const = default;
};

// True for events that alter formula logic: LogicChanged, KindChanged, or a
// formula cell appearing or disappearing.
bool is_logic_change(const ChangeEvent& e);

struct ChangeSet {
  std::string workbook_id;
  SnapshotDigest from_digest;
  SnapshotDigest to_digest;
  Instant from_time{};
  Instant to_time{};
  std::string actor;
  std::vector<ChangeEvent> events;  // sorted by address, one per address

  bool operator==(const ChangeSet&) const = default;
};

// Throws Error(NoChange) when both sides are equal (including both absent).
ChangeKind classify_change(const std::optional<CellContent>& before,
                           const std::optional<CellContent>& after);

// Throws Error(WorkbookMismatch).
ChangeSet diff_snapshots(const Snapshot& before, const Snapshot& after);

// Replays `cs` onto `before`. Throws Error(DigestMismatch) when `before` is
// not the change set's origin or the result does not hash to to_digest,
// Error(ConflictingEvent) when an event's before side disagrees with the cell.
Snapshot apply_changes(const Snapshot& before, const ChangeSet& cs);

struct VolatilityMetrics {
  double structural_volatility = 0.0;
  double data_volatility = 0.0;
  double added_fraction = 0.0;
};

VolatilityMetrics volatility_metrics(const ChangeSet& cs, const Snapshot& before);

// Canonical payload bytes used inside CHANGESET ledger records.
std::string serialize_changeset(const ChangeSet& cs);
ChangeSet parse_changeset(std::string_view payload);

}  // namespace sheetguard
