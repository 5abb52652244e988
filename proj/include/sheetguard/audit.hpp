#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sheetguard/address.hpp"
#include "sheetguard/grid.hpp"

namespace sheetguard {

enum class Severity { Info, Warning, Critical };

std::string_view severity_name(Severity s);
std::optional<Severity> parse_severity(std::string_view text);

// Closed registry of rule ids, shared by the auditor, the control engine
// and the assessor.
namespace rules {
inline constexpr std::string_view kCopyInconsistent = "COPY_INCONSISTENT";
inline constexpr std::string_view kDeepNesting = "DEEP_NESTING";
inline constexpr std::string_view kEmbeddedConstant = "EMBEDDED_CONSTANT";
inline constexpr std::string_view kErrorValue = "ERROR_VALUE";
inline constexpr std::string_view kParseFailure = "PARSE_FAILURE";
inline constexpr std::string_view kLockedRegionChange = "LOCKED_REGION_CHANGE";
inline constexpr std::string_view kDataOnlyLogicChange = "DATA_ONLY_LOGIC_CHANGE";
inline constexpr std::string_view kUnattestedLogicChange = "UNATTESTED_LOGIC_CHANGE";
inline constexpr std::string_view kCadenceViolation = "CADENCE_VIOLATION";
inline constexpr std::string_view kBoundViolation = "BOUND_VIOLATION";
inline constexpr std::string_view kTypeViolation = "TYPE_VIOLATION";
inline constexpr std::string_view kTrendDeviation = "TREND_DEVIATION";
inline constexpr std::string_view kTaskOrderViolation = "TASK_ORDER_VIOLATION";
inline constexpr std::string_view kLedgerTamper = "LEDGER_TAMPER";

bool is_registered(std::string_view rule_id);
const std::vector<std::string_view>& all();
}  // namespace rules

// Where a finding points: the whole workbook, one cell, or a region.
struct WorkbookScope {
  bool operator==(const WorkbookScope&) const = default;
};
using Location = std::variant<WorkbookScope, CellAddress, Region>;

// "-", "Sheet1!B3", "Sheet1!A1:D4"
std::string render_location(const Location& loc);
std::optional<Location> parse_location(std::string_view text);
// Single-cell regions collapse to the cell so locations round-trip.
Location region_location(const Region& r);

struct Finding {
  std::string rule_id;
  Severity severity = Severity::Warning;
  Location location;
  std::string message;
  std::string observed;
  std::optional<std::string> expected;

  bool operator==(const Finding&) const = default;
};

// Deterministic order: (sheet folded, row, col, rule_id); workbook-level
// findings sort first.
bool finding_less(const Finding& a, const Finding& b);
void sort_findings(std::vector<Finding>& findings);

// Exact rational for the copy-majority threshold.
struct Fraction {
  std::int64_t num = 2;
  std::int64_t den = 3;
};

struct AuditConfig {
  int if_depth_threshold = 3;
  int min_run_length = 3;
  Fraction majority_fraction{2, 3};
  std::vector<double> constant_whitelist{0, 1, -1, 100};
};

// Validates ranges (depth >= 1, run >= 3, fraction in (1/2, 1]); throws
// Error(BadConfig).
void validate(const AuditConfig& cfg);

std::vector<Finding> audit_workbook(const Snapshot& s, const AuditConfig& cfg);

std::vector<Finding> detect_copy_inconsistencies(const Snapshot& s, std::string_view sheet,
                                                 const AuditConfig& cfg);
std::vector<Finding> detect_deep_nesting(const Snapshot& s, const AuditConfig& cfg);
std::vector<Finding> detect_embedded_constants(const Snapshot& s, const AuditConfig& cfg);
std::vector<Finding> detect_error_values(const Snapshot& s);
std::vector<Finding> detect_parse_failures(const Snapshot& s);

}  // namespace sheetguard
