#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sheetguard/address.hpp"
#include "sheetguard/audit.hpp"
#include "sheetguard/diff.hpp"
#include "sheetguard/ledger.hpp"

namespace sheetguard {

// Declared in increasing strictness.
enum class RegionMode { Free, FormulaMaintained, DataOnly, Locked };

std::string_view region_mode_name(RegionMode m);
std::optional<RegionMode> parse_region_mode(std::string_view text);

struct RegionRule {
  Region region;
  RegionMode mode = RegionMode::Free;
  bool ticket_required = false;
};

// Weekdays use 0 = Sunday .. 6 = Saturday. Hours are UTC, start inclusive,
// end exclusive, 0 <= start < end <= 24.
struct CadenceWindow {
  std::set<int> weekdays;
  int start_hour = 0;
  int end_hour = 24;

  bool admits(Instant t) const;
};

struct CadenceRule {
  Region region;
  std::vector<CadenceWindow> windows;
};

struct BoundRule {
  Region region;
  std::optional<double> min;
  std::optional<double> max;
};

struct TrendRule {
  CellAddress address;
  int window = 20;
  double z_threshold = 3.0;
  int min_points = 5;
  Severity severity = Severity::Warning;
};

enum class PeriodBoundary { Attest, Daily, Weekly, Monthly };

std::string_view period_boundary_name(PeriodBoundary p);
std::optional<PeriodBoundary> parse_period_boundary(std::string_view text);

struct WorkflowStep {
  std::string step_id;
  Region region;
};

struct Workflow {
  std::vector<WorkflowStep> steps;
  PeriodBoundary period = PeriodBoundary::Attest;
};

struct ControlPolicy {
  std::string workbook_id;  // empty: applies to any workbook
  std::vector<RegionRule> region_rules;
  std::vector<CadenceRule> cadence_rules;
  std::vector<BoundRule> bound_rules;
  std::vector<TrendRule> trend_rules;
  std::optional<Workflow> workflow;
};

// Throws Error(BadConfig) on out-of-range fields, duplicate step ids or
// overlapping step regions.
void validate(const ControlPolicy& policy);

// Strictest mode among covering region rules; Free when none cover.
RegionMode effective_mode(const ControlPolicy& policy, const CellAddress& address);

// True when the attestation names a change ticket such as "CHG-1042".
bool has_ticket_reference(std::string_view attestation);

std::vector<Finding> check_regions(const ChangeSet& cs, const ControlPolicy& policy,
                                   const std::optional<std::string>& attestation);
std::vector<Finding> check_cadence(const ChangeSet& cs, const ControlPolicy& policy);
std::vector<Finding> check_bounds(const ChangeSet& cs, const ControlPolicy& policy);

struct TrendVerdict {
  CellAddress address;
  double new_value = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  double z = 0.0;
  bool violated = false;
  std::size_t points_used = 0;
};

// Compares `new_value` with the most recent `rule.window` numeric points of
// `history` (sample standard deviation). A constant history flags any
// departure from the constant.
TrendVerdict trend_deviation(const CellSeries& history, double new_value, const TrendRule& rule);

std::vector<Finding> check_trends(const ChangeSet& cs, const ControlPolicy& policy, const Ledger& ledger);

// Steps touched in the ledger's current period before `cs` count as done.
std::vector<Finding> check_task_order(const Ledger& ledger, const Workflow& workflow, const ChangeSet& cs);

std::vector<Finding> evaluate_policies(const ChangeSet& cs, const ControlPolicy& policy, const Ledger& ledger);

}  // namespace sheetguard
