#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sheetguard/audit.hpp"
#include "sheetguard/control.hpp"
#include "sheetguard/ledger.hpp"

namespace sheetguard {

struct UsageMetrics {
  std::size_t distinct_actors = 0;
  double persistence_days = 0.0;
  double mean_structural_volatility = 0.0;
  double mean_data_volatility = 0.0;
  std::size_t ingest_count = 0;
};

enum class Classification { Modeling, Operational, Indeterminate };

std::string_view classification_name(Classification c);

// Cut-offs for classify_usage. The defaults are a convention of this tool,
// not a standard; reports print them.
struct ClassificationThresholds {
  std::size_t operational_min_actors = 2;
  double operational_min_persistence_days = 30.0;
  double operational_max_structural_volatility = 0.10;
  double modeling_min_structural_volatility = 0.25;
};

struct RiskProfile {
  UsageMetrics metrics;
  Classification classification = Classification::Indeterminate;
  double risk_score = 0.0;
  std::vector<std::string> rationale;
};

UsageMetrics usage_metrics(const Ledger& ledger);

// Operational when several actors share the workbook, or it is long-lived
// and structurally stable; Modeling when one actor keeps restructuring it.
Classification classify_usage(const UsageMetrics& m, const ClassificationThresholds& t = {});

// clamp(0, 100, 15*min(actors, 4) + 25*data_volatility
//               + 10*[persistence >= 30 days] + 5*critical_findings)
double risk_score(const UsageMetrics& m, const std::vector<Finding>& findings);

RiskProfile risk_profile(const Ledger& ledger, const std::vector<Finding>& findings,
                         const ClassificationThresholds& t = {});

inline constexpr int kSoxSections[] = {103, 302, 304, 404};

// Every finding maps to 103 and 404; logic-change findings add 302;
// critical value findings (bounds, types, trends, error values) add 304.
// Throws Error(UnknownRule).
std::set<int> map_finding_to_sox(const Finding& f);

struct ReportPeriod {
  Instant start{};
  Instant end{};  // exclusive
};

struct ComplianceReport {
  std::string workbook_id;
  ReportPeriod period;
  bool chain_verified = true;
  std::optional<std::uint64_t> first_bad_seq;
  std::vector<Finding> findings;  // everything in the period, sorted
  std::map<int, std::vector<Finding>> findings_by_sox;
  std::vector<Finding> material_weaknesses;
  RiskProfile profile;
  ClassificationThresholds thresholds;
  std::size_t region_rules = 0;
  std::size_t cadence_rules = 0;
  std::size_t bound_rules = 0;
  std::size_t trend_rules = 0;
  std::size_t workflow_steps = 0;
  Instant generated_at{};
};

// Throws Error(EmptyLedger) for a ledger without records and
// Error(BadConfig) when the period is empty.
ComplianceReport build_report(const Ledger& ledger, const ControlPolicy& policy, ReportPeriod period,
                              Instant generated_at, const ClassificationThresholds& t = {});

std::string render_report_text(const ComplianceReport& r);
std::string render_report_json(const ComplianceReport& r);

}  // namespace sheetguard
