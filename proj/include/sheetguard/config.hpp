#pragma once

#include <string_view>

#include "sheetguard/assessor.hpp"
#include "sheetguard/audit.hpp"
#include "sheetguard/control.hpp"

namespace sheetguard {

// Audit/classification config: `key = value` lines, `#` comments.
//
//   if_depth_threshold = 3
//   min_run_length = 3
//   majority_fraction = 2/3
//   constant_whitelist = 0, 1, -1, 100
//   operational_min_actors = 2
//   operational_min_persistence_days = 30
//   operational_max_structural_volatility = 0.10
//   modeling_min_structural_volatility = 0.25
struct ToolConfig {
  AuditConfig audit;
  ClassificationThresholds classification;
};

ToolConfig parse_config(std::string_view text);

// Policy file: optional top-level `workbook = id`, then one `[kind]` stanza
// per rule with `key = value` lines.
//
//   [region]    range, mode (LOCKED|DATA_ONLY|FORMULA_MAINTAINED|FREE),
//               ticket_required (true|false)
//   [cadence]   range, window = Mon-Fri 09-17 (repeatable)
//   [bounds]    range, min, max
//   [trend]     cell, window, z_threshold, min_points, severity
//   [workflow]  period (attest|daily|weekly|monthly),
//               step = <id> <range> (repeatable, in order)
//
// Throws Error(BadConfig) with the offending line number.
ControlPolicy parse_policy(std::string_view text);

}  // namespace sheetguard
