#include "sheetguard/control.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>

#include "sheetguard/error.hpp"
#include "sheetguard/textio.hpp"

namespace sheetguard {

std::string_view region_mode_name(RegionMode m) {
  switch (m) {
    case RegionMode::Free: return "FREE";
    case RegionMode::FormulaMaintained: return "FORMULA_MAINTAINED";
    case RegionMode::DataOnly: return "DATA_ONLY";
    case RegionMode::Locked: return "LOCKED";
  }
  return "FREE";
}

std::optional<RegionMode> parse_region_mode(std::string_view text) {
  for (auto m : {RegionMode::Free, RegionMode::FormulaMaintained, RegionMode::DataOnly, RegionMode::Locked})
    if (region_mode_name(m) == text) return m;
  return std::nullopt;
}

std::string_view period_boundary_name(PeriodBoundary p) {
  switch (p) {
    case PeriodBoundary::Attest: return "attest";
    case PeriodBoundary::Daily: return "daily";
    case PeriodBoundary::Weekly: return "weekly";
    case PeriodBoundary::Monthly: return "monthly";
  }
  return "attest";
}

std::optional<PeriodBoundary> parse_period_boundary(std::string_view text) {
  for (auto p : {PeriodBoundary::Attest, PeriodBoundary::Daily, PeriodBoundary::Weekly, PeriodBoundary::Monthly})
    if (period_boundary_name(p) == text) return p;
  return std::nullopt;
}

bool CadenceWindow::admits(Instant t) const {
  using namespace std::chrono;
  auto day = floor<days>(t);
  int wd = static_cast<int>(weekday{day}.c_encoding());
  auto since_midnight = t - day;
  return weekdays.contains(wd) && since_midnight >= hours{start_hour} && since_midnight < hours{end_hour};
}

void validate(const ControlPolicy& policy) {
  auto bad = [](const std::string& what) { throw Error(Errc::BadConfig, what); };
  auto check_region = [&](const Region& r) {
    if (r.sheet.empty() || r.top < 1 || r.left < 1 || r.top > r.bottom || r.left > r.right)
      bad("invalid region " + r.qualified());
  };
  for (const auto& r : policy.region_rules) check_region(r.region);
  for (const auto& c : policy.cadence_rules) {
    check_region(c.region);
    if (c.windows.empty()) bad("cadence rule for " + c.region.qualified() + " has no windows");
    for (const auto& w : c.windows) {
      if (w.weekdays.empty() || w.start_hour < 0 || w.end_hour > 24 || w.start_hour >= w.end_hour)
        bad("invalid cadence window for " + c.region.qualified());
      for (int d : w.weekdays)
        if (d < 0 || d > 6) bad("invalid weekday in cadence window");
    }
  }
  for (const auto& b : policy.bound_rules) {
    check_region(b.region);
    if (b.min && b.max && *b.min > *b.max) bad("bound min exceeds max for " + b.region.qualified());
  }
  for (const auto& t : policy.trend_rules) {
    if (t.window < 5) bad("trend window must be >= 5");
    if (!(t.z_threshold > 0)) bad("trend z_threshold must be > 0");
    if (t.min_points < 5) bad("trend min_points must be >= 5");
  }
  if (policy.workflow) {
    const auto& steps = policy.workflow->steps;
    if (steps.empty()) bad("workflow has no steps");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      check_region(steps[i].region);
      if (steps[i].step_id.empty()) bad("workflow step without id");
      for (std::size_t j = 0; j < i; ++j) {
        if (steps[i].step_id == steps[j].step_id) bad("duplicate workflow step " + steps[i].step_id);
        if (steps[i].region.overlaps(steps[j].region))
          bad("workflow steps " + steps[j].step_id + " and " + steps[i].step_id + " overlap");
      }
    }
  }
}

RegionMode effective_mode(const ControlPolicy& policy, const CellAddress& address) {
  RegionMode mode = RegionMode::Free;
  for (const auto& r : policy.region_rules)
    if (r.region.contains(address)) mode = std::max(mode, r.mode);
  return mode;
}

bool has_ticket_reference(std::string_view attestation) {
  static const std::regex kTicket(R"((^|[^A-Za-z0-9])[A-Z][A-Z0-9]*-[0-9]+)");
  return std::regex_search(attestation.begin(), attestation.end(), kTicket);
}

namespace {

using FindingKey = std::pair<std::string, std::string>;  // (location, rule)

void add_unique(std::vector<Finding>& out, std::map<FindingKey, bool>& seen, Finding f) {
  FindingKey key{render_location(f.location), f.rule_id};
  if (seen.emplace(key, true).second) out.push_back(std::move(f));
}

std::string side(const std::optional<CellContent>& c) { return c ? describe(*c) : "(empty)"; }

}  // namespace

std::vector<Finding> check_regions(const ChangeSet& cs, const ControlPolicy& policy,
                                   const std::optional<std::string>& attestation) {
  std::vector<Finding> out;
  std::map<FindingKey, bool> seen;
  bool attested = attestation && !trim(*attestation).empty();
  bool ticketed = attested && has_ticket_reference(*attestation);

  for (const auto& e : cs.events) {
    std::string kind(change_kind_name(e.kind));
    bool logic = is_logic_change(e);
    for (const auto& rule : policy.region_rules) {
      if (!rule.region.contains(e.address)) continue;
      switch (rule.mode) {
        case RegionMode::Locked:
          add_unique(out, seen,
                     {std::string(rules::kLockedRegionChange), Severity::Critical, e.address,
                      kind + " in locked region " + rule.region.qualified() + ": " + side(e.before) +
                          " -> " + side(e.after),
                      kind, "no change"});
          break;
        case RegionMode::DataOnly:
          if (logic)
            add_unique(out, seen,
                       {std::string(rules::kDataOnlyLogicChange), Severity::Critical, e.address,
                        kind + " of formula logic in data-only region " + rule.region.qualified(), kind,
                        "data changes only"});
          break;
        case RegionMode::FormulaMaintained:
          if (logic && (!attested || (rule.ticket_required && !ticketed)))
            add_unique(out, seen,
                       {std::string(rules::kUnattestedLogicChange), Severity::Warning, e.address,
                        kind + " without " +
                            (attested ? std::string("a change ticket in the attestation")
                                      : std::string("an attestation")) +
                            " in maintained region " + rule.region.qualified(),
                        kind, rule.ticket_required ? "attestation with ticket" : "attestation"});
          break;
        case RegionMode::Free:
          break;
      }
    }
  }
  return out;
}

std::vector<Finding> check_cadence(const ChangeSet& cs, const ControlPolicy& policy) {
  std::vector<Finding> out;
  std::map<FindingKey, bool> seen;
  for (const auto& e : cs.events) {
    for (const auto& rule : policy.cadence_rules) {
      if (!rule.region.contains(e.address)) continue;
      bool allowed = std::any_of(rule.windows.begin(), rule.windows.end(),
                                 [&](const CadenceWindow& w) { return w.admits(cs.to_time); });
      if (allowed) continue;
      add_unique(out, seen,
                 {std::string(rules::kCadenceViolation), Severity::Warning, e.address,
                  "change at " + format_instant(cs.to_time) + " outside allowed windows for " +
                      rule.region.qualified(),
                  format_instant(cs.to_time), std::nullopt});
    }
  }
  return out;
}

std::vector<Finding> check_bounds(const ChangeSet& cs, const ControlPolicy& policy) {
  std::vector<Finding> out;
  std::map<FindingKey, bool> seen;
  for (const auto& e : cs.events) {
    if (e.kind != ChangeKind::Added && e.kind != ChangeKind::DataChanged) continue;
    auto v = value_of(*e.after);
    if (!v) continue;
    for (const auto& rule : policy.bound_rules) {
      if (!rule.region.contains(e.address)) continue;
      std::string range = "[" + (rule.min ? format_decimal(*rule.min) : std::string("-inf")) + ", " +
                          (rule.max ? format_decimal(*rule.max) : std::string("+inf")) + "]";
      if (auto* n = std::get_if<Number>(&*v)) {
        if ((rule.min && n->value < *rule.min) || (rule.max && n->value > *rule.max))
          add_unique(out, seen,
                     {std::string(rules::kBoundViolation), Severity::Critical, e.address,
                      "value " + format_decimal(n->value) + " outside " + range, format_decimal(n->value),
                      range});
      } else {
        add_unique(out, seen,
                   {std::string(rules::kTypeViolation), Severity::Critical, e.address,
                    "non-numeric value '" + display(*v) + "' in numeric region " + rule.region.qualified(),
                    display(*v), "number"});
      }
    }
  }
  return out;
}

TrendVerdict trend_deviation(const CellSeries& history, double new_value, const TrendRule& rule) {
  TrendVerdict v;
  v.address = history.address;
  v.new_value = new_value;

  std::vector<double> numeric;
  for (const auto& [t, value] : history.points)
    if (auto* n = std::get_if<Number>(&value)) numeric.push_back(n->value);
  std::size_t take = std::min(numeric.size(), static_cast<std::size_t>(std::max(rule.window, 0)));
  v.points_used = take;
  if (take < static_cast<std::size_t>(rule.min_points) || take < 2) return v;

  // Welford over the window.
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (auto it = numeric.end() - static_cast<std::ptrdiff_t>(take); it != numeric.end(); ++it) {
    ++n;
    double delta = *it - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (*it - mean);
  }
  v.mean = mean;
  v.stddev = std::sqrt(std::max(m2, 0.0) / static_cast<double>(n - 1));
  if (v.stddev > 0) {
    v.z = (new_value - mean) / v.stddev;
    v.violated = std::fabs(v.z) > rule.z_threshold;
  } else {
    v.z = 0.0;
    v.violated = new_value != mean;
  }
  return v;
}

std::vector<Finding> check_trends(const ChangeSet& cs, const ControlPolicy& policy, const Ledger& ledger) {
  std::vector<Finding> out;
  std::map<FindingKey, bool> seen;
  for (const auto& rule : policy.trend_rules) {
    auto e = std::find_if(cs.events.begin(), cs.events.end(),
                          [&](const ChangeEvent& ev) { return ev.address == rule.address; });
    if (e == cs.events.end() || !e->after) continue;
    auto v = value_of(*e->after);
    auto* n = v ? std::get_if<Number>(&*v) : nullptr;
    if (!n) continue;

    CellSeries history = series_for_cell(ledger, rule.address);
    std::erase_if(history.points, [&](const auto& p) { return p.first >= cs.to_time; });
    auto verdict = trend_deviation(history, n->value, rule);
    if (!verdict.violated) continue;
    std::string msg = verdict.stddev > 0
                          ? "value " + format_decimal(n->value) + " is " + format_decimal(verdict.z) +
                                " standard deviations from the mean " + format_decimal(verdict.mean) +
                                " of the last " + std::to_string(verdict.points_used) + " points"
                          : "value " + format_decimal(n->value) + " departs from constant history " +
                                format_decimal(verdict.mean);
    add_unique(out, seen,
               {std::string(rules::kTrendDeviation), rule.severity, rule.address, msg,
                format_decimal(n->value), "|z| <= " + format_decimal(rule.z_threshold)});
  }
  return out;
}

namespace {

long long period_key(PeriodBoundary p, Instant t) {
  using namespace std::chrono;
  auto day = floor<days>(t).time_since_epoch().count();
  switch (p) {
    case PeriodBoundary::Daily: return day;
    // 1970-01-01 was a Thursday; weeks start on Monday.
    case PeriodBoundary::Weekly: return (day + 3 >= 0 ? (day + 3) / 7 : (day + 3 - 6) / 7);
    case PeriodBoundary::Monthly: {
      year_month_day ymd{floor<days>(t)};
      return static_cast<int>(ymd.year()) * 12LL + static_cast<unsigned>(ymd.month());
    }
    case PeriodBoundary::Attest: return 0;
  }
  return 0;
}

std::set<std::size_t> steps_touched(const Workflow& wf, const ChangeSet& cs) {
  std::set<std::size_t> out;
  for (const auto& e : cs.events)
    for (std::size_t i = 0; i < wf.steps.size(); ++i)
      if (wf.steps[i].region.contains(e.address)) out.insert(i);
  return out;
}

}  // namespace

std::vector<Finding> check_task_order(const Ledger& ledger, const Workflow& workflow, const ChangeSet& cs) {
  // Start of the current period, exclusive.
  std::optional<Instant> period_start;
  if (workflow.period == PeriodBoundary::Attest) {
    for (const auto& a : attest_entries(ledger))
      if (a.timestamp < cs.to_time && (!period_start || a.timestamp > *period_start)) period_start = a.timestamp;
  }
  auto in_period = [&](Instant t) {
    if (t >= cs.to_time) return false;
    if (workflow.period == PeriodBoundary::Attest) return !period_start || t > *period_start;
    return period_key(workflow.period, t) == period_key(workflow.period, cs.to_time);
  };

  std::set<std::size_t> done;
  for (const auto& prior : changesets(ledger))
    if (in_period(prior.to_time)) done.merge(steps_touched(workflow, prior));

  std::vector<Finding> out;
  for (std::size_t k : steps_touched(workflow, cs)) {
    std::string skipped;
    for (std::size_t j = 0; j < k; ++j) {
      if (done.contains(j)) continue;
      if (!skipped.empty()) skipped += ",";
      skipped += workflow.steps[j].step_id;
    }
    done.insert(k);
    if (skipped.empty()) continue;
    const auto& step = workflow.steps[k];
    out.push_back({std::string(rules::kTaskOrderViolation), Severity::Warning, region_location(step.region),
                   "step " + step.step_id + " worked before " + skipped + " in the current period",
                   step.step_id, skipped});
  }
  return out;
}

std::vector<Finding> evaluate_policies(const ChangeSet& cs, const ControlPolicy& policy, const Ledger& ledger) {
  if (cs.events.empty()) return {};
  std::optional<std::string> attestation;
  for (const auto& entry : ingest_entries(ledger))
    if (entry.timestamp == cs.to_time && entry.digest == cs.to_digest) attestation = entry.attestation;

  std::vector<Finding> out;
  for (auto&& batch : {check_regions(cs, policy, attestation), check_cadence(cs, policy),
                       check_bounds(cs, policy), check_trends(cs, policy, ledger)})
    out.insert(out.end(), batch.begin(), batch.end());
  if (policy.workflow) {
    auto order = check_task_order(ledger, *policy.workflow, cs);
    out.insert(out.end(), order.begin(), order.end());
  }
  sort_findings(out);
  return out;
}

}  // namespace sheetguard
