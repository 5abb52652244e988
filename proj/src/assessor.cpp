#include "sheetguard/assessor.hpp"

#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "sheetguard/error.hpp"
#include "sheetguard/textio.hpp"

namespace sheetguard {

std::string_view classification_name(Classification c) {
  switch (c) {
    case Classification::Modeling: return "Modeling";
    case Classification::Operational: return "Operational";
    case Classification::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

UsageMetrics usage_metrics(const Ledger& ledger) {
  UsageMetrics m;
  auto entries = ingest_entries(ledger);
  m.ingest_count = entries.size();
  if (entries.empty()) return m;

  std::set<std::string> actors;
  for (const auto& e : entries) actors.insert(e.actor);
  m.distinct_actors = actors.size();
  m.persistence_days = days_between(entries.front().timestamp, entries.back().timestamp);

  double structural = 0.0, data = 0.0;
  std::size_t pairs = 0;
  for (const auto& cs : changesets(ledger)) {
    auto before = ledger.load_object(cs.from_digest);
    if (!before) continue;
    auto v = volatility_metrics(cs, *before);
    structural += v.structural_volatility;
    data += v.data_volatility;
    ++pairs;
  }
  if (pairs > 0) {
    m.mean_structural_volatility = structural / static_cast<double>(pairs);
    m.mean_data_volatility = data / static_cast<double>(pairs);
  }
  return m;
}

Classification classify_usage(const UsageMetrics& m, const ClassificationThresholds& t) {
  if (m.distinct_actors >= t.operational_min_actors ||
      (m.persistence_days >= t.operational_min_persistence_days &&
       m.mean_structural_volatility <= t.operational_max_structural_volatility))
    return Classification::Operational;
  if (m.distinct_actors <= 1 && m.mean_structural_volatility >= t.modeling_min_structural_volatility)
    return Classification::Modeling;
  return Classification::Indeterminate;
}

double risk_score(const UsageMetrics& m, const std::vector<Finding>& findings) {
  auto critical = std::count_if(findings.begin(), findings.end(),
                                [](const Finding& f) { return f.severity == Severity::Critical; });
  double score = 15.0 * static_cast<double>(std::min<std::size_t>(m.distinct_actors, 4)) +
                 25.0 * m.mean_data_volatility + (m.persistence_days >= 30.0 ? 10.0 : 0.0) +
                 5.0 * static_cast<double>(critical);
  return std::clamp(score, 0.0, 100.0);
}

RiskProfile risk_profile(const Ledger& ledger, const std::vector<Finding>& findings,
                         const ClassificationThresholds& t) {
  RiskProfile p;
  p.metrics = usage_metrics(ledger);
  p.classification = classify_usage(p.metrics, t);
  p.risk_score = risk_score(p.metrics, findings);

  const auto& m = p.metrics;
  if (m.distinct_actors >= t.operational_min_actors)
    p.rationale.push_back(std::to_string(m.distinct_actors) + " distinct actors >= " +
                          std::to_string(t.operational_min_actors) + ": workbook is handed between people");
  if (m.persistence_days >= t.operational_min_persistence_days &&
      m.mean_structural_volatility <= t.operational_max_structural_volatility)
    p.rationale.push_back("persisted " + format_decimal(m.persistence_days) + " days with structural volatility " +
                          format_decimal(m.mean_structural_volatility) + " <= " +
                          format_decimal(t.operational_max_structural_volatility));
  if (p.classification == Classification::Modeling)
    p.rationale.push_back("single actor with structural volatility " +
                          format_decimal(m.mean_structural_volatility) + " >= " +
                          format_decimal(t.modeling_min_structural_volatility));
  if (p.classification == Classification::Indeterminate)
    p.rationale.push_back("metrics meet neither the operational nor the modeling criteria");
  return p;
}

std::set<int> map_finding_to_sox(const Finding& f) {
  if (!rules::is_registered(f.rule_id)) throw Error(Errc::UnknownRule, "unknown rule id '" + f.rule_id + "'");
  std::set<int> out{103, 404};
  bool logic_derived = f.rule_id == rules::kUnattestedLogicChange || f.rule_id == rules::kDataOnlyLogicChange ||
                       (f.rule_id == rules::kLockedRegionChange &&
                        (f.observed == change_kind_name(ChangeKind::LogicChanged) ||
                         f.observed == change_kind_name(ChangeKind::KindChanged)));
  if (logic_derived) out.insert(302);
  bool value_rule = f.rule_id == rules::kBoundViolation || f.rule_id == rules::kTypeViolation ||
                    f.rule_id == rules::kTrendDeviation || f.rule_id == rules::kErrorValue;
  if (value_rule && f.severity == Severity::Critical) out.insert(304);
  return out;
}

ComplianceReport build_report(const Ledger& ledger, const ControlPolicy& policy, ReportPeriod period,
                              Instant generated_at, const ClassificationThresholds& t) {
  if (ledger.size() == 0) throw Error(Errc::EmptyLedger, "ledger has no records");
  if (!(period.start < period.end)) throw Error(Errc::BadConfig, "report period start must precede its end");
  if (!policy.workbook_id.empty() && !ledger.workbook_id().empty() && policy.workbook_id != ledger.workbook_id())
    throw Error(Errc::WorkbookMismatch, "policy is for workbook '" + policy.workbook_id + "'");

  ComplianceReport r;
  r.workbook_id = ledger.workbook_id();
  r.period = period;
  r.generated_at = generated_at;
  r.thresholds = t;
  r.region_rules = policy.region_rules.size();
  r.cadence_rules = policy.cadence_rules.size();
  r.bound_rules = policy.bound_rules.size();
  r.trend_rules = policy.trend_rules.size();
  r.workflow_steps = policy.workflow ? policy.workflow->steps.size() : 0;

  auto verdict = verify_chain(ledger);
  r.chain_verified = verdict.ok;
  r.first_bad_seq = verdict.first_bad_seq;

  for (const auto& batch : findings_batches(ledger))
    if (batch.at >= period.start && batch.at < period.end)
      r.findings.insert(r.findings.end(), batch.findings.begin(), batch.findings.end());
  if (!verdict.ok)
    r.findings.push_back({std::string(rules::kLedgerTamper), Severity::Critical, WorkbookScope{},
                          "hash chain verification failed at record " + std::to_string(*verdict.first_bad_seq) +
                              ": " + verdict.reason,
                          std::to_string(*verdict.first_bad_seq), std::nullopt});
  sort_findings(r.findings);

  for (int section : kSoxSections) r.findings_by_sox[section];
  for (const auto& f : r.findings) {
    for (int section : map_finding_to_sox(f)) r.findings_by_sox[section].push_back(f);
    if (f.severity == Severity::Critical) r.material_weaknesses.push_back(f);
  }
  r.profile = risk_profile(ledger, r.findings, t);
  return r;
}

namespace {

std::string_view section_title(int section) {
  switch (section) {
    case 103: return "Auditing, quality control, and independence standards";
    case 302: return "Corporate responsibility for financial reports";
    case 304: return "Forfeiture of certain bonuses and profits (restatement risk)";
    case 404: return "Management assessment of internal controls";
  }
  return "";
}

std::string finding_line(const Finding& f) {
  std::string out = "  " + std::string(severity_name(f.severity)) + "\t" + f.rule_id + "\t" +
                    render_location(f.location) + "\t" + f.message;
  return out;
}

}  // namespace

std::string render_report_text(const ComplianceReport& r) {
  std::ostringstream out;
  out << "SPREADSHEET INTEGRITY COMPLIANCE REPORT\n";
  out << "workbook: " << r.workbook_id << "\n";
  out << "period: " << format_instant(r.period.start) << " .. " << format_instant(r.period.end) << " (end exclusive)\n";
  out << "generated_at: " << format_instant(r.generated_at) << "\n";
  out << "chain_verified: " << (r.chain_verified ? "true" : "false");
  if (r.first_bad_seq) out << " (first bad record " << *r.first_bad_seq << ")";
  out << "\n";
  out << "policy: " << r.region_rules << " region, " << r.cadence_rules << " cadence, " << r.bound_rules
      << " bounds, " << r.trend_rules << " trend rules; " << r.workflow_steps << " workflow steps\n";
  out << "findings_in_period: " << r.findings.size() << "\n";

  for (int section : kSoxSections) {
    const auto& list = r.findings_by_sox.at(section);
    out << "\n== SOX " << section << ": " << section_title(section) << " ==\n";
    if (list.empty()) out << "  (none)\n";
    for (const auto& f : list) out << finding_line(f) << "\n";
  }

  out << "\n== Material weaknesses (critical findings) ==\n";
  if (r.material_weaknesses.empty()) out << "  (none)\n";
  for (const auto& f : r.material_weaknesses) out << finding_line(f) << "\n";

  const auto& p = r.profile;
  const auto& m = p.metrics;
  out << "\n== Usage profile ==\n";
  out << "  ingests: " << m.ingest_count << "\n";
  out << "  distinct_actors: " << m.distinct_actors << "\n";
  out << "  persistence_days: " << format_decimal(m.persistence_days) << "\n";
  out << "  mean_structural_volatility: " << format_decimal(m.mean_structural_volatility) << "\n";
  out << "  mean_data_volatility: " << format_decimal(m.mean_data_volatility) << "\n";
  out << "  classification: " << classification_name(p.classification) << "\n";
  out << "  risk_score: " << format_decimal(p.risk_score) << "\n";
  for (const auto& why : p.rationale) out << "  rationale: " << why << "\n";
  const auto& t = r.thresholds;
  out << "  thresholds: operational_min_actors=" << t.operational_min_actors
      << " operational_min_persistence_days=" << format_decimal(t.operational_min_persistence_days)
      << " operational_max_structural_volatility=" << format_decimal(t.operational_max_structural_volatility)
      << " modeling_min_structural_volatility=" << format_decimal(t.modeling_min_structural_volatility) << "\n";

  out << "\n== Notes ==\n";
  out << "  SOX 304 entries mark restatement-risk findings; they are not legal determinations.\n";
  out << "  No finding is labelled as fraud: findings carry a severity, never an intent.\n";
  return out.str();
}

std::string render_report_json(const ComplianceReport& r) {
  using json = nlohmann::ordered_json;
  auto finding_json = [](const Finding& f) {
    json j;
    j["rule_id"] = f.rule_id;
    j["severity"] = severity_name(f.severity);
    j["location"] = render_location(f.location);
    j["message"] = f.message;
    j["observed"] = f.observed;
    j["expected"] = f.expected ? json(*f.expected) : json(nullptr);
    j["sox_sections"] = map_finding_to_sox(f);
    return j;
  };

  json doc;
  doc["schema"] = "sheetguard.compliance-report/1";
  doc["workbook_id"] = r.workbook_id;
  doc["period"] = {{"start", format_instant(r.period.start)}, {"end", format_instant(r.period.end)}};
  doc["generated_at"] = format_instant(r.generated_at);
  doc["chain_verified"] = r.chain_verified;
  doc["first_bad_seq"] = r.first_bad_seq ? json(*r.first_bad_seq) : json(nullptr);
  doc["policy"] = {{"region_rules", r.region_rules},
                   {"cadence_rules", r.cadence_rules},
                   {"bound_rules", r.bound_rules},
                   {"trend_rules", r.trend_rules},
                   {"workflow_steps", r.workflow_steps}};
  json sections = json::object();
  for (int section : kSoxSections) {
    json list = json::array();
    for (const auto& f : r.findings_by_sox.at(section)) list.push_back(finding_json(f));
    sections[std::to_string(section)] = std::move(list);
  }
  doc["findings_by_sox"] = std::move(sections);
  json weak = json::array();
  for (const auto& f : r.material_weaknesses) weak.push_back(finding_json(f));
  doc["material_weaknesses"] = std::move(weak);

  const auto& m = r.profile.metrics;
  doc["profile"] = {{"ingest_count", m.ingest_count},
                    {"distinct_actors", m.distinct_actors},
                    {"persistence_days", m.persistence_days},
                    {"mean_structural_volatility", m.mean_structural_volatility},
                    {"mean_data_volatility", m.mean_data_volatility},
                    {"classification", classification_name(r.profile.classification)},
                    {"risk_score", r.profile.risk_score},
                    {"rationale", r.profile.rationale}};
  const auto& t = r.thresholds;
  doc["thresholds"] = {{"operational_min_actors", t.operational_min_actors},
                       {"operational_min_persistence_days", t.operational_min_persistence_days},
                       {"operational_max_structural_volatility", t.operational_max_structural_volatility},
                       {"modeling_min_structural_volatility", t.modeling_min_structural_volatility}};
  doc["notes"] = {"SOX 304 entries mark restatement-risk findings; they are not legal determinations.",
                  "No finding is labelled as fraud: findings carry a severity, never an intent."};
  return doc.dump(2) + "\n";
}

}  // namespace sheetguard
