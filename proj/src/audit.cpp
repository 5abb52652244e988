#include "sheetguard/audit.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "sheetguard/error.hpp"
#include "sheetguard/textio.hpp"

namespace sheetguard {

std::string_view severity_name(Severity s) {
  switch (s) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Critical: return "critical";
  }
  return "info";
}

std::optional<Severity> parse_severity(std::string_view text) {
  if (text == "info") return Severity::Info;
  if (text == "warning") return Severity::Warning;
  if (text == "critical") return Severity::Critical;
  return std::nullopt;
}

namespace rules {

const std::vector<std::string_view>& all() {
  static const std::vector<std::string_view> kAll{
      kCopyInconsistent,      kDeepNesting,       kEmbeddedConstant,   kErrorValue,
      kParseFailure,          kLockedRegionChange, kDataOnlyLogicChange, kUnattestedLogicChange,
      kCadenceViolation,      kBoundViolation,    kTypeViolation,      kTrendDeviation,
      kTaskOrderViolation,    kLedgerTamper,
  };
  return kAll;
}

bool is_registered(std::string_view rule_id) {
  const auto& a = all();
  return std::find(a.begin(), a.end(), rule_id) != a.end();
}

}  // namespace rules

std::string render_location(const Location& loc) {
  if (auto* c = std::get_if<CellAddress>(&loc)) return c->qualified();
  if (auto* r = std::get_if<Region>(&loc)) return r->qualified();
  return "-";
}

std::optional<Location> parse_location(std::string_view text) {
  if (text == "-") return Location{WorkbookScope{}};
  auto region = parse_region(text);
  if (!region) return std::nullopt;
  return region_location(*region);
}

Location region_location(const Region& r) {
  if (r.top == r.bottom && r.left == r.right) return r.top_left();
  return r;
}

namespace {

// (scope, folded sheet, top, left, bottom, right)
auto location_key(const Location& loc) {
  if (auto* c = std::get_if<CellAddress>(&loc))
    return std::make_tuple(1, fold_case(c->sheet), c->row, c->col, c->row, c->col);
  if (auto* r = std::get_if<Region>(&loc))
    return std::make_tuple(1, fold_case(r->sheet), r->top, r->left, r->bottom, r->right);
  return std::make_tuple(0, std::string{}, 0, 0, 0, 0);
}

}  // namespace

bool finding_less(const Finding& a, const Finding& b) {
  auto ka = location_key(a.location), kb = location_key(b.location);
  if (ka != kb) return ka < kb;
  if (a.rule_id != b.rule_id) return a.rule_id < b.rule_id;
  return std::tie(a.message, a.observed) < std::tie(b.message, b.observed);
}

void sort_findings(std::vector<Finding>& findings) {
  std::stable_sort(findings.begin(), findings.end(), finding_less);
}

void validate(const AuditConfig& cfg) {
  if (cfg.if_depth_threshold < 1) throw Error(Errc::BadConfig, "if_depth_threshold must be >= 1");
  if (cfg.min_run_length < 3) throw Error(Errc::BadConfig, "min_run_length must be >= 3");
  const auto& f = cfg.majority_fraction;
  // (1/2, 1]
  if (f.den <= 0 || 2 * f.num <= f.den || f.num > f.den)
    throw Error(Errc::BadConfig, "majority_fraction must lie in (0.5, 1]");
}

namespace {

std::string form_of(const Formula& f, const CellAddress& host) {
  if (!f.ast) return "#UNPARSED " + f.source;
  return formula::normalize_relative(*f.ast, host).text;
}

using Run = std::vector<std::pair<CellAddress, std::string>>;

void check_run(const Run& run, const AuditConfig& cfg, std::map<CellAddress, Finding>& out) {
  const auto len = static_cast<std::int64_t>(run.size());
  if (len < cfg.min_run_length) return;
  std::map<std::string, std::int64_t> counts;
  for (const auto& [addr, form] : run) ++counts[form];
  auto best = std::max_element(counts.begin(), counts.end(),
                               [](const auto& a, const auto& b) { return a.second < b.second; });
  // A strict majority is unique by construction, so ties never pass.
  const auto& frac = cfg.majority_fraction;
  if (2 * best->second <= len || best->second * frac.den < frac.num * len) return;
  for (const auto& [addr, form] : run) {
    if (form == best->first || out.contains(addr)) continue;
    Finding f;
    f.rule_id = std::string(rules::kCopyInconsistent);
    f.severity = Severity::Warning;
    f.location = addr;
    f.message = "formula differs from " + std::to_string(best->second) + " of " +
                std::to_string(len) + " neighbouring copies";
    f.observed = form;
    f.expected = best->first;
    out.emplace(addr, std::move(f));
  }
}

template <typename Fn>
void for_each_formula(const Snapshot& s, Fn&& fn) {
  for (const auto& [addr, content] : s.cells)
    if (auto* f = std::get_if<Formula>(&content)) fn(addr, *f);
}

// Literal numbers that sit inside a formula. A negated literal counts as one
// signed constant; a formula that is only a literal has none.
void buried_constants(const formula::Node& n, bool is_root, std::vector<double>& out) {
  using namespace formula;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, NumberLit>) {
          if (!is_root) out.push_back(k.value);
        } else if constexpr (std::is_same_v<K, Unary>) {
          auto* lit = std::get_if<NumberLit>(&k.operand->kind);
          if (k.op == UnaryOp::Negate && lit) {
            if (!is_root) out.push_back(-lit->value);
          } else {
            buried_constants(*k.operand, false, out);
          }
        } else if constexpr (std::is_same_v<K, Binary>) {
          buried_constants(*k.lhs, false, out);
          buried_constants(*k.rhs, false, out);
        } else if constexpr (std::is_same_v<K, Call>) {
          for (const auto& a : k.args) buried_constants(*a, false, out);
        }
      },
      n.kind);
}

}  // namespace

std::vector<Finding> detect_copy_inconsistencies(const Snapshot& s, std::string_view sheet,
                                                 const AuditConfig& cfg) {
  // Formula cells of the sheet, keyed (row, col) and (col, row).
  std::map<std::pair<int, int>, std::pair<CellAddress, std::string>> by_row, by_col;
  for_each_formula(s, [&](const CellAddress& addr, const Formula& f) {
    if (!sheet_equal(addr.sheet, sheet)) return;
    auto form = form_of(f, addr);
    by_row.emplace(std::pair{addr.row, addr.col}, std::pair{addr, form});
    by_col.emplace(std::pair{addr.col, addr.row}, std::pair{addr, std::move(form)});
  });

  std::map<CellAddress, Finding> found;
  auto scan = [&](const auto& ordered) {
    Run run;
    std::pair<int, int> prev{-1, -1};
    for (const auto& [key, cell] : ordered) {
      if (!run.empty() && !(key.first == prev.first && key.second == prev.second + 1)) {
        check_run(run, cfg, found);
        run.clear();
      }
      run.push_back(cell);
      prev = key;
    }
    check_run(run, cfg, found);
  };
  scan(by_row);
  scan(by_col);

  std::vector<Finding> out;
  for (auto& [addr, f] : found) out.push_back(std::move(f));
  sort_findings(out);
  return out;
}

std::vector<Finding> detect_deep_nesting(const Snapshot& s, const AuditConfig& cfg) {
  std::vector<Finding> out;
  for_each_formula(s, [&](const CellAddress& addr, const Formula& f) {
    if (!f.ast) return;
    int depth = formula::max_if_depth(*f.ast);
    if (depth <= cfg.if_depth_threshold) return;
    out.push_back({std::string(rules::kDeepNesting), Severity::Warning, addr,
                   "IF nested " + std::to_string(depth) + " deep", std::to_string(depth),
                   "<= " + std::to_string(cfg.if_depth_threshold)});
  });
  return out;
}

std::vector<Finding> detect_embedded_constants(const Snapshot& s, const AuditConfig& cfg) {
  std::vector<Finding> out;
  for_each_formula(s, [&](const CellAddress& addr, const Formula& f) {
    if (!f.ast) return;
    std::vector<double> constants;
    buried_constants(*f.ast, true, constants);
    std::string observed;
    for (double c : constants) {
      if (std::find(cfg.constant_whitelist.begin(), cfg.constant_whitelist.end(), c) !=
          cfg.constant_whitelist.end())
        continue;
      if (!observed.empty()) observed += ",";
      observed += format_decimal(c);
    }
    if (observed.empty()) return;
    out.push_back({std::string(rules::kEmbeddedConstant), Severity::Warning, addr,
                   "hard-coded constant " + observed + " in formula", observed, std::nullopt});
  });
  return out;
}

std::vector<Finding> detect_error_values(const Snapshot& s) {
  std::vector<Finding> out;
  for (const auto& [addr, content] : s.cells) {
    auto v = value_of(content);
    if (!v || !is_error(*v)) continue;
    out.push_back({std::string(rules::kErrorValue), Severity::Critical, addr,
                   std::string(is_formula(content) ? "formula evaluates to " : "cell holds ") +
                       display(*v),
                   display(*v), std::nullopt});
  }
  return out;
}

std::vector<Finding> detect_parse_failures(const Snapshot& s) {
  std::vector<Finding> out;
  for_each_formula(s, [&](const CellAddress& addr, const Formula& f) {
    if (f.ast) return;
    out.push_back({std::string(rules::kParseFailure), Severity::Warning, addr, f.parse_error,
                   f.source, std::nullopt});
  });
  return out;
}

std::vector<Finding> audit_workbook(const Snapshot& s, const AuditConfig& cfg) {
  std::vector<Finding> out;
  std::set<std::string> seen;
  std::vector<std::string> sheets;
  for (const auto& [addr, content] : s.cells)
    if (seen.insert(fold_case(addr.sheet)).second) sheets.push_back(addr.sheet);

  for (const auto& sheet : sheets) {
    auto found = detect_copy_inconsistencies(s, sheet, cfg);
    out.insert(out.end(), found.begin(), found.end());
  }
  for (auto&& batch : {detect_deep_nesting(s, cfg), detect_embedded_constants(s, cfg),
                       detect_error_values(s), detect_parse_failures(s)})
    out.insert(out.end(), batch.begin(), batch.end());
  sort_findings(out);
  return out;
}

}  // namespace sheetguard
