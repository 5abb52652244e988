#include "sheetguard/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <functional>
#include <map>

#include "sheetguard/error.hpp"
#include "sheetguard/textio.hpp"

namespace sheetguard {

namespace {

struct Entry {
  std::size_t line;
  std::string key;
  std::string value;
};

[[noreturn]] void bad(std::size_t line, const std::string& what) {
  throw Error(Errc::BadConfig, "line " + std::to_string(line) + ": " + what);
}

struct Stanza {
  std::string section;
  std::size_t line;  // of the header; 0 for the leading headerless stanza
  std::vector<Entry> entries;
};

// Entries before the first header belong to section "".
std::vector<Stanza> read_stanzas(std::string_view text) {
  std::vector<Stanza> out{{"", 0, {}}};
  std::size_t lineno = 0;
  for (auto raw : split_lines(text)) {
    ++lineno;
    auto hash = raw.find('#');
    auto line = trim(raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad(lineno, "unterminated section header");
      out.push_back({std::string(trim(line.substr(1, line.size() - 2))), lineno, {}});
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) bad(lineno, "expected key = value");
    out.back().entries.push_back(
        {lineno, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1)))});
  }
  return out;
}

double decimal_value(const Entry& e) {
  auto v = parse_decimal(e.value);
  if (!v) bad(e.line, "'" + e.key + "' expects a number");
  return *v;
}

long integer_value(const Entry& e) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc{} || ptr != e.value.data() + e.value.size()) bad(e.line, "'" + e.key + "' expects an integer");
  return v;
}

bool bool_value(const Entry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  bad(e.line, "'" + e.key + "' expects true or false");
}

Region region_value(const Entry& e) {
  auto r = parse_region(e.value);
  if (!r) bad(e.line, "bad range '" + e.value + "' (expected e.g. Sheet1!A1:D20)");
  return *r;
}

Fraction fraction_value(const Entry& e) {
  auto slash = e.value.find('/');
  if (slash != std::string::npos) {
    Entry num{e.line, e.key, std::string(trim(std::string_view(e.value).substr(0, slash)))};
    Entry den{e.line, e.key, std::string(trim(std::string_view(e.value).substr(slash + 1)))};
    return {integer_value(num), integer_value(den)};
  }
  // Decimal input, read from the text so 0.7 is exactly 7/10.
  std::string_view v = e.value;
  auto dot = v.find('.');
  std::string digits(v.substr(0, dot));
  std::int64_t den = 1;
  if (dot != std::string_view::npos) {
    auto frac = v.substr(dot + 1);
    if (frac.size() > 9) bad(e.line, "'" + e.key + "' has too many decimal places");
    digits += frac;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  }
  bool ok = !digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; });
  if (!ok) bad(e.line, "'" + e.key + "' expects a fraction like 2/3 or 0.75");
  return {integer_value({e.line, e.key, digits}), den};
}

int weekday_number(std::string_view name, std::size_t line) {
  static constexpr std::array<std::string_view, 7> kNames{"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (sheet_equal(kNames[i], name)) return static_cast<int>(i);
  bad(line, "unknown weekday '" + std::string(name) + "'");
}

// "Mon-Fri 09-17", "Sat,Sun 10-12", "Wed 0-24"
CadenceWindow window_value(const Entry& e) {
  auto parts = split(e.value, ' ');
  std::erase_if(parts, [](std::string_view p) { return p.empty(); });
  if (parts.size() != 2) bad(e.line, "window expects '<days> <start>-<end>'");
  CadenceWindow w;
  for (auto item : split(parts[0], ',')) {
    auto dash = item.find('-');
    if (dash == std::string_view::npos) {
      w.weekdays.insert(weekday_number(item, e.line));
      continue;
    }
    int from = weekday_number(item.substr(0, dash), e.line);
    int to = weekday_number(item.substr(dash + 1), e.line);
    for (int d = from;; d = (d + 1) % 7) {
      w.weekdays.insert(d);
      if (d == to) break;
    }
  }
  auto hours = split(parts[1], '-');
  if (hours.size() != 2) bad(e.line, "window hours expect <start>-<end>");
  w.start_hour = static_cast<int>(integer_value({e.line, e.key, std::string(hours[0])}));
  w.end_hour = static_cast<int>(integer_value({e.line, e.key, std::string(hours[1])}));
  if (w.start_hour < 0 || w.end_hour > 24 || w.start_hour >= w.end_hour)
    bad(e.line, "window hours must satisfy 0 <= start < end <= 24");
  return w;
}

using Handlers = std::map<std::string, std::function<void(const Entry&)>>;

void dispatch(const std::vector<Entry>& entries, const Handlers& handlers, const std::string& section) {
  for (const auto& e : entries) {
    auto it = handlers.find(e.key);
    if (it == handlers.end()) bad(e.line, "unknown key '" + e.key + "' in " + section);
    it->second(e);
  }
}

}  // namespace

ToolConfig parse_config(std::string_view text) {
  ToolConfig cfg;
  auto stanzas = read_stanzas(text);
  if (stanzas.size() > 1) bad(stanzas[1].line, "config files take no sections");
  auto& a = cfg.audit;
  auto& c = cfg.classification;
  Handlers h{
      {"if_depth_threshold", [&](const Entry& e) { a.if_depth_threshold = static_cast<int>(integer_value(e)); }},
      {"min_run_length", [&](const Entry& e) { a.min_run_length = static_cast<int>(integer_value(e)); }},
      {"majority_fraction", [&](const Entry& e) { a.majority_fraction = fraction_value(e); }},
      {"constant_whitelist",
       [&](const Entry& e) {
         a.constant_whitelist.clear();
         for (auto item : split(e.value, ',')) {
           auto v = parse_decimal(trim(item));
           if (!v) bad(e.line, "constant_whitelist expects comma-separated numbers");
           a.constant_whitelist.push_back(*v);
         }
       }},
      {"operational_min_actors",
       [&](const Entry& e) {
         auto v = integer_value(e);
         if (v < 0) bad(e.line, "operational_min_actors must be >= 0");
         c.operational_min_actors = static_cast<std::size_t>(v);
       }},
      {"operational_min_persistence_days",
       [&](const Entry& e) { c.operational_min_persistence_days = decimal_value(e); }},
      {"operational_max_structural_volatility",
       [&](const Entry& e) { c.operational_max_structural_volatility = decimal_value(e); }},
      {"modeling_min_structural_volatility",
       [&](const Entry& e) { c.modeling_min_structural_volatility = decimal_value(e); }},
  };
  dispatch(stanzas[0].entries, h, "config");
  validate(cfg.audit);
  return cfg;
}

ControlPolicy parse_policy(std::string_view text) {
  ControlPolicy policy;
  auto stanzas = read_stanzas(text);
  dispatch(stanzas[0].entries, {{"workbook", [&](const Entry& e) { policy.workbook_id = e.value; }}}, "policy header");

  for (std::size_t i = 1; i < stanzas.size(); ++i) {
    const auto& [section, header_line, entries] = stanzas[i];
    std::optional<Region> region;
    auto need_region = [&](const char* key) {
      if (!region) bad(header_line, "[" + section + "] stanza needs '" + key + "'");
      return *region;
    };

    if (section == "region") {
      RegionRule rule;
      bool has_mode = false;
      dispatch(entries,
               {{"range", [&](const Entry& e) { region = region_value(e); }},
                {"mode",
                 [&](const Entry& e) {
                   auto m = parse_region_mode(e.value);
                   if (!m) bad(e.line, "unknown mode '" + e.value + "'");
                   rule.mode = *m;
                   has_mode = true;
                 }},
                {"ticket_required", [&](const Entry& e) { rule.ticket_required = bool_value(e); }}},
               section);
      rule.region = need_region("range");
      if (!has_mode) bad(header_line, "[region] stanza needs 'mode'");
      policy.region_rules.push_back(rule);
    } else if (section == "cadence") {
      CadenceRule rule;
      dispatch(entries,
               {{"range", [&](const Entry& e) { region = region_value(e); }},
                {"window", [&](const Entry& e) { rule.windows.push_back(window_value(e)); }}},
               section);
      rule.region = need_region("range");
      policy.cadence_rules.push_back(rule);
    } else if (section == "bounds") {
      BoundRule rule;
      dispatch(entries,
               {{"range", [&](const Entry& e) { region = region_value(e); }},
                {"min", [&](const Entry& e) { rule.min = decimal_value(e); }},
                {"max", [&](const Entry& e) { rule.max = decimal_value(e); }}},
               section);
      rule.region = need_region("range");
      policy.bound_rules.push_back(rule);
    } else if (section == "trend") {
      TrendRule rule;
      std::optional<CellAddress> cell;
      dispatch(entries,
               {{"cell",
                 [&](const Entry& e) {
                   cell = parse_qualified_address(e.value);
                   if (!cell) bad(e.line, "bad cell '" + e.value + "' (expected e.g. Summary!B10)");
                 }},
                {"window", [&](const Entry& e) { rule.window = static_cast<int>(integer_value(e)); }},
                {"z_threshold", [&](const Entry& e) { rule.z_threshold = decimal_value(e); }},
                {"min_points", [&](const Entry& e) { rule.min_points = static_cast<int>(integer_value(e)); }},
                {"severity",
                 [&](const Entry& e) {
                   auto s = parse_severity(e.value);
                   if (!s) bad(e.line, "unknown severity '" + e.value + "'");
                   rule.severity = *s;
                 }}},
               section);
      if (!cell) bad(header_line, "[trend] stanza needs 'cell'");
      rule.address = *cell;
      policy.trend_rules.push_back(rule);
    } else if (section == "workflow") {
      if (policy.workflow) bad(header_line, "only one [workflow] stanza is allowed");
      Workflow wf;
      dispatch(entries,
               {{"period",
                 [&](const Entry& e) {
                   auto p = parse_period_boundary(e.value);
                   if (!p) bad(e.line, "unknown period '" + e.value + "'");
                   wf.period = *p;
                 }},
                {"step",
                 [&](const Entry& e) {
                   auto sp = e.value.find(' ');
                   if (sp == std::string::npos) bad(e.line, "step expects '<id> <range>'");
                   Entry range{e.line, e.key, std::string(trim(std::string_view(e.value).substr(sp + 1)))};
                   wf.steps.push_back({e.value.substr(0, sp), region_value(range)});
                 }}},
               section);
      policy.workflow = std::move(wf);
    } else {
      bad(header_line, "unknown section [" + section + "]");
    }
  }
  validate(policy);
  return policy;
}

}  // namespace sheetguard
