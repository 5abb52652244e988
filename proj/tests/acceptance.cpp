// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "gen.hpp"
#include "sheetguard/assessor.hpp"
#include "sheetguard/audit.hpp"
#include "sheetguard/cli.hpp"
#include "sheetguard/config.hpp"
#include "sheetguard/control.hpp"
#include "sheetguard/diff.hpp"
#include "sheetguard/formula.hpp"
#include "sheetguard/ledger.hpp"
#include "support.hpp"

using namespace sheetguard;
using namespace sheetguard::test;
namespace F = sheetguard::formula;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// 1. Parser round-trip

struct Coverage {
  std::set<std::string> seen;

  void visit(const F::Node& n) {
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, F::NumberLit>) seen.insert("number");
          if constexpr (std::is_same_v<T, F::TextLit>) seen.insert(k.value.find('"') != std::string::npos ? "text-quote" : "text");
          if constexpr (std::is_same_v<T, F::BoolLit>) seen.insert("bool");
          if constexpr (std::is_same_v<T, F::ErrorLit>) seen.insert("error");
          if constexpr (std::is_same_v<T, F::CellRef>) ref(k);
          if constexpr (std::is_same_v<T, F::Range>) {
            seen.insert("range");
            ref(k.start);
            ref(k.end);
          }
          if constexpr (std::is_same_v<T, F::Unary>) {
            seen.insert(k.op == F::UnaryOp::Negate ? "negate" : "percent");
            visit(*k.operand);
          }
          if constexpr (std::is_same_v<T, F::Binary>) {
            seen.insert("op" + std::string(F::op_text(k.op)));
            visit(*k.lhs);
            visit(*k.rhs);
          }
          if constexpr (std::is_same_v<T, F::Call>) {
            seen.insert(k.args.empty() ? "call0" : k.args.size() == 1 ? "call1" : "calln");
            for (const auto& a : k.args) visit(*a);
          }
        },
        n.kind);
  }

  void ref(const F::CellRef& r) {
    seen.insert(r.row_abs ? "row-abs" : "row-rel");
    seen.insert(r.col_abs ? "col-abs" : "col-rel");
    if (r.sheet) seen.insert(r.sheet->find(' ') != std::string::npos ? "sheet-quoted" : "sheet");
  }
};

Outcome parser_round_trip() {
  std::vector<std::string> corpus = {
      "=1",           "=1.5e3",          "=.5",          "=\"text\"",          "=\"say \"\"hi\"\"\"",
      "=TRUE",        "=false",          "=#N/A",        "=#DIV/0!",           "=A1",
      "=$A$1",        "=A$1+$A1",        "=XFD1048576",  "=Sheet2!B3",         "='My Sheet'!C4",
      "='O''Brien'!A1", "=A1:B2",        "=Data!A1:B9",  "=SUM(A1:A10)",       "=now()",
      "=IF(A1>0,\"pos\",\"neg\")",       "=VLOOKUP(A1,Data!A1:C9,3,FALSE)",    "=-A1",
      "=--A1",        "=50%",            "=A1%%",        "=-A1^2",             "=2^-1",
      "=2^3^2",       "=1-2-3",          "=1-(2-3)",     "=(1+2)*3",           "=1+2*3",
      "=A1&B1&\"x\"", "=A1=B1",          "=A1<>B1",      "=A1<B1",             "=A1<=B1",
      "=A1>B1",       "=A1>=B1",         "=1/2/3",       "=((A1))",            "= A1 + B1 ",
      "=sum( 1 , 2 )", "=STDEV.S(A1:A9)", "=LOG10(100)", "=IF(A1,IF(B1,1,2),3)", "=MAX(A1,-B1%,C1^2)",
      "=A1&B1=C1",    "=1+2&3",          "=-(1+2)",      "=(A1:B2)",           "=1E-3*A1",
  };
  FormulaGen gen(1001);
  for (int i = 0; i < 600; ++i) corpus.push_back(F::print_formula(*gen.node()));

  Coverage cov;
  std::size_t failures = 0;
  std::string first_failure;
  for (const auto& src : corpus) {
    try {
      auto a = F::parse_formula(src);
      auto text = F::print_formula(*a);
      auto b = F::parse_formula(text);
      cov.visit(*a);
      if (!(*a == *b) || F::print_formula(*b) != text) {
        if (failures++ == 0) first_failure = src;
      }
    } catch (const std::exception& e) {
      if (failures++ == 0) first_failure = src + " (" + e.what() + ")";
    }
  }
  static const char* kProductions[] = {
      "number", "text", "text-quote", "bool",    "error",  "range",  "negate", "percent", "call0",
      "call1",  "calln", "row-abs",   "row-rel", "col-abs", "col-rel", "sheet", "sheet-quoted",
      "op=",    "op<>",  "op<",       "op<=",    "op>",     "op>=",    "op&",   "op+", "op-", "op*", "op/", "op^"};
  std::vector<std::string> missing;
  for (const char* p : kProductions)
    if (!cov.seen.contains(p)) missing.push_back(p);

  std::ostringstream d;
  d << corpus.size() << " formulas, " << failures << " failures, " << std::size(kProductions) - missing.size() << "/"
    << std::size(kProductions) << " productions covered";
  if (!first_failure.empty()) d << "; first failure: " << first_failure;
  for (const auto& m : missing) d << "; missing " << m;
  return {failures == 0 && missing.empty() && corpus.size() >= 200, d.str()};
}

// ---------------------------------------------------------------------------
// 2. Translation invariance

Outcome translation_invariance() {
  GenOptions opt;
  opt.absolute_refs = false;
  opt.row_margin = 40;
  opt.col_margin = 15;
  opt.row_limit = 300;
  opt.col_limit = 80;
  FormulaGen gen(2002, opt);
  const int n = 1000;
  int mismatches = 0;
  for (int i = 0; i < n; ++i) {
    auto ast = gen.node();
    CellAddress host{"Sheet1", 41 + gen.pick(200), 16 + gen.pick(40)};
    int dr = gen.pick(81) - 40, dc = gen.pick(31) - 15;
    CellAddress moved{"Sheet1", host.row + dr, host.col + dc};
    auto shifted = shift_refs(*ast, dr, dc);
    // Go through text so the copy is what a workbook would actually hold.
    auto copy = F::parse_formula(F::print_formula(*shifted));
    if (F::normalize_relative(*copy, moved) != F::normalize_relative(*ast, host)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(n) + " formulas, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------
// 3. Seeded-fault recall

Outcome seeded_fault_recall() {
  std::mt19937_64 rng(3003);
  GenOptions opt;
  opt.max_depth = 3;
  FormulaGen gen(3004, opt);
  AuditConfig cfg;
  std::size_t tp = 0, fp = 0, fn = 0, seeded = 0;
  const int regions = 50;
  for (int k = 0; k < regions; ++k) {
    int len = 5 + static_cast<int>(rng() % 26);
    // Two faults in a run of five leave 3/5 agreement, below the 2/3 majority
    // needed to call any form canonical, so pairs are seeded from six up.
    int faults = len >= 6 ? 1 + static_cast<int>(rng() % 2) : 1;
    bool across = rng() % 2 == 0;
    int top = 5 + static_cast<int>(rng() % 40), left = 3 + static_cast<int>(rng() % 20);
    auto base = gen.node();

    Snapshot s = snap("wb", "2024-03-01T09:00:00Z", "a");
    std::vector<CellAddress> cells;
    for (int i = 0; i < len; ++i) {
      CellAddress a{"Sheet1", top + (across ? 0 : i), left + (across ? i : 0)};
      cells.push_back(a);
      s.cells.emplace(a, fx(F::print_formula(*shift_refs(*base, across ? 0 : i, across ? i : 0))));
    }
    // Literal neighbours close the run at both ends.
    s.cells.emplace(CellAddress{"Sheet1", top - (across ? 0 : 1), left - (across ? 1 : 0)}, num(1));
    s.cells.emplace(CellAddress{"Sheet1", top + (across ? 0 : len), left + (across ? len : 0)}, num(1));

    std::set<CellAddress> corrupted;
    while (static_cast<int>(corrupted.size()) < faults) corrupted.insert(cells[rng() % cells.size()]);
    int tweak = 0;
    for (const auto& a : corrupted) {
      int i = across ? a.col - left : a.row - top;
      auto copy = shift_refs(*base, across ? 0 : i, across ? i : 0);
      // Each fault gets its own form so faults never outvote the copies.
      auto bad = F::make_binary(F::BinaryOp::Add, copy, F::make_number(++tweak + 0.5));
      s.cells.insert_or_assign(a, fx(F::print_formula(*bad)));
    }
    seeded += corrupted.size();

    std::set<CellAddress> flagged;
    for (const auto& f : detect_copy_inconsistencies(s, "Sheet1", cfg))
      if (auto* c = std::get_if<CellAddress>(&f.location)) flagged.insert(*c);
    for (const auto& a : flagged) (corrupted.contains(a) ? tp : fp)++;
    for (const auto& a : corrupted) fn += flagged.contains(a) ? 0 : 1;
  }
  double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  std::ostringstream d;
  d << regions << " regions, " << seeded << " seeded faults, precision " << precision << ", recall " << recall;
  return {fp == 0 && fn == 0 && tp == seeded, d.str()};
}

// ---------------------------------------------------------------------------
// 4. Diff reconstruction

Outcome diff_reconstruction() {
  std::mt19937_64 rng(4004);
  const int pairs = 300;
  int failures = 0, nonempty_self = 0;
  std::size_t max_cells = 0;
  for (int i = 0; i < pairs; ++i) {
    auto a = random_snapshot(rng, 500);
    auto b = mutate(a, rng, 500);
    b.timestamp = a.timestamp + std::chrono::seconds(60);
    max_cells = std::max({max_cells, a.cells.size(), b.cells.size()});
    if (apply_changes(a, diff_snapshots(a, b)).cells != b.cells) ++failures;
    if (!diff_snapshots(a, a).events.empty()) ++nonempty_self;
  }
  std::ostringstream d;
  d << pairs << " pairs (up to " << max_cells << " cells), " << failures << " reconstruction failures, "
    << nonempty_self << " non-empty self diffs";
  return {failures == 0 && nonempty_self == 0 && max_cells <= 500, d.str()};
}

// ---------------------------------------------------------------------------
// 5. Tamper evidence

Outcome tamper_evidence() {
  TempDir dir;
  {
    auto ledger = Ledger::open(dir.path());
    std::mt19937_64 rng(5005);
    auto s = random_snapshot(rng, 40);
    s.timestamp = at("2024-03-01T09:00:00Z");
    ingest_snapshot(ledger, s, {}, {});  // 1 record
    for (int k = 0; k < 6; ++k) {       // 3 records each
      s = mutate(s, rng, 60);
      s.timestamp = at("2024-03-01T09:00:00Z") + std::chrono::hours(24 * (k + 1));
      s.attestation = k == 5 ? std::optional<std::string>("CHG-7 close signed off") : std::nullopt;
      ingest_snapshot(ledger, s, {}, {});
    }
    if (ledger.size() != 20) return {false, "fixture has " + std::to_string(ledger.size()) + " records, want 20"};
  }
  const auto original = read_file(dir / "ledger.log");
  if (!verify_chain(Ledger::open(dir.path())).ok) return {false, "untampered ledger does not verify"};

  // Seq of the record owning each byte.
  std::vector<std::uint64_t> owner(original.size());
  std::uint64_t seq = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    owner[i] = seq;
    if (original[i] == '\n') ++seq;
  }

  std::size_t trials = 0, detected = 0;
  std::string first_miss;
  for (std::size_t i = 0; i < original.size(); ++i) {
    for (unsigned char mask : {0x01, 0x80}) {
      auto bytes = original;
      bytes[i] = static_cast<char>(static_cast<unsigned char>(bytes[i]) ^ mask);
      write_file(dir / "ledger.log", bytes);
      auto v = verify_chain(Ledger::open(dir.path()));
      ++trials;
      if (!v.ok && v.first_bad_seq && *v.first_bad_seq <= owner[i])
        ++detected;
      else if (first_miss.empty())
        first_miss = "byte " + std::to_string(i) + " of record " + std::to_string(owner[i]);
    }
  }
  write_file(dir / "ledger.log", original);
  std::ostringstream d;
  d << "20 records, " << original.size() << " bytes, " << detected << "/" << trials << " single-byte corruptions detected";
  if (!first_miss.empty()) d << "; first miss at " << first_miss;
  return {detected == trials, d.str()};
}

// ---------------------------------------------------------------------------
// 6. Trend oracle

bool close_rel(double got, long double want) {
  long double diff = std::fabs(static_cast<long double>(got) - want);
  return diff <= 1e-9L * std::max(std::fabs(want), 1e-3L);
}

Outcome trend_oracle() {
  std::mt19937_64 rng(6006);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int series_count = 1000;
  int mismatches = 0, constant_cases = 0, constant_wrong = 0;
  for (int i = 0; i < series_count; ++i) {
    double centre = std::pow(10.0, 6.0 * unit(rng) - 2.0) * (rng() % 2 ? 1 : -1);
    double spread = std::fabs(centre) * std::pow(10.0, -3.0 * unit(rng));
    std::normal_distribution<double> noise(centre, spread);
    bool constant = i % 10 == 0;

    CellSeries s{addr("Sheet1!B10"), {}};
    std::vector<double> numeric;
    int n = 5 + static_cast<int>(rng() % 60);
    for (int k = 0; k < n; ++k) {
      Instant t = at("2024-01-01T00:00:00Z") + std::chrono::hours(k);
      if (!constant && rng() % 9 == 0) s.points.emplace_back(t, Text{"n/a"});  // ignored by the rule
      double v = constant ? centre : noise(rng);
      s.points.emplace_back(t + std::chrono::minutes(1), Number{v});
      numeric.push_back(v);
    }
    TrendRule rule;
    rule.window = 5 + static_cast<int>(rng() % 40);
    rule.z_threshold = 1.0 + 3.0 * unit(rng);

    if (constant) {
      ++constant_cases;
      bool differ = rng() % 2 == 0;
      double x = differ ? centre + spread * (0.5 + unit(rng)) : centre;
      auto v = trend_deviation(s, x, rule);
      if (v.violated != differ) ++constant_wrong;
      continue;
    }

    double x = noise(rng) + spread * 4.0 * (unit(rng) - 0.5);
    auto v = trend_deviation(s, x, rule);

    // Two-pass recomputation in extended precision over the same window.
    std::size_t take = std::min<std::size_t>(numeric.size(), static_cast<std::size_t>(rule.window));
    long double sum = 0;
    for (std::size_t k = numeric.size() - take; k < numeric.size(); ++k) sum += numeric[k];
    long double mean = sum / static_cast<long double>(take);
    long double ss = 0;
    for (std::size_t k = numeric.size() - take; k < numeric.size(); ++k)
      ss += (numeric[k] - mean) * (numeric[k] - mean);
    long double sd = std::sqrt(ss / static_cast<long double>(take - 1));
    long double z = (x - mean) / sd;
    bool ok = close_rel(v.mean, mean) && close_rel(v.stddev, sd) && close_rel(v.z, z) &&
              v.violated == (std::fabs(z) > rule.z_threshold) && v.points_used == take;
    if (!ok) ++mismatches;
  }
  std::ostringstream d;
  d << series_count << " series, " << mismatches << " statistic mismatches, " << constant_wrong << "/"
    << constant_cases << " constant-history verdicts wrong";
  return {mismatches == 0 && constant_wrong == 0, d.str()};
}

// ---------------------------------------------------------------------------
// 7. Task-order brute force

Outcome task_order_brute_force() {
  std::size_t permutations = 0, sessions = 0, wrong = 0, clean = 0;
  for (int steps = 3; steps <= 5; ++steps) {
    std::vector<int> order(static_cast<std::size_t>(steps));
    std::iota(order.begin(), order.end(), 0);
    do {
      ++permutations;
      ControlPolicy policy;
      Workflow wf;
      for (int k = 0; k < steps; ++k)
        wf.steps.push_back({"S" + std::to_string(k + 1), Region{"Close", 1 + 10 * k, 1, 10 + 10 * k, 4}});
      policy.workflow = wf;

      auto ledger = Ledger::in_memory();
      Snapshot s = snap("close", "2024-03-01T08:00:00Z", "a");
      ingest_snapshot(ledger, s, {}, policy);
      std::set<int> done;
      bool any = false;
      for (std::size_t i = 0; i < order.size(); ++i) {
        int step = order[i];
        std::set<std::string> want;
        for (int j = 0; j < step; ++j)
          if (!done.contains(j)) want.insert("S" + std::to_string(step + 1));
        done.insert(step);

        s.timestamp += std::chrono::hours(1);
        s.cells.insert_or_assign(CellAddress{"Close", 2 + 10 * step, 2}, num(static_cast<double>(i + 1)));
        std::set<std::string> got;
        for (const auto& f : ingest_snapshot(ledger, s, {}, policy))
          if (f.rule_id == rules::kTaskOrderViolation) got.insert(f.observed);
        ++sessions;
        if (got != want) ++wrong;
        any |= !got.empty();
      }
      bool in_order = std::is_sorted(order.begin(), order.end());
      if (any == in_order) ++wrong;  // flagged iff not order-respecting
      clean += any ? 0 : 1;
    } while (std::next_permutation(order.begin(), order.end()));
  }
  std::ostringstream d;
  d << permutations << " permutations (3-5 steps), " << sessions << " sessions, " << wrong << " disagreements, "
    << clean << " unflagged";
  return {wrong == 0 && permutations == 150 && clean == 3, d.str()};
}

// ---------------------------------------------------------------------------
// 8. Report goldens

struct CliRun {
  cli::ExitStatus status;
  std::string out;
};

CliRun cli_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  auto status = cli::run(args, out, err);
  return {status, out.str()};
}

Outcome report_goldens() {
  const std::filesystem::path fixtures = SHEETGUARD_FIXTURES;
  const std::filesystem::path golden = SHEETGUARD_GOLDEN;
  const std::string policy = (fixtures / "close.policy").string();
  TempDir dir;
  std::vector<std::string> problems;
  std::map<std::string, ComplianceReport> reports;

  for (std::string name : {"clean", "violations"}) {
    auto ledger_dir = (dir / name).string();
    for (std::string snapfile : {"01.snap", "02.snap"})
      cli_run({"ingest", ledger_dir, (fixtures / name / snapfile).string(), "--policy", policy});
    for (std::string format : {"text", "json"}) {
      auto r = cli_run({"report", ledger_dir, "--from", "2024-03-01T00:00:00Z", "--to", "2024-04-01T00:00:00Z",
                        "--policy", policy, "--generated-at", "2024-04-01T00:00:00Z", "--format", format});
      auto expected = read_file(golden / (name + (format == "text" ? ".txt" : ".json")));
      if (r.out != expected) problems.push_back(name + "." + format + " differs from golden");
    }
    reports[name] = build_report(Ledger::open(ledger_dir), parse_policy(read_file(policy)),
                                 {at("2024-03-01T00:00:00Z"), at("2024-04-01T00:00:00Z")}, at("2024-04-01T00:00:00Z"));
  }

  const auto& clean = reports["clean"];
  if (!clean.chain_verified) problems.push_back("clean: chain not verified");
  for (const auto& [sec, list] : clean.findings_by_sox)
    if (!list.empty()) problems.push_back("clean: section " + std::to_string(sec) + " not empty");

  const auto& bad = reports["violations"];
  auto sections_of = [&](std::string_view rule) {
    std::set<int> out;
    for (const auto& [sec, list] : bad.findings_by_sox)
      for (const auto& f : list)
        if (f.rule_id == rule) out.insert(sec);
    return out;
  };
  if (!bad.chain_verified) problems.push_back("violations: chain not verified");
  if (bad.findings.size() != 2) problems.push_back("violations: " + std::to_string(bad.findings.size()) + " findings");
  if (sections_of(rules::kLockedRegionChange) != std::set<int>{103, 404})
    problems.push_back("violations: LOCKED_REGION_CHANGE sections wrong");
  if (sections_of(rules::kUnattestedLogicChange) != std::set<int>{103, 302, 404})
    problems.push_back("violations: UNATTESTED_LOGIC_CHANGE sections wrong");

  std::string d = "2 fixtures x {text, json} compared byte-for-byte";
  for (const auto& p : problems) d += "; " + p;
  return {problems.empty(), d};
}

// ---------------------------------------------------------------------------
// 9. Classification direction

int rank(Classification c) {
  switch (c) {
    case Classification::Modeling: return 0;
    case Classification::Indeterminate: return 1;
    case Classification::Operational: return 2;
  }
  return -1;
}

Outcome classification_direction() {
  std::mt19937_64 rng(9009);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int vectors = 1000;
  int violations = 0;
  for (int i = 0; i < vectors; ++i) {
    UsageMetrics m;
    m.distinct_actors = rng() % 6;
    m.persistence_days = 90.0 * unit(rng);
    m.mean_structural_volatility = unit(rng);
    m.mean_data_volatility = unit(rng);
    m.ingest_count = 2 + rng() % 50;

    auto more_actors = m;
    more_actors.distinct_actors += 1 + rng() % 3;
    if (rank(classify_usage(more_actors)) < rank(classify_usage(m))) ++violations;

    auto solo = m;
    solo.distinct_actors = 1;
    auto churn = solo;
    churn.mean_structural_volatility = std::min(1.0, solo.mean_structural_volatility + unit(rng));
    if (rank(classify_usage(churn)) > rank(classify_usage(solo))) ++violations;

    if (classify_usage(m) != classify_usage(m)) ++violations;
  }
  return {violations == 0, std::to_string(vectors) + " metric vectors, " + std::to_string(violations) + " violations"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "parser round-trip", parser_round_trip},
      {2, "translation invariance", translation_invariance},
      {3, "seeded-fault recall", seeded_fault_recall},
      {4, "diff reconstruction", diff_reconstruction},
      {5, "tamper evidence", tamper_evidence},
      {6, "trend oracle", trend_oracle},
      {7, "task-order brute force", task_order_brute_force},
      {8, "report goldens", report_goldens},
      {9, "classification direction", classification_direction},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= 60.0) {
      o.pass = false;
      o.detail += "; exceeded 60 s";
    }
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(2);
    line << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail << " [" << secs << " s]";
    std::cout << line.str() << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
