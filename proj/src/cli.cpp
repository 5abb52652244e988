#include "sheetguard/cli.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sheetguard/assessor.hpp"
#include "sheetguard/config.hpp"
#include "sheetguard/control.hpp"
#include "sheetguard/error.hpp"
#include "sheetguard/ledger.hpp"
#include "sheetguard/textio.hpp"

namespace fs = std::filesystem;

namespace sheetguard::cli {

namespace {

// Thrown inside a command to end it with a given status.
struct Exit {
  ExitStatus status;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Exit{ExitStatus::Usage, "cannot read " + path};
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Holds an exclusive advisory lock on <dir>/ledger.lock.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    fd_ = ::open((dir / "ledger.lock").c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0)
      throw Exit{ExitStatus::Usage, "cannot lock ledger directory " + dir.string()};
  }
  ~DirLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

ToolConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return parse_config(read_file(path));
}

ControlPolicy load_policy(const std::string& path) {
  if (path.empty()) return {};
  return parse_policy(read_file(path));
}

Ledger open_existing(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Exit{ExitStatus::Usage, "no ledger directory at " + dir};
  return Ledger::open(dir);
}

void require_intact(const Ledger& ledger) {
  auto v = verify_chain(ledger);
  if (!v.ok)
    throw Exit{ExitStatus::Integrity,
               "ledger integrity failure at record " + std::to_string(*v.first_bad_seq) + ": " + v.reason};
}

CellAddress cell_arg(const std::string& text) {
  auto a = parse_qualified_address(text);
  if (!a) throw Exit{ExitStatus::Usage, "bad cell '" + text + "' (expected e.g. Sheet1!B4)"};
  return *a;
}

Instant instant_arg(const std::string& text, const char* flag) {
  auto t = parse_instant(text);
  if (!t) throw Exit{ExitStatus::Usage, std::string(flag) + " expects an RFC 3339 timestamp, got '" + text + "'"};
  return *t;
}

ExitStatus print_findings(const std::vector<Finding>& findings, std::ostream& out) {
  bool critical = false;
  for (const auto& f : findings) {
    out << severity_name(f.severity) << '\t' << f.rule_id << '\t' << render_location(f.location) << '\t'
        << escape_field(f.message) << '\n';
    critical = critical || f.severity == Severity::Critical;
  }
  return critical ? ExitStatus::CriticalFindings : ExitStatus::Ok;
}

std::vector<Finding> touched_only(std::vector<Finding> findings, const ChangeSet& cs) {
  std::set<CellAddress> touched;
  for (const auto& e : cs.events) touched.insert(e.address);
  std::erase_if(findings, [&](const Finding& f) {
    auto* cell = std::get_if<CellAddress>(&f.location);
    return !cell || !touched.contains(*cell);
  });
  return findings;
}

std::string side(const std::optional<CellContent>& c) { return c ? escape_field(describe(*c)) : "-"; }

struct Options {
  std::string ledger_dir, snap, snap_b, policy, config, cell, from, to, out_path, generated_at;
  std::string format = "text";
  int window = 20;
  double z_threshold = 3.0;
  int min_points = 5;
};

ExitStatus cmd_ingest(const Options& o, std::ostream& out, std::ostream& err) {
  Snapshot s = parse_snapshot_file(read_file(o.snap));
  auto cfg = load_config(o.config);
  auto policy = load_policy(o.policy);
  DirLock lock(o.ledger_dir);
  Ledger ledger = Ledger::open(o.ledger_dir);
  require_intact(ledger);
  auto before = ledger.size();
  auto findings = ingest_snapshot(ledger, s, cfg.audit, policy);
  if (ledger.size() == before)
    err << "no-op: content digest " << snapshot_digest(s).hex << " equals the latest ingest\n";
  else
    err << "ingested " << snapshot_digest(s).hex << " (" << ledger.size() << " records)\n";
  return print_findings(findings, out);
}

ExitStatus cmd_audit(const Options& o, std::ostream& out) {
  Snapshot s = parse_snapshot_file(read_file(o.snap));
  auto cfg = load_config(o.config);
  return print_findings(audit_workbook(s, cfg.audit), out);
}

ExitStatus cmd_diff(const Options& o, std::ostream& out) {
  Snapshot a = parse_snapshot_file(read_file(o.snap));
  Snapshot b = parse_snapshot_file(read_file(o.snap_b));
  auto cs = diff_snapshots(a, b);
  for (const auto& e : cs.events)
    out << change_kind_name(e.kind) << '\t' << e.address.qualified() << '\t' << side(e.before) << '\t'
        << side(e.after) << '\n';
  return ExitStatus::Ok;
}

ExitStatus cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
  Ledger ledger = open_existing(o.ledger_dir);
  require_intact(ledger);
  auto policy = load_policy(o.policy);
  auto cfg = load_config(o.config);
  auto all = changesets(ledger);
  if (all.empty()) {
    err << "no change set recorded yet\n";
    return ExitStatus::Ok;
  }
  const auto& cs = all.back();
  auto findings = evaluate_policies(cs, policy, ledger);
  if (auto latest = ledger.load_object(cs.to_digest)) {
    auto audit = touched_only(audit_workbook(*latest, cfg.audit), cs);
    findings.insert(findings.end(), audit.begin(), audit.end());
  }
  sort_findings(findings);
  return print_findings(findings, out);
}

ExitStatus cmd_trend(const Options& o, std::ostream& out) {
  Ledger ledger = open_existing(o.ledger_dir);
  auto series = series_for_cell(ledger, cell_arg(o.cell));
  for (const auto& [t, v] : series.points) out << format_instant(t) << '\t' << escape_field(display(v)) << '\n';
  if (series.points.empty()) return ExitStatus::Ok;

  auto* latest = std::get_if<Number>(&series.points.back().second);
  if (!latest) return ExitStatus::Ok;
  TrendRule rule{series.address, o.window, o.z_threshold, o.min_points, Severity::Warning};
  CellSeries prior = series;
  prior.points.pop_back();
  auto v = trend_deviation(prior, latest->value, rule);
  out << "verdict\tvalue=" << format_decimal(v.new_value) << "\tpoints=" << v.points_used
      << "\tmean=" << format_decimal(v.mean) << "\tstddev=" << format_decimal(v.stddev)
      << "\tz=" << format_decimal(v.z) << "\tviolated=" << (v.violated ? "true" : "false") << '\n';
  return ExitStatus::Ok;
}

ExitStatus cmd_history(const Options& o, std::ostream& out) {
  Ledger ledger = open_existing(o.ledger_dir);
  for (const auto& h : change_history(ledger, cell_arg(o.cell)))
    out << format_instant(h.at) << '\t' << escape_field(h.actor) << '\t' << change_kind_name(h.event.kind) << '\t'
        << side(h.event.before) << '\t' << side(h.event.after) << '\n';
  return ExitStatus::Ok;
}

ExitStatus cmd_profile(const Options& o, std::ostream& out) {
  Ledger ledger = open_existing(o.ledger_dir);
  auto cfg = load_config(o.config);
  std::vector<Finding> all;
  for (const auto& b : findings_batches(ledger)) all.insert(all.end(), b.findings.begin(), b.findings.end());
  auto p = risk_profile(ledger, all, cfg.classification);
  const auto& m = p.metrics;
  out << "ingests\t" << m.ingest_count << '\n'
      << "distinct_actors\t" << m.distinct_actors << '\n'
      << "persistence_days\t" << format_decimal(m.persistence_days) << '\n'
      << "mean_structural_volatility\t" << format_decimal(m.mean_structural_volatility) << '\n'
      << "mean_data_volatility\t" << format_decimal(m.mean_data_volatility) << '\n'
      << "classification\t" << classification_name(p.classification) << '\n'
      << "risk_score\t" << format_decimal(p.risk_score) << '\n';
  for (const auto& why : p.rationale) out << "rationale\t" << why << '\n';
  return ExitStatus::Ok;
}

ExitStatus cmd_report(const Options& o, std::ostream& out, std::ostream& err) {
  Ledger ledger = open_existing(o.ledger_dir);
  auto policy = load_policy(o.policy);
  auto cfg = load_config(o.config);
  ReportPeriod period{instant_arg(o.from, "--from"), instant_arg(o.to, "--to")};
  Instant generated = o.generated_at.empty() ? now_utc() : instant_arg(o.generated_at, "--generated-at");
  auto report = build_report(ledger, policy, period, generated, cfg.classification);
  std::string rendered = o.format == "json" ? render_report_json(report) : render_report_text(report);
  if (o.out_path.empty()) {
    out << rendered;
  } else {
    std::ofstream file(o.out_path, std::ios::binary | std::ios::trunc);
    file << rendered;
    if (!file) throw Exit{ExitStatus::Usage, "cannot write " + o.out_path};
    err << "report written to " << o.out_path << '\n';
  }
  if (!report.chain_verified) {
    err << "ledger integrity failure at record " << *report.first_bad_seq << '\n';
    return ExitStatus::Integrity;
  }
  return report.material_weaknesses.empty() ? ExitStatus::Ok : ExitStatus::CriticalFindings;
}

ExitStatus cmd_verify(const Options& o, std::ostream& out) {
  Ledger ledger = open_existing(o.ledger_dir);
  auto v = verify_chain(ledger);
  if (v.ok) {
    out << "OK n=" << ledger.size() << '\n';
    return ExitStatus::Ok;
  }
  out << "FAIL seq=" << *v.first_bad_seq << '\t' << v.reason << '\n';
  return ExitStatus::Integrity;
}

ExitStatus status_for(const Error& e) {
  switch (e.code()) {
    case Errc::DigestMismatch:
    case Errc::ConflictingEvent:
    case Errc::StorageFailure:
      return ExitStatus::Integrity;
    default:
      return ExitStatus::Usage;
  }
}

}  // namespace

ExitStatus run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spreadsheet integrity monitor: audit, diff, ledger, policy checks and reports", "sheetguard"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "Record a snapshot in a ledger and report new findings");
  ingest->add_option("ledger-dir", o.ledger_dir)->required();
  ingest->add_option("snap-file", o.snap)->required();
  ingest->add_option("--policy", o.policy, "Control policy file");
  ingest->add_option("--config", o.config, "Audit config file");

  auto* audit = app.add_subcommand("audit", "Statically audit one snapshot");
  audit->add_option("snap-file", o.snap)->required();
  audit->add_option("--config", o.config, "Audit config file");

  auto* diff = app.add_subcommand("diff", "Classify cell changes between two snapshots");
  diff->add_option("snap-a", o.snap)->required();
  diff->add_option("snap-b", o.snap_b)->required();

  auto* check = app.add_subcommand("check", "Re-evaluate the latest change set against a policy");
  check->add_option("ledger-dir", o.ledger_dir)->required();
  check->add_option("--policy", o.policy, "Control policy file")->required();
  check->add_option("--config", o.config, "Audit config file");

  auto* trend = app.add_subcommand("trend", "Print a cell's value series and its latest z-score");
  trend->add_option("ledger-dir", o.ledger_dir)->required();
  trend->add_option("cell", o.cell)->required();
  trend->add_option("--window", o.window, "Prior points considered")->check(CLI::Range(5, 100000));
  trend->add_option("--z-threshold", o.z_threshold, "Deviation threshold")->check(CLI::PositiveNumber);
  trend->add_option("--min-points", o.min_points, "Points needed before judging")->check(CLI::Range(5, 100000));

  auto* history = app.add_subcommand("history", "List every recorded change to a cell");
  history->add_option("ledger-dir", o.ledger_dir)->required();
  history->add_option("cell", o.cell)->required();

  auto* profile = app.add_subcommand("profile", "Usage metrics, classification and risk score");
  profile->add_option("ledger-dir", o.ledger_dir)->required();
  profile->add_option("--config", o.config, "Classification config file");

  auto* report = app.add_subcommand("report", "Render a SOX-mapped compliance report");
  report->add_option("ledger-dir", o.ledger_dir)->required();
  report->add_option("--from", o.from, "Period start (inclusive)")->required();
  report->add_option("--to", o.to, "Period end (exclusive)")->required();
  report->add_option("--policy", o.policy, "Control policy file")->required();
  report->add_option("--out", o.out_path, "Write the report here instead of stdout");
  report->add_option("--generated-at", o.generated_at, "Fixed generation time");
  report->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  report->add_option("--config", o.config, "Classification config file");

  auto* verify = app.add_subcommand("verify", "Verify the ledger hash chain");
  verify->add_option("ledger-dir", o.ledger_dir)->required();

  std::vector<const char*> argv{"sheetguard"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ExitStatus::Ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return ExitStatus::Usage;
  }

  try {
    if (*ingest) return cmd_ingest(o, out, err);
    if (*audit) return cmd_audit(o, out);
    if (*diff) return cmd_diff(o, out);
    if (*check) return cmd_check(o, out, err);
    if (*trend) return cmd_trend(o, out);
    if (*history) return cmd_history(o, out);
    if (*profile) return cmd_profile(o, out);
    if (*report) return cmd_report(o, out, err);
    if (*verify) return cmd_verify(o, out);
  } catch (const Exit& e) {
    err << "error: " << e.message << '\n';
    return e.status;
  } catch (const Error& e) {
    err << "error: " << errc_name(e.code()) << ": " << e.what() << '\n';
    return status_for(e);
  }
  return ExitStatus::Usage;
}

}  // namespace sheetguard::cli
