#pragma once

#include <ostream>
#include <span>
#include <string>

namespace sheetguard::cli {

// Stable scripting contract.
enum class ExitStatus : int {
  Ok = 0,                // success, no critical findings
  CriticalFindings = 1,  // completed, critical findings present
  Usage = 2,             // bad arguments or unusable input
  Integrity = 3,         // chain verification or digest mismatch
};

// Runs one command. `args` excludes the program name. Machine-readable
// output goes to `out`, diagnostics to `err`.
ExitStatus run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace sheetguard::cli
