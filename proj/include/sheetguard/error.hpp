#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sheetguard {

enum class Errc {
  MalformedHeader,
  DuplicateCell,
  BadAddress,
  BadTimestamp,
  BadValue,
  SyntaxError,
  UnbalancedParens,
  UnknownToken,
  WorkbookMismatch,
  NoChange,
  DigestMismatch,
  ConflictingEvent,
  StorageFailure,
  NonMonotonicTimestamp,
  EmptyLedger,
  UnknownRule,
  BadConfig,
};

std::string_view errc_name(Errc code);

// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Formula syntax errors carry the 0-based offset into the source.
class FormulaError : public Error {
 public:
  FormulaError(Errc code, std::size_t position, const std::string& what)
      : Error(code, what), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace sheetguard
