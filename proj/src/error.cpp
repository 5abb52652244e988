#include "sheetguard/error.hpp"

namespace sheetguard {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::DuplicateCell: return "DuplicateCell";
    case Errc::BadAddress: return "BadAddress";
    case Errc::BadTimestamp: return "BadTimestamp";
    case Errc::BadValue: return "BadValue";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnbalancedParens: return "UnbalancedParens";
    case Errc::UnknownToken: return "UnknownToken";
    case Errc::WorkbookMismatch: return "WorkbookMismatch";
    case Errc::NoChange: return "NoChange";
    case Errc::DigestMismatch: return "DigestMismatch";
    case Errc::ConflictingEvent: return "ConflictingEvent";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case Errc::EmptyLedger: return "EmptyLedger";
    case Errc::UnknownRule: return "UnknownRule";
    case Errc::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace sheetguard
