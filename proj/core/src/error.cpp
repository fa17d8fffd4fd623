#include "bidscreen/error.hpp"

namespace bidscreen {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::UnparsableRow: return "UnparsableRow";
    case ErrorKind::NonPositiveBid: return "NonPositiveBid";
    case ErrorKind::DuplicateBid: return "DuplicateBid";
    case ErrorKind::TooFewBids: return "TooFewBids";
    case ErrorKind::DegenerateTender: return "DegenerateTender";
    case ErrorKind::UndefinedScreen: return "UndefinedScreen";
    case ErrorKind::SingleClassData: return "SingleClassData";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::BaseLearnerFailure: return "BaseLearnerFailure";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidThresholds: return "InvalidThresholds";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::TooManyFirms: return "TooManyFirms";
    case ErrorKind::ZeroImportanceEverywhere: return "ZeroImportanceEverywhere";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::Conflict: return "Conflict";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace bidscreen
