#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bidscreen {

/// Every domain failure the library can raise. The enumerator names double as
/// the wire-level error names reported by the CLI and the HTTP service.
enum class ErrorKind {
  MissingColumn,
  UnparsableRow,
  NonPositiveBid,
  DuplicateBid,
  TooFewBids,
  DegenerateTender,
  UndefinedScreen,
  SingleClassData,
  NonConvergence,
  BaseLearnerFailure,
  SchemaMismatch,
  EmptyClass,
  EmptyInput,
  InvalidThresholds,
  InvalidConfig,
  TooManyFirms,
  ZeroImportanceEverywhere,
  NotFound,
  Conflict,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

private:
  ErrorKind kind_;
};

}  // namespace bidscreen
