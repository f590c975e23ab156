#pragma once

#include <stdexcept>
#include <string>

namespace edgtyper {

enum class ErrorKind {
  Io,
  Encoding,
  NoPythonFiles,
  Parse,
  UnknownSlot,
  InvalidTypeExpression,
  UnknownEntityRef,
  OracleUnavailable,
  MalformedResponse,
  OversizeCluster,
  CheckerMissing,
  CheckerCrashed,
  NonConverging,
  CorruptCheckpoint,
  SlotUniverseMismatch,
  Config,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace edgtyper
