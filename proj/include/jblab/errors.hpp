#pragma once

#include <stdexcept>
#include <string>

namespace jblab {

enum class ErrorCode {
  InvalidArgument,
  OutOfDomain,
  PreconditionViolated,
  InsufficientPrecision,
  TruncationTooShallow,
  DomainViolation,
  DepthOverflow,
  NoSeed,
  BandViolation,
  LevelNotFound,
  AnnulusTooThin,
  ScalingViolation,
  RangeTooNarrow,
  ConfigError,
  ParseError,
};

const char* to_string(ErrorCode code);

/// @brief Library error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace jblab
