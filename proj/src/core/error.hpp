#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace policysimp {

// Numeric values are part of the C API (psimp_status) and must stay stable.
enum class ErrorCode : int {
  Config = 1,
  Io = 2,
  Schema = 3,
  Precondition = 4,
  Transport = 5,
  Endpoint = 6,
  ExhaustedRetries = 7,
  MalformedResponse = 8,
  FixtureMissing = 9,
  MissingTemplate = 10,
  GenerationFailed = 11,
  DimensionMismatch = 12,
  ZeroVector = 13,
  ArityMismatch = 14,
  VerdictParse = 15,
  DimensionMissing = 16,
  DegenerateTriplet = 17,
  PolicyMixture = 18,
  KeyMismatch = 19,
  EmptyReferences = 20,
  Internal = 99,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the candidate factory when roster entry `model_index` could not
// produce a usable candidate.
class GenerationFailed : public Error {
 public:
  GenerationFailed(int model_index, const std::string& message)
      : Error(ErrorCode::GenerationFailed, message), model_index_(model_index) {}

  int model_index() const noexcept { return model_index_; }

 private:
  int model_index_;
};

enum class VerdictFailure {
  NoDecision,
  IndexOutOfRange,
  SameIndex,
  MissingDimension,
};

std::string_view verdict_failure_name(VerdictFailure f) noexcept;

class VerdictParseError : public Error {
 public:
  VerdictParseError(VerdictFailure reason, const std::string& message)
      : Error(ErrorCode::VerdictParse, message), reason_(reason) {}

  VerdictFailure reason() const noexcept { return reason_; }

 private:
  VerdictFailure reason_;
};

}  // namespace policysimp
