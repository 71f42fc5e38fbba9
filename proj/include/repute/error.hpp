#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repute {

enum class ErrorCode {
  // record validation
  SelfRating,
  ValueOutOfRange,
  NegativeWeight,
  NonPositiveAmount,
  MissingField,
  InvalidField,
  // state and hashing
  NonFiniteValue,
  InvalidState,
  // engine
  EmptyBatch,
  NonMonotonicTime,
  InvalidConfig,
  RecordOutsideWindow,
  // scoping
  UnsortedInput,
  InvalidPolicy,
  // consensus
  DuplicateSubmission,
  RoundClosed,
  LateSubmission,
  UnknownAgencyReputation,
  NoEligibleProposer,
  RoundNotValid,
  // storage
  UnreadableInput,
  SnapshotConflict,
  IoFailure,
  NotFound,
  HashMismatch,
  // simnet
  InvalidSpec,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace repute
