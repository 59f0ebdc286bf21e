#pragma once

#include <stdexcept>
#include <string>

namespace sdglmc {

enum class ErrorCode {
  InvalidIndex,
  SelfLoop,
  DisconnectedGraph,
  PhiOutOfRange,
  InsufficientDistinctValues,
  RankDeficientBasis,
  DimensionMismatch,
  InvalidConfig,
  UnsupportedInteraction,
  CholeskyFailure,
  OverflowGuard,
  MissingTrend,
  MissingCalendar,
  TooFewChains,
  MissingTruth,
  Io,
};

const char* to_string(ErrorCode code);

// Numerical failures (non-PD precision, overflow) map to a different process
// exit code than validation failures.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace sdglmc
