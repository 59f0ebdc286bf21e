#include "sdglmc/error.hpp"

namespace sdglmc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidIndex: return "InvalidIndex";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::PhiOutOfRange: return "PhiOutOfRange";
    case ErrorCode::InsufficientDistinctValues: return "InsufficientDistinctValues";
    case ErrorCode::RankDeficientBasis: return "RankDeficientBasis";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnsupportedInteraction: return "UnsupportedInteraction";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::OverflowGuard: return "OverflowGuard";
    case ErrorCode::MissingTrend: return "MissingTrend";
    case ErrorCode::MissingCalendar: return "MissingCalendar";
    case ErrorCode::TooFewChains: return "TooFewChains";
    case ErrorCode::MissingTruth: return "MissingTruth";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  return code == ErrorCode::CholeskyFailure || code == ErrorCode::OverflowGuard;
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace sdglmc
