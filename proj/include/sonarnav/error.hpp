#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sonarnav {

enum class ErrorCode {
  InvalidArgument,
  InvalidMap,
  OriginOutsideFreeSpace,
  InsetDegenerate,
  TooFewWaypoints,
  NegativeTime,
  EmptyScan,
  EmptyFreeSpace,
  NonpositiveSigma,
  AllWeightsZero,
  DegenerateWeights,
  LocalizationFailed,
  NoPathFound,
  MissionFailed,
  ParseError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sonarnav
