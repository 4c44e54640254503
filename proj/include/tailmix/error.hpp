#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tailmix {

/// Failure categories raised by the library. The CLI maps every one of
/// them to exit code 2 and prints the message, which names the stage.
enum class ErrorKind {
  InvalidArgument,
  EmptySample,
  TooFewExceedances,
  TooFewBlocks,
  NonConvergence,
  SupportViolation,
  AllCandidatesInfeasible,
  DegenerateSample,
  ContinuityUnsolvable,
  NoJunction,
  NonIntegrableTail,
  NotPositiveDefinite,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

}  // namespace tailmix
