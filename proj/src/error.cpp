#include "tailmix/error.hpp"

namespace tailmix {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::EmptySample: return "empty sample";
    case ErrorKind::TooFewExceedances: return "too few exceedances";
    case ErrorKind::TooFewBlocks: return "too few blocks";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::SupportViolation: return "support violation";
    case ErrorKind::AllCandidatesInfeasible: return "all candidates infeasible";
    case ErrorKind::DegenerateSample: return "degenerate sample";
    case ErrorKind::ContinuityUnsolvable: return "continuity unsolvable";
    case ErrorKind::NoJunction: return "no junction";
    case ErrorKind::NonIntegrableTail: return "non-integrable tail";
    case ErrorKind::NotPositiveDefinite: return "not positive definite";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

}  // namespace tailmix
