#include "damopt/error.hpp"

namespace damopt {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDomain: return "DOMAIN";
    case ErrorCode::kUsage: return "USAGE";
    case ErrorCode::kOverflow: return "OVERFLOW";
    case ErrorCode::kNonAdmissible: return "NON_ADMISSIBLE";
    case ErrorCode::kCapacity: return "CAPACITY";
    case ErrorCode::kDivergence: return "DIVERGENCE";
    case ErrorCode::kIo: return "IO";
  }
  return "UNKNOWN";
}

}  // namespace damopt
