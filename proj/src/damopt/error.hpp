#pragma once

#include <stdexcept>
#include <string>

namespace damopt {

// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  kDomain = 1,
  kUsage = 2,
  kOverflow = 3,
  kNonAdmissible = 4,
  kCapacity = 5,
  kDivergence = 6,
  kIo = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code) noexcept;

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace damopt
