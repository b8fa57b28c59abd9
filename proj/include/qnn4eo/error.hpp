#pragma once

#include <stdexcept>
#include <string>

namespace qnn4eo {

enum class ErrorCode {
  InvalidArgument = 1,
  OutOfRange = 2,
  ShapeMismatch = 3,
  Io = 4,
  CorruptData = 5,
  NonFinite = 6,
  Internal = 7,
};

// All library failures are reported as Error; the code survives the trip
// through the C API.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace qnn4eo
