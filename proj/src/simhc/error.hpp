#pragma once

#include <stdexcept>
#include <string>

namespace simhc {

enum class ErrorCode {
  InvalidArgument,
  Degenerate,
  Io,
  Format,
  NoSolution,
  Internal,
};

// All recoverable failures in the core are reported as simhc::Error; the C
// API maps the code onto simhc_status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace simhc
