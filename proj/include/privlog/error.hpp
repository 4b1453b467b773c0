#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace privlog {

enum class ErrorCode {
  InvalidLength,
  EmptyInput,
  AuthFailure,
  MalformedBox,
  WeakKey,
  InvalidSpans,
  OutOfOrderDate,
  InvalidWindow,
  ContextMismatch,
  CorruptState,
  UnsupportedVersion,
  InvalidArgument,
  Io,
  Crypto,
};

std::string_view to_string(ErrorCode code) noexcept;

// Stable process exit status for each error (CLI scripting contract).
int exit_code(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace privlog
