#include "privlog/error.hpp"

namespace privlog {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidLength: return "InvalidLength";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::MalformedBox: return "MalformedBox";
    case ErrorCode::WeakKey: return "WeakKey";
    case ErrorCode::InvalidSpans: return "InvalidSpans";
    case ErrorCode::OutOfOrderDate: return "OutOfOrderDate";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::ContextMismatch: return "ContextMismatch";
    case ErrorCode::CorruptState: return "CorruptState";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Crypto: return "Crypto";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidWindow: return 2;
    case ErrorCode::OutOfOrderDate: return 3;
    case ErrorCode::AuthFailure: return 4;
    case ErrorCode::ContextMismatch: return 5;
    case ErrorCode::CorruptState:
    case ErrorCode::UnsupportedVersion: return 6;
    default: return 1;
  }
}

}  // namespace privlog
