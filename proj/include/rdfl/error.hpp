#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdfl {

enum class ErrorCode {
  InvalidArgument,
  InvalidTopology,
  ShapeError,
  InvalidWeights,
  NumericError,
  DecodeError,
  UnknownNode,
  ProtocolError,
  NotFound,
  CorruptionError,
  CryptoError,
  AuthenticationError,
  ConfigError,
  TrainerError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidTopology: return "invalid-topology";
    case ErrorCode::ShapeError: return "shape-error";
    case ErrorCode::InvalidWeights: return "invalid-weights";
    case ErrorCode::NumericError: return "numeric-error";
    case ErrorCode::DecodeError: return "decode-error";
    case ErrorCode::UnknownNode: return "unknown-node";
    case ErrorCode::ProtocolError: return "protocol-error";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::CorruptionError: return "corruption-error";
    case ErrorCode::CryptoError: return "crypto-error";
    case ErrorCode::AuthenticationError: return "authentication-error";
    case ErrorCode::ConfigError: return "config-error";
    case ErrorCode::TrainerError: return "trainer-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message is prefixed with the code's text form.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

// Literal messages stay unallocated on the passing path.
inline void require(bool condition, ErrorCode code, const char* what) {
  if (!condition) fail(code, what);
}

}  // namespace rdfl
