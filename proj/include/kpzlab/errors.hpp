#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kpzlab {

/// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  domain,                  ///< argument outside the mathematical domain
  regime,                  ///< beta outside the subcritical window
  config_invalid,          ///< configuration or grid invariant violated
  numerical,               ///< positivity loss, non-finite values
  oracle_resolution,       ///< oracle could not reach its tolerance
  degenerate_denominator,  ///< ratio denominator indistinguishable from 0
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::regime: return "regime";
    case ErrorKind::config_invalid: return "config-invalid";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::oracle_resolution: return "oracle-resolution";
    case ErrorKind::degenerate_denominator: return "degenerate-denominator";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace kpzlab
