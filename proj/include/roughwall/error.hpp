#pragma once

#include <stdexcept>
#include <string>

namespace roughwall {

/// Failure categories; the CLI maps them onto exit codes.
enum class ErrorKind {
  singular_input,
  domain,
  range,
  precondition,
  meshing,
  bracket,
  non_convergence,
  singular_system,
  pattern_mismatch,
  validation,
  parse,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::singular_input: return "singular-input";
    case ErrorKind::domain: return "domain";
    case ErrorKind::range: return "range";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::meshing: return "meshing";
    case ErrorKind::bracket: return "bracket";
    case ErrorKind::non_convergence: return "non-convergence";
    case ErrorKind::singular_system: return "singular-system";
    case ErrorKind::pattern_mismatch: return "pattern-mismatch";
    case ErrorKind::validation: return "validation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

/// Process exit status for a failure: 2 for invalid input, 3 for numerical failure, 4 for I/O.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::io: return 4;
    case ErrorKind::meshing:
    case ErrorKind::bracket:
    case ErrorKind::non_convergence:
    case ErrorKind::singular_system: return 3;
    default: return 2;
  }
}

}  // namespace roughwall
