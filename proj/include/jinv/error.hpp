#pragma once

#include <stdexcept>
#include <string>

namespace jinv {

enum class ErrorKind {
  invalid_input,
  singular_recurrence,
  convergence_failure,
  degenerate_spectrum,
  inconsistent_eigensystem,
  noninvertible_data,
  degenerate_data,
  non_tridiagonal_synthesis,
  recursion_degenerate,
  singular_edge,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::singular_recurrence: return "singular recurrence";
    case ErrorKind::convergence_failure: return "convergence failure";
    case ErrorKind::degenerate_spectrum: return "degenerate spectrum";
    case ErrorKind::inconsistent_eigensystem: return "inconsistent eigensystem";
    case ErrorKind::noninvertible_data: return "noninvertible data";
    case ErrorKind::degenerate_data: return "degenerate data";
    case ErrorKind::non_tridiagonal_synthesis: return "non-tridiagonal synthesis";
    case ErrorKind::recursion_degenerate: return "recursion degenerate";
    case ErrorKind::singular_edge: return "singular edge";
  }
  return "unknown";
}

/// Every failure raised by the library. `index()` is the 1-based node or
/// level the failure refers to, or -1 when it is not tied to one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, long index = -1)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }
  long index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  long index_;
};

}  // namespace jinv
