#pragma once

#include <stdexcept>
#include <string>

namespace biascope {

// Every failure raised by the library derives from Error. kind() is the
// stable, machine-parsable class name printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define BIASCOPE_ERROR_CLASS(Name, tag)                                  \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& message) : Error(tag, message) {} \
  };

BIASCOPE_ERROR_CLASS(ParseError, "parse_error")
BIASCOPE_ERROR_CLASS(ValidationError, "validation_error")
BIASCOPE_ERROR_CLASS(MergeError, "merge_error")
BIASCOPE_ERROR_CLASS(FormatError, "format_error")
BIASCOPE_ERROR_CLASS(LookupError, "lookup_error")
BIASCOPE_ERROR_CLASS(RangeError, "range_error")
BIASCOPE_ERROR_CLASS(AlignmentError, "alignment_error")
BIASCOPE_ERROR_CLASS(DimensionError, "dimension_error")
BIASCOPE_ERROR_CLASS(DegeneracyError, "degeneracy_error")
BIASCOPE_ERROR_CLASS(IoError, "io_error")
BIASCOPE_ERROR_CLASS(UsageError, "usage_error")

#undef BIASCOPE_ERROR_CLASS

// Solver gave up before reaching the KKT tolerance. Carries the best residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double best_residual)
      : Error("convergence_error", message), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace biascope
