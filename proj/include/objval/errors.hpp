#pragma once

#include <stdexcept>
#include <string>

namespace objval {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define OBJVAL_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

OBJVAL_DEFINE_ERROR(ConfigError);
OBJVAL_DEFINE_ERROR(FormatError);
OBJVAL_DEFINE_ERROR(NumericalBreakdown);
OBJVAL_DEFINE_ERROR(InfeasibleInstance);
OBJVAL_DEFINE_ERROR(UnboundedRelaxation);
OBJVAL_DEFINE_ERROR(NoFractionalVariable);
OBJVAL_DEFINE_ERROR(DegenerateNorm);
OBJVAL_DEFINE_ERROR(DimensionMismatch);
OBJVAL_DEFINE_ERROR(DegenerateLp);
OBJVAL_DEFINE_ERROR(Diverged);
OBJVAL_DEFINE_ERROR(InsufficientHistory);
OBJVAL_DEFINE_ERROR(DegenerateIncumbent);
OBJVAL_DEFINE_ERROR(CensoredRun);
OBJVAL_DEFINE_ERROR(DegenerateLabels);
OBJVAL_DEFINE_ERROR(DegenerateTrueValue);

#undef OBJVAL_DEFINE_ERROR

}  // namespace objval
