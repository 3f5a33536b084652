#pragma once

#include <stdexcept>
#include <string>

namespace ibcjump {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define IBCJUMP_DEFINE_ERROR(Name)      \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

// params
IBCJUMP_DEFINE_ERROR(RangeError);
IBCJUMP_DEFINE_ERROR(ConstraintError);
IBCJUMP_DEFINE_ERROR(SetError);
IBCJUMP_DEFINE_ERROR(ZeroCoupling);

// spinor_basis
IBCJUMP_DEFINE_ERROR(DomainError);

// wavefunction_current
IBCJUMP_DEFINE_ERROR(OriginError);
IBCJUMP_DEFINE_ERROR(ZeroDensity);

// trajectory
IBCJUMP_DEFINE_ERROR(DegenerateError);
IBCJUMP_DEFINE_ERROR(PoleError);
IBCJUMP_DEFINE_ERROR(StepFailure);
IBCJUMP_DEFINE_ERROR(SignError);
IBCJUMP_DEFINE_ERROR(FitError);

// jump_process
IBCJUMP_DEFINE_ERROR(VacuumEmpty);
IBCJUMP_DEFINE_ERROR(MajorantError);
IBCJUMP_DEFINE_ERROR(BalanceViolation);

// ensemble_stats
IBCJUMP_DEFINE_ERROR(InsufficientEvents);
IBCJUMP_DEFINE_ERROR(NormalizationError);

// cli
IBCJUMP_DEFINE_ERROR(ValidationError);

#undef IBCJUMP_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace ibcjump
