#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hsflow {

using Complex = std::complex<double>;

/// Failure categories raised by the library. Each maps to a named error
/// condition of one of the modules.
enum class ErrorKind {
  PoleHit,
  PathBlocked,
  PoleInsideDisk,
  ConstraintViolated,
  DegenerateDecomposition,
  NearMultipleZero,
  ZeroHit,
  NonLocallyUnivalent,
  StepSizeUnderflow,
  WindowTooSmall,
  TupleBlowup,
  RegimeMismatch,
  OutOfDomain,
  BoundaryZero,
  UnderResolved,
  UnknownEntry,
  InvalidArgument,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Reflection in the unit circle, w -> 1 / conj(w).
inline Complex reflect(Complex w) { return 1.0 / std::conj(w); }

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace hsflow
