#pragma once

#include <stdexcept>
#include <string>

namespace normdescent {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not line up.
struct ShapeError : Error {
  using Error::Error;
};

// Bad argument values: non-finite data, empty input, out-of-range parameter.
struct ValidationError : Error {
  using Error::Error;
};

// The requested dual norm or LMO has no implemented closed form.
struct UnsupportedNormError : Error {
  using Error::Error;
};

// A symmetric input has an eigenvalue below the PSD tolerance.
struct NotPsdError : Error {
  using Error::Error;
};

// The matrix is numerically singular and no regularization was supplied.
struct SingularityError : Error {
  using Error::Error;
};

// An iteration hit its cap. best_estimate holds the last iterate's value so
// callers can decide whether it is still usable.
struct ConvergenceError : Error {
  double best_estimate;
  ConvergenceError(const std::string& msg, double best)
      : Error(msg), best_estimate(best) {}
};

}  // namespace normdescent
