#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace graphdiff {

// Invalid caller-supplied parameter (bad probability, shape mismatch, ...).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not produce a finite answer.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Regression over fewer than two distinct abscissae.
struct DegenerateFitError : NumericError {
  using NumericError::NumericError;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ParameterError(message);
}

inline bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

inline void require_probability(double p, const char* name) {
  if (!is_probability(p)) throw ParameterError(std::string(name) + " must be in [0,1]");
}

inline void require_nonnegative(double x, const char* name) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw ParameterError(std::string(name) + " must be >= 0");
}

inline void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError(std::string(name) + " must be > 0");
}

}  // namespace detail
}  // namespace graphdiff
