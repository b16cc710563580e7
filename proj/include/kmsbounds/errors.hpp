#pragma once

#include <stdexcept>
#include <string>

namespace kmsbounds {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class invalid_argument_error : public error {
 public:
  using error::error;
};

/// Raised when a dense operator would exceed the configured dimension cap.
class dimension_cap_error : public error {
 public:
  using error::error;
};

class not_hermitian_error : public error {
 public:
  using error::error;
};

class not_eta_free_error : public error {
 public:
  using error::error;
};

class commutation_error : public error {
 public:
  using error::error;
};

/// Bracket growth or iteration budget exhausted in a root or extremum search.
class convergence_error : public error {
 public:
  using error::error;
};

}  // namespace kmsbounds
