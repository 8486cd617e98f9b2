#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace su11 {

// Series arithmetic on operands built with different degree caps.
class DegreeCapMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A derivative or moment whose total order exceeds the series truncation.
class OrderExceedsCap : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Physical parameters outside their domain (negative gain, T outside [0,1], ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A Hermitian expectation came out with a non-negligible imaginary part, or a
// variance came out negative. Indicates a broken moment table, never user error.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// |d<X>/dphi| below threshold: the operating point carries no phase signal.
class DivergentSensitivity : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Vacuum-like configuration: N == 0 or F <= 0.
class DegenerateConfiguration : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Fock truncation too small for the requested state or channel.
class CutoffError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Scientific notation for small masses and deficits in error messages.
inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

}  // namespace detail

}  // namespace su11
